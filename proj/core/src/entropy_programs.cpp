#include "conelab/entropy_programs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace conelab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSupportTol = 1e-9;

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

Matrix herm(const Matrix& m) { return 0.5 * (m + m.adjoint()); }

void check_psd(const HermitianOperator& x, const char* role) {
  double scale = std::max(1.0, x.matrix().cwiseAbs().maxCoeff());
  if (min_eigenvalue(x.matrix()) < -1e-8 * scale)
    fail(std::string("entropy program: ") + role + " must be PSD");
}

void check_same_layout(const HermitianOperator& p, const HermitianOperator& q) {
  if (p.dims() != q.dims())
    fail("entropy program: operators must share one factor layout, got " +
         p.dims().describe() + " vs " + q.dims().describe());
}

void check_normalized(const HermitianOperator& x, const char* role) {
  if (std::abs(x.trace() - 1.0) > 1e-6)
    fail(std::string("entropy program: ") + role + " must be a normalized state");
}

// Validates the labels and returns (a side, b side) as subprofiles in layout
// order; both sides must be nonempty.
std::pair<DimProfile, DimProfile> split_sides(const DimProfile& dims,
                                              const std::vector<std::string>& a_labels) {
  if (a_labels.empty()) fail("entropy program: empty factor-label list");
  std::set<std::string> a_set(a_labels.begin(), a_labels.end());
  if (a_set.size() != a_labels.size())
    fail("entropy program: repeated factor label");
  std::vector<Factor> a_side, b_side;
  for (const Factor& f : dims.factors()) {
    if (a_set.count(f.label)) {
      a_side.push_back(f);
      a_set.erase(f.label);
    } else {
      b_side.push_back(f);
    }
  }
  if (!a_set.empty()) fail("entropy program: label not in layout: " + *a_set.begin());
  if (b_side.empty()) fail("entropy program: labels cover the whole layout");
  return {DimProfile(std::vector<Factor>(a_side)), DimProfile(std::vector<Factor>(b_side))};
}

// Linear map lifting an operator on the b side to I_a (x) Y arranged in the
// layout order of `dims`.
std::function<Matrix(const Matrix&)> lift_identity_times(const DimProfile& dims,
                                                         const DimProfile& a_side,
                                                         const DimProfile& b_side) {
  // kron(I_a, y) lives on [a factors..., b factors...]; new_order[i] says
  // where the i-th factor of the original layout sits in that concatenation.
  std::vector<int> concat_dims;
  std::vector<std::string> concat_labels;
  for (const Factor& f : a_side.factors()) {
    concat_dims.push_back(f.dim);
    concat_labels.push_back(f.label);
  }
  for (const Factor& f : b_side.factors()) {
    concat_dims.push_back(f.dim);
    concat_labels.push_back(f.label);
  }
  std::vector<int> new_order;
  for (const Factor& f : dims.factors()) {
    auto it = std::find(concat_labels.begin(), concat_labels.end(), f.label);
    new_order.push_back(static_cast<int>(it - concat_labels.begin()));
  }
  int d_a = a_side.total_dim();
  return [d_a, concat_dims, new_order](const Matrix& y) {
    return permute_factors_m(kron(Matrix::Identity(d_a, d_a), y), concat_dims, new_order);
  };
}

// True support-leak trace of p outside the support of q.
double support_leak(const Matrix& p, const Matrix& q) {
  Matrix pi = support_projector(q, kSupportTol);
  Matrix outside = Matrix::Identity(p.rows(), p.cols()) - pi;
  return (outside * p).trace().real();
}

double bits_log2(double v) {
  if (v < 1e-300) return -kInf;
  return std::log2(v);
}

double bits_neg_log2(double v) {
  if (v < 1e-300) return kInf;
  return -std::log2(v);
}

// Swap-transpose on a two-factor matrix: SWAP X^T SWAP with the factor order
// exchanged; for a Hermitian Choi matrix this is the adjoint map's Choi.
Matrix swap_transpose_m(const Matrix& x, int d_first, int d_second) {
  Matrix t = x.transpose();
  return permute_factors_m(t, {d_first, d_second}, {1, 0});
}

// Objective coefficient C on the Choi space of Psi: B -> A' such that
// <(id_A (x) Psi)(rho), tau_AA'> = Tr[C J_Psi]. Assembled column by column
// from the verified contraction
//   (id (x) Psi)(rho) = Tr_B[(rho^{T_B} (x) I_A') (I_A (x) J)].
Matrix recovery_objective(const HermitianOperator& rho, int d_a, int d_b,
                          const std::string& b_label) {
  Matrix rho_tb = partial_transpose(rho, b_label).matrix();
  Matrix m1 = kron(rho_tb, Matrix::Identity(d_a, d_a));
  Matrix tau = max_entangled(d_a).matrix();
  int dj = d_b * d_a;
  Matrix c = Matrix::Zero(dj, dj);
  for (int k = 0; k < dj; ++k) {
    for (int l = 0; l < dj; ++l) {
      Matrix unit = Matrix::Zero(dj, dj);
      unit(k, l) = 1.0;
      Matrix m2 = kron(Matrix::Identity(d_a, d_a), unit);
      Matrix reduced = partial_trace_m(m1 * m2, {d_a, d_b, d_a}, {1});
      c(l, k) = (tau * reduced).trace();
    }
  }
  return herm(c);
}

double pseudo_scale(const HermitianOperator& x) {
  return std::max(1.0, x.matrix().cwiseAbs().maxCoeff());
}

}  // namespace

std::string to_string(EntropyQuantity q) {
  switch (q) {
    case EntropyQuantity::DmaxRestricted: return "d_max_restricted";
    case EntropyQuantity::DmaxDualShift: return "d_max_dual_shift";
    case EntropyQuantity::DmaxViaNorm: return "d_max_via_norm";
    case EntropyQuantity::HminRestricted: return "h_min_restricted";
    case EntropyQuantity::HminDualShift: return "h_min_dual_shift";
    case EntropyQuantity::HminRecovery: return "h_min_via_recovery";
    case EntropyQuantity::HminDoublyRestricted: return "h_min_doubly_restricted";
    case EntropyQuantity::HmaxRestricted: return "h_max_restricted";
    case EntropyQuantity::HypothesisTesting: return "hypothesis_testing";
    case EntropyQuantity::SmoothedDmax: return "smoothed_d_max";
    case EntropyQuantity::SmoothedHmin: return "smoothed_h_min";
    case EntropyQuantity::ExtHminBGivenA: return "ext_h_min_b_given_a";
    case EntropyQuantity::ExtHminAGivenB: return "ext_h_min_a_given_b";
  }
  return "unknown";
}

FidelityBlock add_fidelity_block(ConicProgram& prog, const MatrixExpr& top,
                                 const MatrixExpr& bottom) {
  if (!top.dims().same_dims(bottom.dims()))
    fail("fidelity block: corner expressions differ in shape");
  int d = top.dim();
  int big = 2 * d;
  DimProfile block_dims{{"fidelity_block", big}};
  VarRef z = prog.add_hermitian_variable(block_dims, "fidelity_block");
  prog.add_psd(prog.var(z));
  DimProfile corner = top.dims();
  auto top_left = [d](const Matrix& m) { return Matrix(m.topLeftCorner(d, d)); };
  auto bottom_right = [d](const Matrix& m) { return Matrix(m.bottomRightCorner(d, d)); };
  Matrix zero = Matrix::Zero(d, d);
  prog.add_matrix_equality(prog.var(z).transformed(corner, top_left).minus(top), zero);
  prog.add_matrix_equality(prog.var(z).transformed(corner, bottom_right).minus(bottom),
                           zero);
  Matrix pairing = Matrix::Zero(big, big);
  pairing.topRightCorner(d, d) = 0.5 * Matrix::Identity(d, d);
  pairing.bottomLeftCorner(d, d) = 0.5 * Matrix::Identity(d, d);
  return {z, pairing};
}

EntropyResult d_max_restricted(const HermitianOperator& p, const HermitianOperator& q,
                               const ConeSpec& cone, const SolverOptions& opts) {
  check_same_layout(p, q);
  check_psd(p, "first argument");
  check_psd(q, "second argument");
  if (q.matrix().cwiseAbs().maxCoeff() < 1e-12)
    fail("d_max: reference operator is zero");
  EntropyResult res;
  res.quantity = EntropyQuantity::DmaxRestricted;
  if (support_leak(p.matrix(), q.matrix()) > kSupportTol * pseudo_scale(p)) {
    res.dominance_violated = true;
    res.value_bits = kInf;
    res.program_value = kInf;
    return res;
  }
  ConicProgram prog;
  VarRef x = prog.add_hermitian_variable(p.dims(), "X");
  cone.membership_constraints(prog, prog.var(x));
  ScalarExpr budget;
  budget.add_inner(x, q.matrix());
  prog.add_upper_bound(budget, 1.0);
  ScalarExpr objective;
  objective.add_inner(x, p.matrix());
  prog.maximize(objective);
  res.report = prog.solve(opts);
  res.program_value = res.report.primal_value;
  res.value_bits = bits_log2(res.program_value);
  return res;
}

EntropyResult d_max_dual_shift(const HermitianOperator& p, const HermitianOperator& q,
                               const ConeSpec& cone, const SolverOptions& opts) {
  check_same_layout(p, q);
  check_psd(p, "first argument");
  check_psd(q, "second argument");
  if (q.matrix().cwiseAbs().maxCoeff() < 1e-12)
    fail("d_max: reference operator is zero");
  EntropyResult res;
  res.quantity = EntropyQuantity::DmaxDualShift;
  if (support_leak(p.matrix(), q.matrix()) > kSupportTol * pseudo_scale(p)) {
    res.dominance_violated = true;
    res.value_bits = kInf;
    res.program_value = kInf;
    return res;
  }
  ConicProgram prog;
  ScalarRef gamma = prog.add_scalar_variable("gamma");
  MatrixExpr shift =
      prog.scalar_term_expr(gamma, p.dims(), q.matrix()).add_constant(-p.matrix());
  cone.dual_membership_constraints(prog, shift);
  ScalarExpr objective;
  objective.add_scalar(gamma, 1.0);
  prog.minimize(objective);
  res.report = prog.solve(opts);
  res.program_value = res.report.primal_value;
  res.value_bits = bits_log2(res.program_value);
  return res;
}

EntropyResult d_max_via_norm(const HermitianOperator& p, const HermitianOperator& q,
                             const ConeSpec& cone, const SolverOptions& opts) {
  check_same_layout(p, q);
  check_psd(p, "first argument");
  check_psd(q, "second argument");
  if (q.matrix().cwiseAbs().maxCoeff() < 1e-12)
    fail("d_max: reference operator is zero");
  switch (cone.variant()) {
    case ConeVariant::Positive:
      break;
    case ConeVariant::Diagonal:
    case ConeVariant::BlockDiagonal:
      if (!cone.contains(q))
        fail("d_max_via_norm: reference operator must lie in the cone for the "
             "conjugation to preserve it");
      break;
    default:
      fail("d_max_via_norm: conjugation by the reference does not preserve " +
           to_string(cone.variant()) + "; use d_max_restricted");
  }
  EntropyResult res;
  res.quantity = EntropyQuantity::DmaxViaNorm;
  if (support_leak(p.matrix(), q.matrix()) > kSupportTol * pseudo_scale(p)) {
    res.dominance_violated = true;
    res.value_bits = kInf;
    res.program_value = kInf;
    return res;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(q.matrix());
  double cut = kSupportTol * std::max(1e-300, es.eigenvalues().maxCoeff());
  Matrix w = Matrix::Zero(q.dim(), q.dim());
  for (int i = 0; i < q.dim(); ++i) {
    if (es.eigenvalues()(i) > cut)
      w += std::pow(es.eigenvalues()(i), -0.5) * es.eigenvectors().col(i) *
           es.eigenvectors().col(i).adjoint();
  }
  HermitianOperator m(p.dims(), herm(w * p.matrix() * w));
  res.program_value = conic_norm(m, cone, opts);
  res.value_bits = bits_log2(res.program_value);
  return res;
}

EntropyResult h_min_restricted(const HermitianOperator& rho,
                               const std::vector<std::string>& a_labels,
                               const ConeSpec& cone, const SolverOptions& opts) {
  check_psd(rho, "state");
  auto [a_side, b_side] = split_sides(rho.dims(), a_labels);
  EntropyResult res;
  res.quantity = EntropyQuantity::HminRestricted;
  ConicProgram prog;
  VarRef x = prog.add_hermitian_variable(rho.dims(), "X");
  cone.membership_constraints(prog, prog.var(x));
  int d_b = b_side.total_dim();
  prog.add_matrix_equality(prog.var(x).partial_trace_expr(a_side.labels()),
                           Matrix::Identity(d_b, d_b));
  ScalarExpr objective;
  objective.add_inner(x, rho.matrix());
  prog.maximize(objective);
  res.report = prog.solve(opts);
  res.program_value = res.report.primal_value;
  res.value_bits = bits_neg_log2(res.program_value);
  return res;
}

EntropyResult h_min_dual_shift(const HermitianOperator& rho,
                               const std::vector<std::string>& a_labels,
                               const ConeSpec& cone, const SolverOptions& opts) {
  check_psd(rho, "state");
  auto [a_side, b_side] = split_sides(rho.dims(), a_labels);
  EntropyResult res;
  res.quantity = EntropyQuantity::HminDualShift;
  ConicProgram prog;
  VarRef y = prog.add_hermitian_variable(b_side, "Y");
  MatrixExpr lifted =
      prog.var(y).transformed(rho.dims(), lift_identity_times(rho.dims(), a_side, b_side));
  cone.dual_membership_constraints(prog, lifted.add_constant(-rho.matrix()));
  ScalarExpr objective;
  objective.add_inner(y, Matrix::Identity(b_side.total_dim(), b_side.total_dim()));
  prog.minimize(objective);
  res.report = prog.solve(opts);
  res.program_value = res.report.primal_value;
  res.value_bits = bits_neg_log2(res.program_value);
  return res;
}

EntropyResult h_min_via_recovery(const HermitianOperator& rho, const ConeSpec& cone,
                                 const SolverOptions& opts) {
  check_psd(rho, "state");
  if (rho.dims().factor_count() != 2)
    fail("h_min_via_recovery: needs a two-factor state");
  int d_a = rho.dims().factor(0).dim;
  int d_b = rho.dims().factor(1).dim;
  std::string a_label = rho.dims().factor(0).label;
  std::string b_label = rho.dims().factor(1).label;
  EntropyResult res;
  res.quantity = EntropyQuantity::HminRecovery;
  ConicProgram prog;
  // Choi of Psi: B -> A' on [input, output]; the copy keeps the A label so
  // the cone's cut conventions carry over unchanged.
  DimProfile j_dims{{b_label, d_b}, {a_label, d_a}};
  DimProfile adjoint_dims{{a_label, d_a}, {b_label, d_b}};
  VarRef j = prog.add_hermitian_variable(j_dims, "J");
  prog.add_psd(prog.var(j));
  prog.add_matrix_equality(prog.var(j).partial_trace_expr({a_label}),
                           Matrix::Identity(d_b, d_b));
  auto adjoint = [d_b, d_a](const Matrix& m) { return swap_transpose_m(m, d_b, d_a); };
  cone.membership_constraints(prog, prog.var(j).transformed(adjoint_dims, adjoint));
  Matrix c = recovery_objective(rho, d_a, d_b, b_label);
  ScalarExpr objective;
  objective.add_inner(j, double(d_a) * c);
  prog.maximize(objective);
  res.report = prog.solve(opts);
  res.program_value = res.report.primal_value;
  res.value_bits = bits_neg_log2(res.program_value);
  return res;
}

EntropyResult h_min_doubly_restricted(const HermitianOperator& p,
                                      const std::vector<std::string>& a_labels,
                                      const ConeSpec& cone, const SolverOptions& opts) {
  check_psd(p, "state");
  auto [a_side, b_side] = split_sides(p.dims(), a_labels);
  int d_a = a_side.total_dim();
  int d_b = b_side.total_dim();
  if (d_a != d_b)
    fail("h_min_doubly_restricted: the two sides must have equal dimension");
  EntropyResult res;
  res.quantity = EntropyQuantity::HminDoublyRestricted;
  ConicProgram prog;
  VarRef x = prog.add_hermitian_variable(p.dims(), "X");
  cone.membership_constraints(prog, prog.var(x));
  prog.add_matrix_equality(prog.var(x).partial_trace_expr(a_side.labels()),
                           Matrix::Identity(d_b, d_b));
  prog.add_matrix_equality(prog.var(x).partial_trace_expr(b_side.labels()),
                           Matrix::Identity(d_a, d_a));
  ScalarExpr objective;
  objective.add_inner(x, p.matrix());
  prog.maximize(objective);
  res.report = prog.solve(opts);
  res.program_value = res.report.primal_value;
  res.value_bits = bits_neg_log2(res.program_value);
  return res;
}

namespace {

bool report_usable(const SolveReport& rep) {
  if (rep.status == SolveStatus::Optimal) return true;
  return rep.status == SolveStatus::MaxIterations &&
         std::max(rep.primal_residual, rep.dual_residual) <= 1e-7 &&
         rep.gap <= 1e-7 * std::max(1.0, std::abs(rep.primal_value));
}

double norm_branch(const HermitianOperator& x, const Matrix& signed_x,
                   const ConeSpec& cone, const SolverOptions& opts) {
  ConicProgram prog;
  VarRef rho = prog.add_hermitian_variable(x.dims(), "rho");
  cone.membership_constraints(prog, prog.var(rho));
  ScalarExpr mass;
  mass.add_inner(rho, Matrix::Identity(x.dim(), x.dim()));
  prog.add_upper_bound(mass, 1.0);
  ScalarExpr objective;
  objective.add_inner(rho, signed_x);
  prog.maximize(objective);
  SolveReport rep = prog.solve(opts);
  if (!report_usable(rep))
    fail("cone norm program ended " + to_string(rep.status));
  return rep.primal_value;
}

}  // namespace

double conic_norm(const HermitianOperator& x, const ConeSpec& cone,
                  const SolverOptions& opts) {
  double v = norm_branch(x, x.matrix(), cone, opts);
  double scale = std::max(1.0, x.matrix().cwiseAbs().maxCoeff());
  if (min_eigenvalue(x.matrix()) < -1e-9 * scale)
    v = std::max(v, norm_branch(x, Matrix(-x.matrix()), cone, opts));
  return std::max(v, 0.0);
}

EntropyResult h_max_restricted(const HermitianOperator& rho_abc, const ConeSpec& cone,
                               const SolverOptions& opts) {
  check_psd(rho_abc, "state");
  check_normalized(rho_abc, "state");
  if (rho_abc.dims().factor_count() != 3)
    fail("h_max_restricted: needs a three-factor state");
  switch (cone.variant()) {
    case ConeVariant::Positive:
    case ConeVariant::Ppt:
    case ConeVariant::SepOuterPpt:
      break;
    default:
      fail("h_max_restricted: " + to_string(cone.variant()) +
           " is not invariant under local unitaries; refused");
  }
  if (rho_abc.trace() - max_eigenvalue(rho_abc.matrix()) > 1e-8)
    fail("h_max_restricted: input must be a pure state");
  int d_a = rho_abc.dims().factor(0).dim;
  int d_b = rho_abc.dims().factor(1).dim;
  int d_c = rho_abc.dims().factor(2).dim;
  std::string la = rho_abc.dims().factor(0).label;
  std::string lb = rho_abc.dims().factor(1).label;
  std::string lc = rho_abc.dims().factor(2).label;

  EntropyResult res;
  res.quantity = EntropyQuantity::HmaxRestricted;
  ConicProgram prog;
  DimProfile j_dims{{lb, d_b}, {la, d_a}};
  DimProfile adjoint_dims{{la, d_a}, {lb, d_b}};
  DimProfile out_dims{{la, d_a}, {la + "_copy", d_a}, {lc, d_c}};

  VarRef j = prog.add_hermitian_variable(j_dims, "J");
  prog.add_matrix_equality(prog.var(j).partial_trace_expr({la}),
                           Matrix::Identity(d_b, d_b));
  cone.membership_constraints(prog, prog.var(j));
  auto adjoint = [d_b, d_a](const Matrix& m) { return swap_transpose_m(m, d_b, d_a); };
  cone.membership_constraints(prog, prog.var(j).transformed(adjoint_dims, adjoint));

  VarRef omega = prog.add_hermitian_variable(DimProfile{{lc, d_c}}, "omega");
  prog.add_psd(prog.var(omega));
  ScalarExpr omega_trace;
  omega_trace.add_inner(omega, Matrix::Identity(d_c, d_c));
  prog.add_scalar_equality(omega_trace, 1.0);

  // (id_A (x) Psi_J (x) id_C)(rho) arranged on (A, A', C).
  Matrix rho_tb = partial_transpose(rho_abc, lb).matrix();
  Matrix m1 = kron(rho_tb, Matrix::Identity(d_a, d_a));  // on (A, B, C, A')
  auto channel_output = [=](const Matrix& jm) {
    Matrix m2 = permute_factors_m(kron(Matrix::Identity(d_a, d_a), kron(jm, Matrix::Identity(d_c, d_c))),
                                  {d_a, d_b, d_a, d_c}, {0, 1, 3, 2});  // to (A, B, C, A')
    Matrix reduced = partial_trace_m(m1 * m2, {d_a, d_b, d_c, d_a}, {1});  // (A, C, A')
    return permute_factors_m(reduced, {d_a, d_c, d_a}, {0, 2, 1});         // (A, A', C)
  };
  MatrixExpr transported = prog.var(j).transformed(out_dims, channel_output);

  Matrix tau = max_entangled(d_a).matrix();
  auto target = [=](const Matrix& w) { return kron(tau, w); };
  MatrixExpr decoupled = prog.var(omega).transformed(out_dims, target);

  FidelityBlock fb = add_fidelity_block(prog, transported, decoupled);
  ScalarExpr objective;
  objective.add_inner(fb.block, fb.pairing);
  prog.maximize(objective);
  res.report = prog.solve(opts);
  res.program_value = std::max(res.report.primal_value, 0.0);
  // program value is the root fidelity F; the entropy is log2(d_A F^2)
  res.value_bits = std::log2(double(d_a)) + 2.0 * bits_log2(res.program_value);
  return res;
}

double hartley_cq(const HermitianOperator& rho, const std::string& classical_label,
                  double tol) {
  check_psd(rho, "state");
  int idx = rho.dims().index_of(classical_label);
  int d_x = rho.dims().factor(idx).dim;
  int pre = 1, post = 1;
  for (int i = 0; i < idx; ++i) pre *= rho.dims().factor(i).dim;
  for (int i = idx + 1; i < rho.dims().factor_count(); ++i)
    post *= rho.dims().factor(i).dim;
  std::vector<Matrix> dephasing;
  for (int v = 0; v < d_x; ++v) {
    Matrix unit = Matrix::Zero(d_x, d_x);
    unit(v, v) = 1.0;
    dephasing.push_back(kron(kron(Matrix::Identity(pre, pre), unit),
                             Matrix::Identity(post, post)));
  }
  double scale = std::max(1.0, rho.matrix().cwiseAbs().maxCoeff());
  if (!approx_equal(pinching_m(rho.matrix(), dephasing), rho.matrix(), tol * scale))
    fail("hartley_cq: state is not classical on factor " + classical_label);
  int d_rest = pre * post;
  Matrix marginal_support = Matrix::Zero(d_rest, d_rest);
  for (int v = 0; v < d_x; ++v) {
    Matrix embed = kron(kron(Matrix::Identity(pre, pre), Vector(Vector::Unit(d_x, v))),
                        Matrix::Identity(post, post));
    Matrix block = embed.adjoint() * rho.matrix() * embed;
    marginal_support += support_projector(block, tol);
  }
  return bits_log2(max_eigenvalue(marginal_support));
}

EntropyResult hypothesis_testing_restricted(const HermitianOperator& p,
                                            const HermitianOperator& q, double epsilon,
                                            const ConeSpec& cone,
                                            const SolverOptions& opts) {
  check_same_layout(p, q);
  check_psd(p, "first argument");
  check_psd(q, "second argument");
  if (epsilon < 0.0 || epsilon >= 1.0)
    fail("hypothesis testing: epsilon must lie in [0, 1)");
  EntropyResult res;
  res.quantity = EntropyQuantity::HypothesisTesting;
  ConicProgram prog;
  VarRef x = prog.add_hermitian_variable(p.dims(), "X");
  cone.membership_constraints(prog, prog.var(x));
  prog.add_psd(prog.var(x).scaled(-1.0).add_constant(Matrix::Identity(p.dim(), p.dim())));
  ScalarExpr power;
  power.add_inner(x, q.matrix());
  power.add_constant(-(1.0 - epsilon));
  prog.add_nonneg(power);
  ScalarExpr objective;
  objective.add_inner(x, p.matrix());
  prog.minimize(objective);
  res.report = prog.solve(opts);
  if (res.report.status == SolveStatus::Infeasible) {
    res.infeasible = true;
    res.value_bits = -kInf;
    res.program_value = kInf;
    return res;
  }
  res.program_value = std::max(res.report.primal_value, 0.0);
  double floor = std::max(1e-9, opts.tol);
  res.value_bits = res.program_value <= floor ? kInf : -std::log2(res.program_value);
  return res;
}

EntropyResult smoothed_d_max(const HermitianOperator& rho, const HermitianOperator& q,
                             double epsilon, const ConeSpec& cone,
                             const SolverOptions& opts) {
  check_same_layout(rho, q);
  check_psd(rho, "state");
  check_psd(q, "reference");
  check_normalized(rho, "state");
  check_normalized(q, "reference");
  if (epsilon < 0.0 || epsilon >= 1.0)
    fail("smoothing: epsilon must lie in [0, 1)");
  if (epsilon < 1e-12) {
    // the ball degenerates to the single point rho and the joint program
    // loses strict feasibility; solve the plain shift program instead
    EntropyResult res = d_max_dual_shift(rho, q, cone, opts);
    res.quantity = EntropyQuantity::SmoothedDmax;
    return res;
  }
  EntropyResult res;
  res.quantity = EntropyQuantity::SmoothedDmax;
  ConicProgram prog;
  VarRef smooth = prog.add_hermitian_variable(rho.dims(), "rho_smooth");
  prog.add_psd(prog.var(smooth));
  ScalarExpr mass;
  mass.add_inner(smooth, Matrix::Identity(rho.dim(), rho.dim()));
  prog.add_upper_bound(mass, 1.0);
  ScalarRef gamma = prog.add_scalar_variable("gamma");
  MatrixExpr shift = prog.scalar_term_expr(gamma, rho.dims(), q.matrix())
                         .minus(prog.var(smooth));
  cone.dual_membership_constraints(prog, shift);
  FidelityBlock fb = add_fidelity_block(
      prog, MatrixExpr::constant_expr(rho.dims(), rho.matrix()), prog.var(smooth));
  ScalarExpr closeness;
  closeness.add_inner(fb.block, fb.pairing);
  closeness.add_constant(-std::sqrt(1.0 - epsilon * epsilon));
  prog.add_nonneg(closeness);
  ScalarExpr objective;
  objective.add_scalar(gamma, 1.0);
  prog.minimize(objective);
  res.report = prog.solve(opts);
  res.program_value = res.report.primal_value;
  res.value_bits = bits_log2(res.program_value);
  return res;
}

EntropyResult smoothed_h_min(const HermitianOperator& rho,
                             const std::vector<std::string>& a_labels, double epsilon,
                             const ConeSpec& cone, const SolverOptions& opts) {
  check_psd(rho, "state");
  check_normalized(rho, "state");
  if (epsilon < 0.0 || epsilon >= 1.0)
    fail("smoothing: epsilon must lie in [0, 1)");
  if (epsilon < 1e-12) {
    // same degeneracy as in the divergence case: delegate at zero width
    EntropyResult res = h_min_dual_shift(rho, a_labels, cone, opts);
    res.quantity = EntropyQuantity::SmoothedHmin;
    return res;
  }
  auto [a_side, b_side] = split_sides(rho.dims(), a_labels);
  EntropyResult res;
  res.quantity = EntropyQuantity::SmoothedHmin;
  ConicProgram prog;
  VarRef smooth = prog.add_hermitian_variable(rho.dims(), "rho_smooth");
  prog.add_psd(prog.var(smooth));
  ScalarExpr mass;
  mass.add_inner(smooth, Matrix::Identity(rho.dim(), rho.dim()));
  prog.add_upper_bound(mass, 1.0);
  VarRef y = prog.add_hermitian_variable(b_side, "Y");
  MatrixExpr lifted =
      prog.var(y).transformed(rho.dims(), lift_identity_times(rho.dims(), a_side, b_side));
  cone.dual_membership_constraints(prog, lifted.minus(prog.var(smooth)));
  FidelityBlock fb = add_fidelity_block(
      prog, MatrixExpr::constant_expr(rho.dims(), rho.matrix()), prog.var(smooth));
  ScalarExpr closeness;
  closeness.add_inner(fb.block, fb.pairing);
  closeness.add_constant(-std::sqrt(1.0 - epsilon * epsilon));
  prog.add_nonneg(closeness);
  ScalarExpr objective;
  objective.add_inner(y, Matrix::Identity(b_side.total_dim(), b_side.total_dim()));
  prog.minimize(objective);
  res.report = prog.solve(opts);
  res.program_value = res.report.primal_value;
  res.value_bits = bits_neg_log2(res.program_value);
  return res;
}

double cv_restricted(const ChoiOperator& channel, const ConeSpec& cone,
                     const SolverOptions& opts, bool allow_noninvariant_cone) {
  if (channel.cp() != Tristate::Yes || channel.tp() != Tristate::Yes)
    fail("cv_restricted: the Choi flags must certify a CP and TP map");
  switch (cone.variant()) {
    case ConeVariant::Positive:
    case ConeVariant::Ppt:
    case ConeVariant::SepOuterPpt:
      break;
    default:
      if (!allow_noninvariant_cone)
        fail("cv_restricted: " + to_string(cone.variant()) +
             " is not invariant under local CP maps; pass the acknowledgement "
             "flag to evaluate anyway");
  }
  EntropyResult res =
      h_min_restricted(channel.op(), channel.in_profile().labels(), cone, opts);
  if (!report_usable(res.report))
    fail("cv_restricted: min-entropy program ended " + to_string(res.report.status));
  return res.program_value;
}

double umegaki_relative_entropy(const HermitianOperator& rho,
                                const HermitianOperator& sigma, double tol) {
  check_same_layout(rho, sigma);
  check_psd(rho, "state");
  check_psd(sigma, "reference");
  check_normalized(rho, "state");
  if (sigma.matrix().cwiseAbs().maxCoeff() < 1e-12)
    fail("relative entropy: reference operator is zero");
  if (support_leak(rho.matrix(), sigma.matrix()) > tol) return kInf;
  Eigen::SelfAdjointEigenSolver<Matrix> er(rho.matrix());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sigma.matrix());
  double rho_cut = std::max(tol * er.eigenvalues().maxCoeff(), 1e-15);
  double sigma_cut = std::max(tol * es.eigenvalues().maxCoeff(), 1e-15);
  double value = 0.0;
  for (int i = 0; i < rho.dim(); ++i) {
    double lam = er.eigenvalues()(i);
    if (lam > rho_cut) value += lam * std::log2(lam);
  }
  for (int k = 0; k < sigma.dim(); ++k) {
    double mu = es.eigenvalues()(k);
    if (mu > sigma_cut) {
      double weight =
          (es.eigenvectors().col(k).adjoint() * rho.matrix() * es.eigenvectors().col(k))(0)
              .real();
      value -= weight * std::log2(mu);
    }
  }
  return value;
}

double conditional_entropy(const HermitianOperator& rho,
                           const std::vector<std::string>& a_labels, double tol) {
  auto [a_side, b_side] = split_sides(rho.dims(), a_labels);
  HermitianOperator rho_b = partial_trace(rho, a_side.labels());
  HermitianOperator reference =
      permute_factors(tensor(identity_on(a_side), rho_b), rho.dims().labels());
  return -umegaki_relative_entropy(rho, reference, tol);
}

}  // namespace conelab

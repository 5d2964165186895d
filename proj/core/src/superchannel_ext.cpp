#include "conelab/superchannel_ext.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace conelab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

const std::vector<std::string> kLayout = {"A0", "A1", "B0", "B1"};

void check_layout(const DimProfile& dims, const char* who) {
  bool ok = dims.factor_count() == 4;
  for (int i = 0; ok && i < 4; ++i) ok = dims.factor(i).label == kLayout[i];
  if (!ok)
    fail(std::string(who) + ": expected factor layout [A0, A1, B0, B1], got " +
         dims.describe());
}

double bits_neg_log2(double v) {
  if (v < 1e-300) return kInf;
  return -std::log2(v);
}

// (1/d_u) I_u (x) y arranged in the layout order of `target`, where y lives
// on target minus the u factor.
std::function<Matrix(const Matrix&)> lift_identity_slot(const DimProfile& target,
                                                        const std::string& u_label) {
  int pos = target.index_of(u_label);
  int du = target.factor(pos).dim;
  std::vector<int> concat_dims = {du};
  std::vector<int> new_order;
  int next = 1;
  for (int i = 0; i < target.factor_count(); ++i) {
    if (i == pos) {
      new_order.push_back(0);
    } else {
      concat_dims.push_back(target.factor(i).dim);
      new_order.push_back(next++);
    }
  }
  double scale = 1.0 / du;
  // explicit return type: the scaled product must be materialized before the
  // permute temporary dies
  return [scale, du, concat_dims, new_order](const Matrix& y) -> Matrix {
    return scale * permute_factors_m(kron(Matrix::Identity(du, du), y), concat_dims,
                                     new_order);
  };
}

// Shared shape of all three marginal pairs: Tr_{unit_traced} J = I together
// with Tr_t J = (Tr_{t,u} J) (x) d_u^{-1} I_u.
double marginal_pair_residual(const HermitianOperator& j,
                              const std::vector<std::string>& unit_traced,
                              const std::string& t, const std::string& u) {
  HermitianOperator m1 = partial_trace(j, unit_traced);
  double r1 =
      (m1.matrix() - Matrix::Identity(m1.dim(), m1.dim())).cwiseAbs().maxCoeff();
  HermitianOperator lhs = partial_trace(j, t);
  HermitianOperator core = partial_trace(j, std::vector<std::string>{t, u});
  Matrix lifted = lift_identity_slot(lhs.dims(), u)(core.matrix());
  double r2 = (lhs.matrix() - lifted).cwiseAbs().maxCoeff();
  return std::max(r1, r2);
}

void emit_marginal_pair(ConicProgram& prog, const MatrixExpr& x,
                        const std::vector<std::string>& unit_traced,
                        const std::string& t, const std::string& u) {
  check_layout(x.dims(), "superchannel constraints");
  MatrixExpr m1 = x.partial_trace_expr(unit_traced);
  prog.add_matrix_equality(m1, Matrix::Identity(m1.dim(), m1.dim()));
  MatrixExpr lhs = x.partial_trace_expr({t});
  MatrixExpr core = x.partial_trace_expr({t, u});
  MatrixExpr lifted = core.transformed(lhs.dims(), lift_identity_slot(lhs.dims(), u));
  prog.add_matrix_equality(lhs.minus(lifted), Matrix::Zero(lhs.dim(), lhs.dim()));
}

}  // namespace

SupermapChoi::SupermapChoi(HermitianOperator o) : op(std::move(o)) {
  check_layout(op.dims(), "supermap Choi");
}

int SupermapChoi::dim(const std::string& label) const {
  return op.dims().factor(op.dims().index_of(label)).dim;
}

SupermapChoi identity_supermap_choi(int d0, int d1) {
  if (d0 < 1 || d1 < 1) fail("identity supermap: dims must be positive");
  int da = d0 * d1;
  Vector omega = Vector::Zero(da * da);
  for (int i = 0; i < da; ++i) omega(i * da + i) = 1.0;
  DimProfile dims{{"A0", d0}, {"A1", d1}, {"B0", d0}, {"B1", d1}};
  return SupermapChoi(HermitianOperator(dims, omega * omega.adjoint()));
}

SupermapChoi discard_prepare_supermap_choi(int d_a0, int d_a1, int d_b0, int d_b1) {
  if (d_a0 < 1 || d_a1 < 1 || d_b0 < 1 || d_b1 < 1)
    fail("discard-prepare supermap: dims must be positive");
  int head = d_a0 * d_a1 * d_b0;
  Matrix m = kron(Matrix::Identity(head, head) / static_cast<double>(d_a0),
                  basis_state(d_b1, 0));
  DimProfile dims{{"A0", d_a0}, {"A1", d_a1}, {"B0", d_b0}, {"B1", d_b1}};
  return SupermapChoi(HermitianOperator(dims, m));
}

SupermapChoi pre_post_supermap_choi(const ChoiOperator& pre, const ChoiOperator& post) {
  if (pre.dims().factor_count() != 2 || post.dims().factor_count() != 2)
    fail("pre/post supermap: pre and post must be single-pair channel Chois");
  int d_b0 = pre.in_dim(), d_a0 = pre.out_dim();
  int d_a1 = post.in_dim(), d_b1 = post.out_dim();
  // pre Choi on [B0, A0] -> [A0, B0], then kron with post on [A1, B1].
  Matrix block = permute_factors_m(pre.matrix(), {d_b0, d_a0}, {1, 0});
  Matrix full = kron(block, post.matrix());
  Matrix m = permute_factors_m(full, {d_a0, d_b0, d_a1, d_b1}, {0, 2, 1, 3});
  DimProfile dims{{"A0", d_a0}, {"A1", d_a1}, {"B0", d_b0}, {"B1", d_b1}};
  return SupermapChoi(HermitianOperator(dims, m));
}

double superchannel_marginal_residual(const SupermapChoi& j) {
  return marginal_pair_residual(j.op, {"A0", "B1"}, "B1", "A1");
}

double unital_preserving_residual(const SupermapChoi& j) {
  return marginal_pair_residual(j.op, {"A1", "B0"}, "B0", "A0");
}

double dual_superchannel_marginal_residual(const SupermapChoi& j) {
  return marginal_pair_residual(j.op, {"A1", "B0"}, "A1", "B1");
}

bool is_superchannel(const SupermapChoi& j, double tol) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(j.op.matrix());
  if (es.eigenvalues().minCoeff() < -tol) return false;
  return superchannel_marginal_residual(j) <= tol;
}

void superchannel_constraints(ConicProgram& prog, const MatrixExpr& x) {
  emit_marginal_pair(prog, x, {"A0", "B1"}, "B1", "A1");
}

void unital_preserving_constraints(ConicProgram& prog, const MatrixExpr& x) {
  emit_marginal_pair(prog, x, {"A1", "B0"}, "B0", "A0");
}

void dual_superchannel_constraints(ConicProgram& prog, const MatrixExpr& x) {
  emit_marginal_pair(prog, x, {"A1", "B0"}, "A1", "B1");
}

SupermapChoi supermap_dual(const SupermapChoi& j) {
  const DimProfile& d = j.op.dims();
  std::vector<int> order = {2, 3, 0, 1};
  Matrix m = permute_factors_m(j.op.matrix().conjugate(), d.dims(), order);
  DimProfile nd{{"A0", d.factor(2).dim},
                {"A1", d.factor(3).dim},
                {"B0", d.factor(0).dim},
                {"B1", d.factor(1).dim}};
  return SupermapChoi(HermitianOperator(nd, m));
}

ChoiOperator supermap_apply(const SupermapChoi& j, const ChoiOperator& channel) {
  int d_a0 = j.dim("A0"), d_a1 = j.dim("A1");
  int d_b0 = j.dim("B0"), d_b1 = j.dim("B1");
  if (channel.in_dim() != d_a0 || channel.out_dim() != d_a1)
    fail("supermap apply: channel dims (" + std::to_string(channel.in_dim()) + " -> " +
         std::to_string(channel.out_dim()) + ") do not match the supermap's (" +
         std::to_string(d_a0) + " -> " + std::to_string(d_a1) + ")");
  int da = d_a0 * d_a1, db = d_b0 * d_b1;
  Matrix big = j.op.matrix() * kron(channel.matrix().transpose(), Matrix::Identity(db, db));
  Matrix out = Matrix::Zero(db, db);
  for (int a = 0; a < da; ++a) out += big.block(a * db, a * db, db, db);
  DimProfile dims{{"B0", d_b0}, {"B1", d_b1}};
  return choi_from_operator(HermitianOperator(dims, out), 1);
}

EntropyResult extended_min_entropy(const ChoiOperator& channel, ExtDirection dir,
                                   const ConeSpec& cone, const SolverOptions& opts) {
  const DimProfile& cd = channel.dims();
  if (cd.factor_count() != 4 || channel.in_factor_count() != 2)
    fail("extended min-entropy: channel must be a two-pair Choi on (A0 B0 -> A1 B1)");
  auto label_set = [&](int lo, int hi, const char* a, const char* b) {
    std::string l0 = cd.factor(lo).label, l1 = cd.factor(hi).label;
    return (l0 == a && l1 == b) || (l0 == b && l1 == a);
  };
  if (!label_set(0, 1, "A0", "B0") || !label_set(2, 3, "A1", "B1"))
    fail("extended min-entropy: input factors must be labeled A0, B0 and outputs A1, B1; got " +
         cd.describe());
  if (channel.cp() != Tristate::Yes || channel.tp() != Tristate::Yes)
    fail("extended min-entropy: channel must be CPTP");

  HermitianOperator jperm =
      permute_factors(HermitianOperator(cd, channel.matrix()), kLayout);
  EntropyResult res;
  res.quantity = dir == ExtDirection::BGivenA ? EntropyQuantity::ExtHminBGivenA
                                              : EntropyQuantity::ExtHminAGivenB;
  ConicProgram prog;
  VarRef x = prog.add_hermitian_variable(jperm.dims(), "X");
  if (dir == ExtDirection::BGivenA)
    superchannel_constraints(prog, prog.var(x));
  else
    dual_superchannel_constraints(prog, prog.var(x));
  cone.membership_constraints(prog, prog.var(x));
  ScalarExpr objective;
  objective.add_inner(x, jperm.matrix());
  prog.maximize(objective);
  res.report = prog.solve(opts);
  res.infeasible = res.report.status == SolveStatus::Infeasible;
  res.program_value = res.report.primal_value;
  int d_pre = dir == ExtDirection::BGivenA ? jperm.dims().factor(2).dim
                                           : jperm.dims().factor(0).dim;
  res.value_bits = bits_neg_log2(res.program_value / d_pre);
  return res;
}

KebReport keb_check(const SupermapChoi& j, double tol) {
  KebReport r;
  r.is_superchannel = is_superchannel(j, tol);
  HermitianOperator pt = partial_transpose(j.op, std::vector<std::string>{"B0", "B1"});
  Eigen::SelfAdjointEigenSolver<Matrix> es(pt.matrix());
  r.min_pt_eigenvalue = es.eigenvalues().minCoeff();
  r.ppt_across_cut = r.min_pt_eigenvalue >= -tol;
  if (!r.ppt_across_cut) r.witness = es.eigenvectors().col(0);
  return r;
}

}  // namespace conelab

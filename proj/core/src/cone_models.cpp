#include <conelab/cone_models.hpp>

#include <algorithm>
#include <set>
#include <stdexcept>
#include <utility>

#include <Eigen/Eigenvalues>

namespace conelab {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

// PSD test reporting the smallest eigenvalue and, on failure, its eigenvector.
ConeMembership psd_check(const Matrix& m, double tol, const std::string& what) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  ConeMembership r;
  Eigen::Index k = 0;
  r.violation = es.eigenvalues().minCoeff(&k);
  if (r.violation < -tol) {
    r.member = false;
    r.witness = es.eigenvectors().col(k);
    r.detail = what + " has a negative eigenvalue";
  } else {
    r.member = true;
  }
  return r;
}

Matrix basis_projector(int d, int i) {
  Matrix e = Matrix::Zero(d, d);
  e(i, i) = 1.0;
  return e;
}

}  // namespace

std::string to_string(ConeVariant v) {
  switch (v) {
    case ConeVariant::Positive: return "positive";
    case ConeVariant::Ppt: return "ppt";
    case ConeVariant::Diagonal: return "diagonal";
    case ConeVariant::BlockDiagonal: return "block-diagonal";
    case ConeVariant::Cq: return "cq";
    case ConeVariant::TwirlInvariantPositive: return "twirl-invariant-positive";
    case ConeVariant::SepOuterPpt: return "sep-outer-ppt";
  }
  return "unknown";
}

ConeSpec ConeSpec::positive() {
  ConeSpec k;
  k.variant_ = ConeVariant::Positive;
  return k;
}

ConeSpec ConeSpec::ppt(std::vector<std::string> transposed) {
  ConeSpec k;
  k.variant_ = ConeVariant::Ppt;
  k.cut_ = std::move(transposed);
  return k;
}

ConeSpec ConeSpec::diagonal() {
  ConeSpec k;
  k.variant_ = ConeVariant::Diagonal;
  return k;
}

ConeSpec ConeSpec::block_diagonal(std::vector<Matrix> projectors) {
  if (projectors.empty()) fail("block_diagonal: empty projector list");
  ConeSpec k;
  k.variant_ = ConeVariant::BlockDiagonal;
  k.projectors_ = std::move(projectors);
  return k;
}

ConeSpec ConeSpec::cq(std::string classical_factor) {
  ConeSpec k;
  k.variant_ = ConeVariant::Cq;
  k.classical_ = std::move(classical_factor);
  return k;
}

ConeSpec ConeSpec::werner_twirl() {
  ConeSpec k;
  k.variant_ = ConeVariant::TwirlInvariantPositive;
  return k;
}

ConeSpec ConeSpec::pinching_twirl(std::vector<Matrix> projectors) {
  if (projectors.empty()) fail("pinching_twirl: empty projector list");
  ConeSpec k;
  k.variant_ = ConeVariant::TwirlInvariantPositive;
  k.projectors_ = std::move(projectors);
  return k;
}

ConeSpec ConeSpec::sep_outer_ppt(std::vector<std::string> transposed) {
  ConeSpec k;
  k.variant_ = ConeVariant::SepOuterPpt;
  k.cut_ = std::move(transposed);
  return k;
}

std::vector<std::string> ConeSpec::resolve_cut(const DimProfile& dims) const {
  if (variant_ != ConeVariant::Ppt && variant_ != ConeVariant::SepOuterPpt)
    fail("resolve_cut: cone has no transposition cut");
  std::vector<std::string> cut = cut_;
  if (cut.empty()) {
    if (dims.factor_count() < 2)
      fail("ppt cone needs a profile with at least two factors, got " +
           dims.describe());
    cut = {dims.factor(dims.factor_count() - 1).label};
  }
  std::set<std::string> seen(cut.begin(), cut.end());
  if (seen.size() != cut.size()) fail("ppt cut lists a factor twice");
  dims.indices_of(cut);  // validates the labels
  if (static_cast<int>(cut.size()) == dims.factor_count())
    fail("ppt cut must leave at least one factor untransposed");
  return cut;
}

std::vector<Matrix> ConeSpec::resolve_projectors(const DimProfile& dims) const {
  if (!projectors_.empty()) {
    for (const Matrix& p : projectors_)
      if (p.rows() != dims.total_dim() || p.cols() != dims.total_dim())
        fail("cone projector shape does not match " + dims.describe());
    return projectors_;
  }
  if (variant_ == ConeVariant::Cq) {
    int k = dims.index_of(classical_);
    int pre = 1, post = 1;
    for (int i = 0; i < k; ++i) pre *= dims.factor(i).dim;
    for (int i = k + 1; i < dims.factor_count(); ++i) post *= dims.factor(i).dim;
    int dc = dims.factor(k).dim;
    Matrix ipre = Matrix::Identity(pre, pre);
    Matrix ipost = Matrix::Identity(post, post);
    std::vector<Matrix> ps;
    ps.reserve(static_cast<size_t>(dc));
    for (int v = 0; v < dc; ++v)
      ps.push_back(kron(ipre, kron(basis_projector(dc, v), ipost)));
    return ps;
  }
  fail("resolve_projectors: cone has no projector structure");
}

std::function<Matrix(const Matrix&)> ConeSpec::invariant_projection(
    const DimProfile& dims) const {
  switch (variant_) {
    case ConeVariant::Diagonal: {
      return [](const Matrix& m) {
        Matrix r = Matrix::Zero(m.rows(), m.cols());
        r.diagonal() = m.diagonal();
        return r;
      };
    }
    case ConeVariant::BlockDiagonal:
    case ConeVariant::Cq: {
      std::vector<Matrix> ps = resolve_projectors(dims);
      return [ps](const Matrix& m) { return pinching_m(m, ps); };
    }
    case ConeVariant::TwirlInvariantPositive: {
      if (!projectors_.empty()) {
        std::vector<Matrix> ps = resolve_projectors(dims);
        return [ps](const Matrix& m) { return pinching_m(m, ps); };
      }
      if (dims.factor_count() != 2 ||
          dims.factor(0).dim != dims.factor(1).dim)
        fail("werner twirl needs two factors of equal dimension, got " +
             dims.describe());
      int d = dims.factor(0).dim;
      return [d](const Matrix& m) { return werner_twirl_m(m, d); };
    }
    default:
      fail("invariant_projection: cone has no structural subspace");
  }
}

void ConeSpec::membership_constraints(ConicProgram& prog,
                                      const MatrixExpr& x) const {
  switch (variant_) {
    case ConeVariant::Positive:
      prog.add_psd(x);
      return;
    case ConeVariant::Ppt:
    case ConeVariant::SepOuterPpt:
      prog.add_psd(x);
      prog.add_psd(x.partial_transpose_expr(resolve_cut(x.dims())));
      return;
    case ConeVariant::Diagonal:
    case ConeVariant::BlockDiagonal:
    case ConeVariant::Cq:
    case ConeVariant::TwirlInvariantPositive: {
      auto fix = invariant_projection(x.dims());
      int d = x.dim();
      prog.add_matrix_equality(x.minus(x.transformed(x.dims(), fix)),
                               Matrix::Zero(d, d));
      prog.add_psd(x);
      return;
    }
  }
}

void ConeSpec::dual_membership_constraints(ConicProgram& prog,
                                           const MatrixExpr& x) const {
  switch (variant_) {
    case ConeVariant::Positive:
      // the PSD cone is its own dual
      prog.add_psd(x);
      return;
    case ConeVariant::Ppt:
    case ConeVariant::SepOuterPpt: {
      // members split as Y + Z^G with Y, Z PSD
      std::vector<std::string> cut = resolve_cut(x.dims());
      VarRef zaux = prog.add_hermitian_variable(x.dims(), "ppt_dual_aux");
      prog.add_psd(prog.var(zaux));
      prog.add_psd(x.minus(prog.var(zaux).partial_transpose_expr(cut)));
      return;
    }
    case ConeVariant::Diagonal:
    case ConeVariant::BlockDiagonal:
    case ConeVariant::Cq:
    case ConeVariant::TwirlInvariantPositive: {
      // pairing with the cone only sees the structural projection, which must
      // itself be PSD
      prog.add_psd(x.transformed(x.dims(), invariant_projection(x.dims())));
      return;
    }
  }
}

ConeMembership ConeSpec::contains(const HermitianOperator& x, double tol) const {
  switch (variant_) {
    case ConeVariant::Positive:
      return psd_check(x.matrix(), tol, "operator");
    case ConeVariant::Ppt:
    case ConeVariant::SepOuterPpt: {
      ConeMembership base = psd_check(x.matrix(), tol, "operator");
      if (!base.member) return base;
      Matrix pt = partial_transpose(x, resolve_cut(x.dims())).matrix();
      ConeMembership after = psd_check(pt, tol, "partial transpose");
      if (!after.member) return after;
      base.violation = std::min(base.violation, after.violation);
      return base;
    }
    case ConeVariant::Diagonal: {
      Matrix off = x.matrix();
      off.diagonal().setZero();
      double leak = off.size() > 0 ? off.cwiseAbs().maxCoeff() : 0.0;
      if (leak > tol)
        return {false, leak, {}, "off-diagonal entries present"};
      RealVector diag = x.matrix().diagonal().real();
      Eigen::Index k = 0;
      double mn = diag.minCoeff(&k);
      if (mn < -tol)
        return {false, mn, Vector(Vector::Unit(x.dim(), k)),
                "negative diagonal entry"};
      return {true, mn, {}, ""};
    }
    case ConeVariant::BlockDiagonal:
    case ConeVariant::Cq:
    case ConeVariant::TwirlInvariantPositive: {
      auto fix = invariant_projection(x.dims());
      double leak = (x.matrix() - fix(x.matrix())).cwiseAbs().maxCoeff();
      if (leak > tol)
        return {false, leak, {},
                "operator is not a fixed point of the cone's projection"};
      return psd_check(x.matrix(), tol, "operator");
    }
  }
  fail("contains: unhandled cone variant");
}

ConeMembership ConeSpec::dual_contains(const HermitianOperator& x,
                                       double tol) const {
  switch (variant_) {
    case ConeVariant::Positive:
      return psd_check(x.matrix(), tol, "operator");
    case ConeVariant::Diagonal: {
      RealVector diag = x.matrix().diagonal().real();
      Eigen::Index k = 0;
      ConeMembership r;
      r.violation = diag.minCoeff(&k);
      r.member = r.violation >= -tol;
      if (!r.member) {
        r.witness = Vector::Unit(x.dim(), k);
        r.detail = "negative diagonal entry";
      }
      return r;
    }
    case ConeVariant::BlockDiagonal:
    case ConeVariant::Cq:
      return psd_check(invariant_projection(x.dims())(x.matrix()), tol,
                       "pinched operator");
    case ConeVariant::TwirlInvariantPositive:
      return psd_check(invariant_projection(x.dims())(x.matrix()), tol,
                       "twirled operator");
    case ConeVariant::Ppt:
    case ConeVariant::SepOuterPpt: {
      // no closed form: minimize the overlap with normalized cone members
      ConicProgram prog;
      VarRef rho = prog.add_hermitian_variable(x.dims(), "rho");
      membership_constraints(prog, prog.var(rho));
      int d = x.dim();
      ScalarExpr tr;
      tr.add_inner(rho, Matrix::Identity(d, d));
      prog.add_scalar_equality(tr, 1.0);
      ScalarExpr obj;
      obj.add_inner(rho, x.matrix());
      prog.minimize(obj);
      SolverOptions sopts;
      sopts.tol = 1e-9;
      SolveReport rep = prog.solve(sopts);
      // the decision only needs the overlap to about the membership tolerance,
      // so a best iterate certified well below that is still conclusive
      bool usable =
          rep.status == SolveStatus::Optimal ||
          (rep.status == SolveStatus::MaxIterations &&
           std::max(rep.primal_residual, rep.dual_residual) <= 1e-7 &&
           rep.gap <= 1e-7 * std::max(1.0, std::abs(rep.primal_value)));
      if (!usable)
        fail("dual membership program ended " + to_string(rep.status));
      ConeMembership r;
      r.violation = rep.primal_value;
      r.member = rep.primal_value >= -tol;
      if (!r.member) r.detail = "a normalized cone member has negative overlap";
      return r;
    }
  }
  fail("dual_contains: unhandled cone variant");
}

}  // namespace conelab

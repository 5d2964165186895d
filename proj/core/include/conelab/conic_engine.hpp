#pragma once

#include "conelab/operator_core.hpp"

#include <Eigen/Sparse>

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace conelab {

enum class SolveStatus { Optimal, Infeasible, Unbounded, MaxIterations };

std::string to_string(SolveStatus s);

struct SolverOptions {
  double tol = 1e-8;
  int max_iterations = 200;
  bool verbose = false;
};

// Cone layout of the slack vector: `nonneg` leading scalar rows followed by
// svec'd real symmetric PSD blocks of the given side lengths.
struct LpConeDims {
  int nonneg = 0;
  std::vector<int> psd_dims;

  int rows() const;
};

struct ConeLPResult {
  SolveStatus status = SolveStatus::MaxIterations;
  RealVector x, y, z, s;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double gap = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  int iterations = 0;
};

using SparseReal = Eigen::SparseMatrix<double>;

// Homogeneous self-dual interior point method for
//   minimize c'x  s.t.  Ax = b,  Gx + s = h,  s in K.
// Redundant equality rows are pruned internally; inconsistent redundancies
// yield an Infeasible result with a dual certificate.
ConeLPResult solve_cone_lp(const RealVector& c, const SparseReal& A, const RealVector& b,
                           const SparseReal& G, const RealVector& h, const LpConeDims& cone,
                           const SolverOptions& opts = {});

// svec packs a real symmetric matrix column-major over the upper triangle with
// off-diagonal weight sqrt(2), so plain dot products match trace pairing.
int svec_dim(int m);
int svec_index(int i, int j);  // i <= j
RealVector svec_sym(const RealMatrix& s);
RealMatrix smat_sym(const RealVector& v, int m);

// Entrywise formula for the matrix of v -> svec(Q smat(v) Q); exposed for the
// congruence identity test backing the KKT assembly.
RealMatrix svec_congruence_matrix(const RealMatrix& q);

// [[Re X, -Im X], [Im X, Re X]]: doubles multiplicity, keeps eigenvalues.
RealMatrix embed_complex(const Matrix& x);
// Collapses a real 2d x 2d dual block back to the complex Hermitian functional
// it induces on embedded matrices.
Matrix complexify_dual(const RealMatrix& z);

// ---------------------------------------------------------------------------
// Modeling layer: Hermitian matrix variables, affine matrix expressions, and
// conic constraints, compiled down to solve_cone_lp.

class ConicProgram;

struct VarRef {
  int id = -1;
};
struct ScalarRef {
  int id = -1;
};

struct MatrixTerm {
  int var_id = -1;
  double scale = 1.0;
  // empty function means the identity map
  std::function<Matrix(const Matrix&)> map;
};

struct ScalarMatrixTerm {
  int scalar_id = -1;
  Matrix coeff;
};

class MatrixExpr {
 public:
  MatrixExpr() = default;
  static MatrixExpr constant_expr(DimProfile dims, const Matrix& value);

  const DimProfile& dims() const { return dims_; }
  int dim() const { return dims_.total_dim(); }

  MatrixExpr plus(const MatrixExpr& other) const;
  MatrixExpr minus(const MatrixExpr& other) const;
  MatrixExpr scaled(double a) const;
  MatrixExpr add_constant(const Matrix& value) const;
  // Pushes a linear map through every term; fn must be Hermitian preserving.
  MatrixExpr transformed(DimProfile new_dims,
                         const std::function<Matrix(const Matrix&)>& fn) const;
  MatrixExpr partial_transpose_expr(const std::vector<std::string>& labels) const;
  MatrixExpr partial_trace_expr(const std::vector<std::string>& labels) const;

  const std::vector<MatrixTerm>& terms() const { return terms_; }
  const std::vector<ScalarMatrixTerm>& scalar_terms() const { return sterms_; }
  const Matrix& constant() const { return constant_; }

  // Evaluates the expression at concrete variable values.
  Matrix evaluate(const std::map<int, Matrix>& var_values,
                  const std::vector<double>& scalar_values) const;

 private:
  friend class ConicProgram;
  DimProfile dims_;
  std::vector<MatrixTerm> terms_;
  std::vector<ScalarMatrixTerm> sterms_;
  Matrix constant_;
};

struct ScalarExpr {
  // Re<C, X> terms
  std::vector<std::pair<int, Matrix>> inner_terms;
  std::vector<std::pair<int, double>> scalar_terms;
  double constant = 0.0;

  ScalarExpr& add_inner(VarRef v, const Matrix& c);
  ScalarExpr& add_scalar(ScalarRef v, double coeff);
  ScalarExpr& add_constant(double c);
};

struct SolveReport {
  SolveStatus status = SolveStatus::MaxIterations;
  double primal_value = 0.0;  // objective in the caller's orientation
  double dual_value = 0.0;  // opposing bound from the dual iterate
  double gap = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  int iterations = 0;

  std::map<int, Matrix> var_values;        // by variable id
  std::vector<double> scalar_values;       // by scalar id
  std::map<int, Matrix> equality_duals;    // by constraint group
  std::map<int, double> nonneg_duals;      // by constraint group
  std::map<int, Matrix> psd_duals;         // by constraint group

  // When status is Infeasible the duals hold a certificate ray; when
  // Unbounded the variable values hold an improving primal ray.
  bool is_certificate = false;

  const Matrix& value_of(VarRef v) const;
  double value_of(ScalarRef v) const;
};

class ConicProgram {
 public:
  VarRef add_hermitian_variable(DimProfile dims, const std::string& name);
  ScalarRef add_scalar_variable(const std::string& name);

  MatrixExpr var(VarRef v) const;
  DimProfile var_dims(VarRef v) const;
  // coeff * s for a scalar variable s; building block for matrix constraints
  // affine in a scalar (gamma I - P style expressions)
  MatrixExpr scalar_term_expr(ScalarRef s, DimProfile dims,
                              const Matrix& coeff) const;

  int add_matrix_equality(const MatrixExpr& e, const Matrix& rhs);
  int add_psd(const MatrixExpr& e);
  int add_nonneg(const ScalarExpr& e);            // e >= 0
  int add_upper_bound(const ScalarExpr& e, double ub);  // e <= ub
  int add_scalar_equality(const ScalarExpr& e, double rhs);

  void maximize(const ScalarExpr& objective);
  void minimize(const ScalarExpr& objective);

  SolveReport solve(const SolverOptions& opts = {}) const;

  int variable_count() const { return static_cast<int>(vars_.size()); }

 private:
  struct VarInfo {
    DimProfile dims;
    std::string name;
  };
  struct EqualityCon {
    MatrixExpr expr;
    Matrix rhs;
    int group;
  };
  struct PsdCon {
    MatrixExpr expr;
    int group;
  };
  struct RowCon {
    ScalarExpr expr;  // emitted as expr + slack = rhs, slack >= 0
    double rhs;
    int group;
  };
  struct ScalarEq {
    ScalarExpr expr;
    double rhs;
    int group;
  };

  bool probe_real_mode() const;

  std::vector<VarInfo> vars_;
  std::vector<std::string> scalar_names_;
  std::vector<EqualityCon> equalities_;
  std::vector<ScalarEq> scalar_equalities_;
  std::vector<RowCon> rows_;
  std::vector<PsdCon> psd_cons_;
  ScalarExpr objective_;
  bool maximize_ = true;
  bool objective_set_ = false;
  int next_group_ = 0;
};

}  // namespace conelab

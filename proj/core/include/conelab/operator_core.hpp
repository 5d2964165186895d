#pragma once

#include <Eigen/Dense>

#include <complex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace conelab {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

enum class Tristate { Yes, No, Unknown };

struct Factor {
  std::string label;
  int dim = 0;
};

// Ordered tensor-factor layout. Labels are unique, dims are >= 1, and the
// linear index convention is big-endian: factor 0 varies slowest.
class DimProfile {
 public:
  DimProfile() = default;
  DimProfile(std::initializer_list<Factor> factors);
  explicit DimProfile(std::vector<Factor> factors);

  int factor_count() const { return static_cast<int>(factors_.size()); }
  int total_dim() const { return total_; }
  const Factor& factor(int i) const;
  const std::vector<Factor>& factors() const { return factors_; }
  std::vector<int> dims() const;
  std::vector<std::string> labels() const;

  bool has_label(const std::string& label) const;
  int index_of(const std::string& label) const;
  std::vector<int> indices_of(const std::vector<std::string>& labels) const;

  bool operator==(const DimProfile& other) const;
  bool operator!=(const DimProfile& other) const { return !(*this == other); }
  bool same_dims(const DimProfile& other) const;

  std::string describe() const;

 private:
  void validate();
  std::vector<Factor> factors_;
  int total_ = 1;
};

// Hermitian matrix tagged with its factor layout. Construction symmetrizes
// (X + X^+)/2; deviations above 1e-9 emit a warning on stderr.
class HermitianOperator {
 public:
  HermitianOperator(DimProfile dims, const Matrix& entries);

  const DimProfile& dims() const { return dims_; }
  const Matrix& matrix() const { return mat_; }
  int dim() const { return static_cast<int>(mat_.rows()); }

  double trace() const { return mat_.trace().real(); }

 private:
  DimProfile dims_;
  Matrix mat_;
};

struct KrausSet {
  std::vector<Matrix> left;
  std::vector<Matrix> right;  // empty means right == left (completely positive)
  int input_dim = 0;
  int output_dim = 0;

  bool is_cp() const { return right.empty(); }
  const std::vector<Matrix>& right_or_left() const { return right.empty() ? left : right; }
};

KrausSet kraus_cp(std::vector<Matrix> ops);
KrausSet kraus_general(std::vector<Matrix> left, std::vector<Matrix> right);

// Choi matrix of a linear map, stored on [input factors..., output factors...].
// Flags are tri-state; a flag set to Yes is enforced within 1e-9 at construction.
class ChoiOperator {
 public:
  ChoiOperator(HermitianOperator op, int in_factor_count, Tristate cp, Tristate tp,
               Tristate unital);

  const HermitianOperator& op() const { return op_; }
  const Matrix& matrix() const { return op_.matrix(); }
  const DimProfile& dims() const { return op_.dims(); }
  int in_factor_count() const { return in_factors_; }
  int out_factor_count() const { return op_.dims().factor_count() - in_factors_; }
  DimProfile in_profile() const;
  DimProfile out_profile() const;
  int in_dim() const;
  int out_dim() const;

  Tristate cp() const { return cp_; }
  Tristate tp() const { return tp_; }
  Tristate unital() const { return unital_; }

 private:
  HermitianOperator op_;
  int in_factors_ = 1;
  Tristate cp_ = Tristate::Unknown;
  Tristate tp_ = Tristate::Unknown;
  Tristate unital_ = Tristate::Unknown;
};

// Column-stacking vectorization: vec(|i><j|) = |j> (x) |i>.
Vector vec(const Matrix& x);
Matrix unvec(const Vector& v, int rows, int cols);

Matrix kron(const Matrix& a, const Matrix& b);
RealMatrix kron_real(const RealMatrix& a, const RealMatrix& b);

// Raw-layout tensor ops; `dims` lists every factor dimension in order.
Matrix partial_trace_m(const Matrix& x, const std::vector<int>& dims,
                       const std::vector<int>& traced);
Matrix partial_transpose_m(const Matrix& x, const std::vector<int>& dims,
                           const std::vector<int>& transposed);
Matrix permute_factors_m(const Matrix& x, const std::vector<int>& dims,
                         const std::vector<int>& new_order);

HermitianOperator partial_trace(const HermitianOperator& x, const std::string& label);
HermitianOperator partial_trace(const HermitianOperator& x,
                                const std::vector<std::string>& labels);
HermitianOperator partial_transpose(const HermitianOperator& x, const std::string& label);
HermitianOperator partial_transpose(const HermitianOperator& x,
                                    const std::vector<std::string>& labels);
HermitianOperator permute_factors(const HermitianOperator& x,
                                  const std::vector<std::string>& new_order);
HermitianOperator relabel(const HermitianOperator& x, const std::vector<std::string>& labels);
HermitianOperator tensor(const HermitianOperator& a, const HermitianOperator& b);
HermitianOperator identity_on(const DimProfile& dims);

// Flip operator F = sum_ij |ij><ji| on ("A", d) (x) ("B", d).
HermitianOperator swap_operator(int d);

ChoiOperator vec_choi(const KrausSet& k);
ChoiOperator vec_choi(const KrausSet& k, const DimProfile& profile, int in_factor_count);
// Wraps an operator as a Choi matrix, measuring the cp/tp/unital flags.
ChoiOperator choi_from_operator(HermitianOperator op, int in_factor_count);
KrausSet choi_kraus(const ChoiOperator& j, double tol = 1e-10);
HermitianOperator apply_via_choi(const ChoiOperator& j, const HermitianOperator& x);
Matrix apply_via_choi_m(const Matrix& choi, int d_in, int d_out, const Matrix& x);

// Choi of the adjoint map: SWAP(J)^T with input/output factors exchanged.
// Trace-preserving and unital flags trade places.
ChoiOperator adjoint_choi(const ChoiOperator& j);

// Projection onto span{I, F} preserving Tr[X] and Tr[F X]. Needs two equal factors.
HermitianOperator werner_twirl(const HermitianOperator& x);
Matrix werner_twirl_m(const Matrix& x, int d);

// sum_i P_i X P_i for an orthogonal resolution of the identity (checked to 1e-10).
HermitianOperator pinching(const HermitianOperator& x, const std::vector<Matrix>& projectors);
Matrix pinching_m(const Matrix& x, const std::vector<Matrix>& projectors);

double fidelity(const HermitianOperator& rho, const HermitianOperator& sigma);
double fidelity_m(const Matrix& rho, const Matrix& sigma);
// Defined for normalized states only; subnormalized inputs are rejected.
double purified_distance(const HermitianOperator& rho, const HermitianOperator& sigma);
// (1/2)(||rho - sigma||_1 + |Tr rho - Tr sigma|).
double trace_distance(const HermitianOperator& rho, const HermitianOperator& sigma);

HermitianOperator max_entangled(int d);  // rank-1 state on ("A", d) (x) ("B", d)
HermitianOperator max_coherent(int d);   // rank-1 state on ("A", d)
Vector max_entangled_vec(int d);
Vector max_coherent_vec(int d);

Matrix support_projector(const Matrix& x, double tol = 1e-9);

// Kraus operators U_i P_i where U_i permutes the computational basis with
// phases and {P_i} is a basis-diagonal partition of the identity.
struct PioSpec {
  std::vector<std::vector<int>> permutations;
  std::vector<std::vector<double>> phases;
  std::vector<std::vector<int>> projector_supports;
};
std::pair<ChoiOperator, int> pio_choi(const PioSpec& spec);

Matrix matrix_sqrt_psd(const Matrix& x, double clamp_tol = 1e-8);
double min_eigenvalue(const Matrix& hermitian);
double max_eigenvalue(const Matrix& hermitian);
double trace_norm(const Matrix& x);
double frobenius_distance(const Matrix& a, const Matrix& b);
bool approx_equal(const Matrix& a, const Matrix& b, double tol);
Matrix basis_state(int d, int i);

}  // namespace conelab

#pragma once

#include <string>
#include <vector>

#include <conelab/conic_engine.hpp>
#include <conelab/operator_core.hpp>

namespace conelab {

// Closed convex cones of Hermitian operators, all contained in the PSD cone.
// A ConeSpec both emits solver constraints (for membership in the cone or its
// dual) and answers direct membership queries.

enum class ConeVariant {
  Positive,
  Ppt,
  Diagonal,
  BlockDiagonal,
  Cq,
  TwirlInvariantPositive,
  SepOuterPpt,
};

std::string to_string(ConeVariant v);

// Result of a direct membership test. When a spectral condition fails,
// violation holds the offending eigenvalue and witness the matching unit
// eigenvector (of x, its partial transpose, its pinching, or its twirl,
// depending on the variant). Structural failures (nonzero off-diagonal or
// off-block entries, twirl fixed-point drift) report the leak magnitude
// instead and leave the witness empty.
struct ConeMembership {
  bool member = false;
  double violation = 0.0;
  Vector witness;
  std::string detail;
  explicit operator bool() const { return member; }
};

class ConeSpec {
 public:
  static ConeSpec positive();
  // PSD before and after transposing the listed factors. An empty list means
  // the last factor of the operator's profile.
  static ConeSpec ppt(std::vector<std::string> transposed = {});
  // Diagonal in the computational product basis with nonnegative entries.
  static ConeSpec diagonal();
  // PSD operators commuting with every projector of an orthogonal resolution
  // of the identity.
  static ConeSpec block_diagonal(std::vector<Matrix> projectors);
  // Operators classical on the named factor: sum_x |x><x| (x) X_x, X_x PSD.
  static ConeSpec cq(std::string classical_factor);
  // PSD fixed points of the U (x) U twirl; the profile must consist of two
  // factors of equal dimension.
  static ConeSpec werner_twirl();
  static ConeSpec pinching_twirl(std::vector<Matrix> projectors);
  // Same emissions as ppt(); the tag records that the cone stands in for the
  // separable cone as its tractable outer bound.
  static ConeSpec sep_outer_ppt(std::vector<std::string> transposed = {});

  ConeVariant variant() const { return variant_; }

  // Constraints on prog that x satisfies exactly when it lies in the cone.
  void membership_constraints(ConicProgram& prog, const MatrixExpr& x) const;
  // Constraints for the dual cone; may add auxiliary variables to prog.
  void dual_membership_constraints(ConicProgram& prog, const MatrixExpr& x) const;

  ConeMembership contains(const HermitianOperator& x, double tol = 1e-8) const;
  ConeMembership dual_contains(const HermitianOperator& x, double tol = 1e-8) const;

  // The factor labels transposed by this cone's cut on the given profile
  // (resolves the empty-list default); errors unless the result is a proper
  // nonempty bipartition side.
  std::vector<std::string> resolve_cut(const DimProfile& dims) const;
  // The projector list used for block structure on the given profile; for cq
  // these are |x><x| on the classical factor padded with identities.
  std::vector<Matrix> resolve_projectors(const DimProfile& dims) const;

 private:
  // Linear projection onto the variant's structural subspace (diagonal part,
  // pinching, or twirl); membership demands being a fixed point of it.
  std::function<Matrix(const Matrix&)> invariant_projection(
      const DimProfile& dims) const;

  ConeVariant variant_ = ConeVariant::Positive;
  std::vector<std::string> cut_;
  std::string classical_;
  std::vector<Matrix> projectors_;
};

}  // namespace conelab

#pragma once

#include "conelab/cone_models.hpp"
#include "conelab/conic_engine.hpp"
#include "conelab/operator_core.hpp"

#include <string>
#include <vector>

namespace conelab {

// Every log in this module is base 2; results are in bits.

enum class EntropyQuantity {
  DmaxRestricted,
  DmaxDualShift,
  DmaxViaNorm,
  HminRestricted,
  HminDualShift,
  HminRecovery,
  HminDoublyRestricted,
  HmaxRestricted,
  HypothesisTesting,
  SmoothedDmax,
  SmoothedHmin,
  ExtHminBGivenA,
  ExtHminAGivenB,
};

std::string to_string(EntropyQuantity q);

// Outcome of one entropic program. `program_value` is the optimum of the
// underlying conic program on the exponential scale; `value_bits` applies the
// quantity's sign convention to its base-2 log. Infinite values only arise
// through the documented degeneracies and always come with a flag set.
struct EntropyResult {
  EntropyQuantity quantity = EntropyQuantity::DmaxRestricted;
  double value_bits = 0.0;
  double program_value = 0.0;
  SolveReport report;
  bool dominance_violated = false;  // support of P leaks out of the support of Q
  bool infeasible = false;          // error-bound constraint unreachable
};

// log2 max{<P,X> : <Q,X> <= 1, X in K}. P and Q must be PSD on the same
// factor layout. If the support of P is not contained in the support of Q
// (support projectors at tol 1e-9) the supremum is infinite; that case is
// detected up front and returned as +inf with `dominance_violated` set.
// A zero Q is an error.
EntropyResult d_max_restricted(const HermitianOperator& p, const HermitianOperator& q,
                               const ConeSpec& cone, const SolverOptions& opts = {});

// Same value through the shift program min{gamma : gamma Q - P in K*}.
EntropyResult d_max_dual_shift(const HermitianOperator& p, const HermitianOperator& q,
                               const ConeSpec& cone, const SolverOptions& opts = {});

// log2 ||Q^{-1/2} P Q^{-1/2}||_K with the pseudo-inverse square root. Only
// valid when conjugation by Q^{-1/2} preserves the cone: Positive always,
// Diagonal and BlockDiagonal when Q itself lies in the cone. Any other
// combination is refused; use d_max_restricted there instead.
EntropyResult d_max_via_norm(const HermitianOperator& p, const HermitianOperator& q,
                             const ConeSpec& cone, const SolverOptions& opts = {});

// -log2 max{<rho,X> : Tr_a X = I_rest, X in K} where `a_labels` names the
// factors forming the A side of H_min(A|B). The flipped direction H_min(B|A)
// is the same program called with the complementary labels; no relation
// between the two directions is asserted anywhere in this artifact.
EntropyResult h_min_restricted(const HermitianOperator& rho,
                               const std::vector<std::string>& a_labels,
                               const ConeSpec& cone, const SolverOptions& opts = {});

// Same value through the shift program min{Tr Y : I_A (x) Y - rho in K*}.
EntropyResult h_min_dual_shift(const HermitianOperator& rho,
                               const std::vector<std::string>& a_labels,
                               const ConeSpec& cone, const SolverOptions& opts = {});

// Singlet-fraction form of the same quantity on a two-factor state: -log2 of
// d_A max <(id (x) Psi)(rho), tau_AA'> over trace-preserving completely
// positive Psi from the second factor to a copy of the first whose adjoint
// map's Choi operator lies in K. The first factor is the A side.
EntropyResult h_min_via_recovery(const HermitianOperator& rho, const ConeSpec& cone,
                                 const SolverOptions& opts = {});

// Both marginals pinned: -log2 max{<p,X> : Tr_a X = I_b, Tr_b X = I_a,
// X in K}. The two sides must have equal total dimension.
EntropyResult h_min_doubly_restricted(const HermitianOperator& p,
                                      const std::vector<std::string>& a_labels,
                                      const ConeSpec& cone, const SolverOptions& opts = {});

// max{|<x,rho>| : rho in K, Tr rho <= 1}. PSD inputs need only the positive
// branch; general Hermitian inputs take the better of the +-x programs.
double conic_norm(const HermitianOperator& x, const ConeSpec& cone,
                  const SolverOptions& opts = {});

// Decoupling form on a pure tripartite state whose factors are read as
// A, B, C in layout order: log2(d_A F^2) where F is the best root fidelity
// between (id (x) Psi (x) id)(rho) and tau_AA' (x) omega over channels Psi
// from B to a copy of A whose Choi operator and its swap-transpose lie in K,
// and states omega on C. Only the local-unitary-invariant cone variants
// (Positive, Ppt, SepOuterPpt) are accepted; the input must be rank one.
EntropyResult h_max_restricted(const HermitianOperator& rho_abc, const ConeSpec& cone,
                               const SolverOptions& opts = {});

// log2 ||Tr_X Pi||_inf for Pi = sum_x |x><x| (x) (support of rho^x), the
// minimal cone projector dominating the support of a classical-quantum
// state. The classical factor is named by label and the state must be
// invariant under dephasing in that factor's basis (checked at `tol`).
double hartley_cq(const HermitianOperator& rho, const std::string& classical_label,
                  double tol = 1e-9);

// -log2 min{<P,X> : <Q,X> >= 1 - epsilon, 0 <= X <= I, X in K}. An
// unreachable error bound reports -inf with `infeasible` set; an optimum
// below max(1e-9, opts.tol), e.g. disjoint supports, reports +inf.
EntropyResult hypothesis_testing_restricted(const HermitianOperator& p,
                                            const HermitianOperator& q, double epsilon,
                                            const ConeSpec& cone,
                                            const SolverOptions& opts = {});

// Smoothing over the ball {rho~ : rho~ >= 0, Tr rho~ <= 1,
// F(rho, rho~) >= sqrt(1 - epsilon^2)}, jointly with the shift program of the
// base quantity. Inputs must be normalized states and epsilon in [0, 1).
// At epsilon = 0 the ball is the single point rho and the joint program has
// no strictly feasible point, so the plain shift program is solved instead.
EntropyResult smoothed_d_max(const HermitianOperator& rho, const HermitianOperator& q,
                             double epsilon, const ConeSpec& cone,
                             const SolverOptions& opts = {});
EntropyResult smoothed_h_min(const HermitianOperator& rho,
                             const std::vector<std::string>& a_labels, double epsilon,
                             const ConeSpec& cone, const SolverOptions& opts = {});

// Communication value: exp2 of minus the restricted min-entropy of the Choi
// operator conditioned on the output factors, i.e. the primal program value
// itself. Meaningful for cones invariant under local CP maps (Positive, Ppt,
// SepOuterPpt); other variants are refused unless the caller acknowledges the
// invariance assumption. The Choi flags must certify a CP and TP map.
double cv_restricted(const ChoiOperator& channel, const ConeSpec& cone,
                     const SolverOptions& opts = {},
                     bool allow_noninvariant_cone = false);

// Tr[rho (log2 rho - log2 sigma)] on the common support. rho must be a
// normalized state; sigma any nonzero PSD operator (reference operators like
// I (x) sigma_B are explicitly allowed). Support leakage of rho outside the
// support of sigma returns +inf.
double umegaki_relative_entropy(const HermitianOperator& rho,
                                const HermitianOperator& sigma, double tol = 1e-9);

// H(A|B) = -D(rho || I_A (x) rho_B) for the named A factors.
double conditional_entropy(const HermitianOperator& rho,
                           const std::vector<std::string>& a_labels,
                           double tol = 1e-9);

// Shared building block: appends a Hermitian 2d block variable constrained to
// [[P, Y], [Y^+, Q]] >= 0 with P, Q pinned to the given same-shaped
// expressions. <pairing, block> evaluates Re Tr Y, whose maximum over the
// block is the root fidelity F(P, Q).
struct FidelityBlock {
  VarRef block;
  Matrix pairing;
};
FidelityBlock add_fidelity_block(ConicProgram& prog, const MatrixExpr& top,
                                 const MatrixExpr& bottom);

}  // namespace conelab

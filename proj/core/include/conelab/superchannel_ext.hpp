#pragma once

#include "conelab/cone_models.hpp"
#include "conelab/conic_engine.hpp"
#include "conelab/entropy_programs.hpp"
#include "conelab/operator_core.hpp"

namespace conelab {

// Choi matrix of a supermap sending maps on the (A0 -> A1) pair to maps on
// the (B0 -> B1) pair, stored on the fixed factor layout [A0, A1, B0, B1].
// A supermap is a superchannel exactly when the matrix is PSD and the two
// trace-preserving-preserving marginal conditions hold:
//   Tr_{A0 B1} J = I_{A1 B0}
//   Tr_{B1} J   = (Tr_{A1 B1} J) (x) d_{A1}^{-1} I_{A1}
struct SupermapChoi {
  HermitianOperator op;

  explicit SupermapChoi(HermitianOperator o);

  const DimProfile& dims() const { return op.dims(); }
  int dim(const std::string& label) const;
};

// Choi of the supermap fixing every map, assembled as sum_E J_E (x) J_E over
// the elementary-map basis; equals the rank-one projector onto
// sum_{ik} |ik>_{A0 A1} |ik>_{B0 B1}. d0 is the input dim of the maps acted
// on, d1 their output dim.
SupermapChoi identity_supermap_choi(int d0, int d1);

// Superchannel that traces out the argument channel entirely and outputs the
// replacer B0 -> B1 preparing |0><0|: J = d_{A0}^{-1} I_{A0 A1 B0} (x)
// |0><0|_{B1}.
SupermapChoi discard_prepare_supermap_choi(int d_a0, int d_a1, int d_b0, int d_b1);

// Superchannel acting by plain composition Psi -> post . Psi . pre, with
// pre: B0 -> A0 and post: A1 -> B1 given as single-pair channel Chois. The
// memoryless family; always a superchannel when pre and post are channels.
SupermapChoi pre_post_supermap_choi(const ChoiOperator& pre, const ChoiOperator& post);

// Largest entrywise residual of the two superchannel marginal conditions.
double superchannel_marginal_residual(const SupermapChoi& j);

// Residual of the unital-preserving marginals
//   Tr_{A1 B0} J = I_{A0 B1}
//   Tr_{B0} J   = (Tr_{A0 B0} J) (x) d_{A0}^{-1} I_{A0}
double unital_preserving_residual(const SupermapChoi& j);

// Residual of the marginals satisfied exactly by duals of superchannels,
//   Tr_{A1 B0} J = I_{A0 B1}
//   Tr_{A1} J   = (Tr_{A1 B1} J) (x) d_{B1}^{-1} I_{B1}
// i.e. the image of the superchannel conditions under the block exchange.
double dual_superchannel_marginal_residual(const SupermapChoi& j);

// PSD within tol and superchannel marginal residual within tol.
bool is_superchannel(const SupermapChoi& j, double tol = 1e-8);

// Emit the corresponding marginal conditions as affine equality constraints
// on x, which must carry the [A0, A1, B0, B1] layout. Cone membership is the
// caller's responsibility.
void superchannel_constraints(ConicProgram& prog, const MatrixExpr& x);
void unital_preserving_constraints(ConicProgram& prog, const MatrixExpr& x);
void dual_superchannel_constraints(ConicProgram& prog, const MatrixExpr& x);

// Adjoint supermap: entrywise conjugate of the (A0, A1) <-> (B0, B1) block
// swap, re-expressed on the standard layout. Involution; sends superchannels
// to supermaps satisfying the dual marginal conditions and vice versa.
SupermapChoi supermap_dual(const SupermapChoi& j);

// J_{Theta[Psi]} = Tr_A[J_Theta (J_Psi^T (x) I_B)]. The channel must have
// input dim d_{A0} and output dim d_{A1}; the result is a B0 -> B1 Choi with
// freshly computed CP/TP flags.
ChoiOperator supermap_apply(const SupermapChoi& j, const ChoiOperator& channel);

enum class ExtDirection { BGivenA, AGivenB };

// Extended conditional min-entropy of a bipartite channel given as a Choi
// operator on (A0 B0 -> A1 B1), with factor labels A0, B0 on the input block
// and A1, B1 on the output block. Computes
//   B|A:  -log2[ d_{B0}^{-1} max <X, J> ]  over X in the cone meeting the
//         superchannel marginals,
//   A|B:  -log2[ d_{A0}^{-1} max <X, J> ]  over X meeting the dual marginal
//         conditions (the same program with the A and B roles exchanged).
EntropyResult extended_min_entropy(const ChoiOperator& channel, ExtDirection dir,
                                   const ConeSpec& cone, const SolverOptions& opts = {});

struct KebReport {
  bool is_superchannel = false;
  // PPT across the (A0 A1):(B0 B1) cut; necessary for the supermap to be
  // 1-entanglement-breaking, never sufficient.
  bool ppt_across_cut = false;
  double min_pt_eigenvalue = 0.0;
  Vector witness;  // eigenvector of the most negative PT eigenvalue; empty when PPT
};

KebReport keb_check(const SupermapChoi& j, double tol = 1e-8);

}  // namespace conelab

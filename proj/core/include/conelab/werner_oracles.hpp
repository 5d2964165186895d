#pragma once

#include "conelab/conic_engine.hpp"
#include "conelab/operator_core.hpp"

#include <utility>
#include <vector>

namespace conelab {

// Two-parameter family of states on a d (x) d system invariant under every
// U (x) U conjugation. lambda in [0, 1] weights the symmetric projector;
// alpha in [-1, 1] weights the swap operator. Either parameter determines
// the other; the conversions stay consistent to 1e-12.
struct WernerParams {
  int d = 2;
  double lambda = 0.0;
  double alpha = 0.0;
};

WernerParams werner_from_lambda(int d, double lambda);
WernerParams werner_from_alpha(int d, double alpha);

// unit-trace PSD operator on labels A, B with local dimension d
HermitianOperator werner_state(const WernerParams& p);

// Closed-form cone norms of the family. The k_rank >= 2 branch
// (1 + |alpha|) / (d (d - alpha)) equals the largest eigenvalue for every
// alpha. The k_rank = 1 branch (1 + min{alpha, 0}) / (d (d - alpha)) equals
// the separable-cone norm for alpha >= 0; for alpha < 0 the separable-cone
// norm is attained on a product state and coincides with the k_rank >= 2
// branch instead, while this expression drops below it. The k_rank = 1
// branch keeps this form because the nonmultiplicativity curve is defined
// against it.
double werner_norm_closed(const WernerParams& p, int k_rank);

// symmetry-reduced linear program for the two-copy separable-cone norm
// of rho_lambda (x) rho_lambda on the grouped (A A') : (B B') split
double werner_two_copy_lp(int d, double lambda, const SolverOptions& opts = {});

// divergence of the state from I (x) uniform over the separable cone (equal
// to the transpose-invariant cone value here), in bits; piecewise in lambda
// with the branch point at (d + 1) / (2 d)
double werner_dmax_sep_closed(int d, double lambda);

// bounds on the relative entropy to I (x) omega over states omega:
// (kappa, kappa + log2 d); the upper end is attained at omega uniform and
// the lower end at omega pure
std::pair<double, double> werner_relent_bounds(int d, double lambda);

// Smallest local dimension d <= d_cap where the restricted divergence at the
// uniform reference falls strictly below the relative entropy there.
// lambda in [0, 1/2]; at lambda = 1/2 no dimension qualifies.
struct SeparationScan {
  int d = 0;
  bool found = false;
  double margin = 0.0;  // relative entropy minus restricted value at the hit
};
SeparationScan separation_scan(double lambda, int d_cap = 64);

// figure data: single-copy closed-form norm, its square, the two-copy LP
// value, and their ratio, for each lambda in the grid
struct WernerCurveRow {
  double lambda = 0.0;
  double single = 0.0;
  double single_sq = 0.0;
  double twocopy = 0.0;
  double ratio = 0.0;
};
std::vector<WernerCurveRow> nonmultiplicativity_curve(
    int d, const std::vector<double>& lambda_grid,
    const SolverOptions& opts = {});

// lambda values where the two-copy over single-squared ratio crosses one,
// located by bisection against a small band that absorbs LP roundoff
std::vector<double> nonmultiplicativity_crossings(int d,
                                                  const SolverOptions& opts = {});

}  // namespace conelab

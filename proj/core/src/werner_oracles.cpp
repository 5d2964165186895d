#include "conelab/werner_oracles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace conelab {
namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

void check_dim(int d) {
  if (d < 2) fail("werner: local dimension must be at least 2");
}

void check_lambda(double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0))
    fail("werner: lambda must lie in [0, 1]");
}

double xlog2x(double t) { return t > 0.0 ? t * std::log2(t) : 0.0; }

}  // namespace

WernerParams werner_from_lambda(int d, double lambda) {
  check_dim(d);
  check_lambda(lambda);
  WernerParams p;
  p.d = d;
  p.lambda = lambda;
  // with t = tr(rho F) = 1 - 2 lambda the swap form has alpha = (t d + 1)/(t + d)
  double t = 1.0 - 2.0 * lambda;
  p.alpha = (t * d + 1.0) / (t + d);
  return p;
}

WernerParams werner_from_alpha(int d, double alpha) {
  check_dim(d);
  if (!(alpha >= -1.0 && alpha <= 1.0))
    fail("werner: alpha must lie in [-1, 1]");
  WernerParams p;
  p.d = d;
  p.alpha = alpha;
  p.lambda = (1.0 + d) * (1.0 - alpha) / (2.0 * (d - alpha));
  return p;
}

HermitianOperator werner_state(const WernerParams& p) {
  check_dim(p.d);
  check_lambda(p.lambda);
  int dd = p.d * p.d;
  Matrix f = swap_operator(p.d).matrix();
  Matrix eye = Matrix::Identity(dd, dd);
  Matrix sym = 0.5 * (eye + f);
  Matrix anti = 0.5 * (eye - f);
  double wp = 2.0 * p.lambda / (p.d * (p.d + 1.0));
  double wm = 2.0 * (1.0 - p.lambda) / (p.d * (p.d - 1.0));
  return HermitianOperator(DimProfile{{"A", p.d}, {"B", p.d}},
                           Matrix(wp * sym + wm * anti));
}

double werner_norm_closed(const WernerParams& p, int k_rank) {
  check_dim(p.d);
  if (k_rank < 1) fail("werner: k_rank must be at least 1");
  double denom = p.d * (p.d - p.alpha);
  if (k_rank == 1) return (1.0 + std::min(p.alpha, 0.0)) / denom;
  return (1.0 + std::abs(p.alpha)) / denom;
}

double werner_two_copy_lp(int d, double lambda, const SolverOptions& opts) {
  check_dim(d);
  check_lambda(lambda);
  double dp = d + 1.0;
  double dm = d - 1.0;

  // Coordinates of the U (x) U (x) U (x) U invariant ansatz in the product
  // basis of normalized symmetric and antisymmetric projectors:
  //   X = w P+P+ / d+^2 + x P+P- / (d+ d-) + y P-P+ / (d+ d-) + z P-P- / d-^2
  // scaled so the objective reads off the projector weights of rho (x) rho.
  ConicProgram prog;
  ScalarRef w = prog.add_scalar_variable("w");
  ScalarRef x = prog.add_scalar_variable("x");
  ScalarRef y = prog.add_scalar_variable("y");
  ScalarRef z = prog.add_scalar_variable("z");

  for (ScalarRef v : {w, x, y, z}) {
    ScalarExpr e;
    e.add_scalar(v, 1.0);
    prog.add_nonneg(e);
  }
  {
    // partial transpose on the primed pair stays positive
    ScalarExpr e;
    e.add_scalar(w, dp).add_scalar(y, dp).add_scalar(x, -dm).add_scalar(z, -dm);
    prog.add_nonneg(e);
  }
  {
    ScalarExpr e;
    e.add_scalar(w, dp).add_scalar(x, dp).add_scalar(y, -dm).add_scalar(z, -dm);
    prog.add_nonneg(e);
  }
  {
    // partial transpose on both pairs
    ScalarExpr e;
    e.add_scalar(w, dp * dp).add_scalar(z, dm * dm);
    e.add_scalar(x, -dp * dm).add_scalar(y, -dp * dm);
    prog.add_nonneg(e);
  }
  {
    // trace of X equals one
    ScalarExpr e;
    e.add_scalar(w, dp * dp).add_scalar(x, dp * dm);
    e.add_scalar(y, dp * dm).add_scalar(z, dm * dm);
    prog.add_scalar_equality(e, 4.0 / (static_cast<double>(d) * d));
  }

  ScalarExpr obj;
  obj.add_scalar(w, lambda * lambda);
  obj.add_scalar(x, lambda * (1.0 - lambda));
  obj.add_scalar(y, lambda * (1.0 - lambda));
  obj.add_scalar(z, (1.0 - lambda) * (1.0 - lambda));
  prog.maximize(obj);

  SolveReport rep = prog.solve(opts);
  if (rep.status != SolveStatus::Optimal)
    fail("werner: two-copy program did not reach optimality");
  return rep.primal_value;
}

double werner_dmax_sep_closed(int d, double lambda) {
  check_dim(d);
  check_lambda(lambda);
  double branch = (d + 1.0) / (2.0 * d);
  if (lambda >= branch) return std::log2(2.0 * lambda / (d + 1.0));
  return std::log2((d + 1.0 - 2.0 * lambda) /
                   (static_cast<double>(d) * d - 1.0));
}

std::pair<double, double> werner_relent_bounds(int d, double lambda) {
  check_dim(d);
  check_lambda(lambda);
  double kappa = xlog2x(lambda) + xlog2x(1.0 - lambda) +
                 lambda * std::log2((d - 1.0) / (d + 1.0)) + 1.0 -
                 std::log2(static_cast<double>(d) * (d - 1.0));
  return {kappa, kappa + std::log2(static_cast<double>(d))};
}

SeparationScan separation_scan(double lambda, int d_cap) {
  if (!(lambda >= 0.0 && lambda <= 0.5))
    fail("separation scan: lambda must lie in [0, 1/2]");
  SeparationScan out;
  for (int d = 2; d <= d_cap; ++d) {
    double restricted = werner_dmax_sep_closed(d, lambda);
    double upper = werner_relent_bounds(d, lambda).second;
    if (restricted < upper - 1e-12) {
      out.d = d;
      out.found = true;
      out.margin = upper - restricted;
      return out;
    }
  }
  return out;
}

std::vector<WernerCurveRow> nonmultiplicativity_curve(
    int d, const std::vector<double>& lambda_grid, const SolverOptions& opts) {
  std::vector<WernerCurveRow> rows;
  rows.reserve(lambda_grid.size());
  for (double lambda : lambda_grid) {
    WernerCurveRow r;
    r.lambda = lambda;
    r.single = werner_norm_closed(werner_from_lambda(d, lambda), 1);
    r.single_sq = r.single * r.single;
    r.twocopy = werner_two_copy_lp(d, lambda, opts);
    // at lambda = 1 the single-copy expression vanishes and the ratio is inf
    r.ratio = r.twocopy / r.single_sq;
    rows.push_back(r);
  }
  return rows;
}

std::vector<double> nonmultiplicativity_crossings(int d,
                                                  const SolverOptions& opts) {
  check_dim(d);
  // sign of (ratio - 1 - band); the band keeps LP roundoff from spawning
  // spurious crossings inside the multiplicative window
  const double band = 1e-6;
  auto excess = [&](double lambda) {
    double single = werner_norm_closed(werner_from_lambda(d, lambda), 1);
    double two = werner_two_copy_lp(d, lambda, opts);
    return two - (1.0 + band) * single * single;
  };

  const int coarse = 64;
  std::vector<double> out;
  double prev_l = 0.0;
  double prev_v = excess(0.0);
  for (int i = 1; i <= coarse; ++i) {
    double l = static_cast<double>(i) / coarse;
    double v = excess(l);
    if ((prev_v > 0.0) != (v > 0.0)) {
      double lo = prev_l;
      double hi = l;
      double flo = prev_v;
      for (int it = 0; it < 30; ++it) {
        double mid = 0.5 * (lo + hi);
        double fm = excess(mid);
        if ((fm > 0.0) == (flo > 0.0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      out.push_back(0.5 * (lo + hi));
    }
    prev_l = l;
    prev_v = v;
  }
  return out;
}

}  // namespace conelab

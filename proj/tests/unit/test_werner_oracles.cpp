#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "conelab/cone_models.hpp"
#include "conelab/conic_engine.hpp"
#include "conelab/entropy_programs.hpp"
#include "conelab/operator_core.hpp"
#include "conelab/random_ops.hpp"
#include "conelab/werner_oracles.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

using namespace conelab;

namespace {

SolverOptions tight_opts() {
  SolverOptions o;
  o.tol = 1e-11;
  return o;
}

// I_A (x) pi_B on a d (x) d system; trace d
HermitianOperator uniform_reference(int d) {
  Matrix m = Matrix::Identity(d * d, d * d) / static_cast<double>(d);
  return HermitianOperator(DimProfile{{"A", d}, {"B", d}}, m);
}

HermitianOperator diagonal_reference(int d, const Matrix& omega) {
  return HermitianOperator(DimProfile{{"A", d}, {"B", d}},
                           kron(Matrix::Identity(d, d), omega));
}

}  // namespace

TEST_CASE("parameter conversions are involutive and hit the landmarks") {
  for (int d : {2, 3, 4, 5}) {
    for (int i = 0; i <= 40; ++i) {
      double lam = i / 40.0;
      WernerParams p = werner_from_lambda(d, lam);
      CHECK(p.d == d);
      CHECK(p.lambda == lam);
      CHECK(std::abs(werner_from_alpha(d, p.alpha).lambda - lam) <= 1e-12);

      double al = -1.0 + 2.0 * i / 40.0;
      WernerParams q = werner_from_alpha(d, al);
      CHECK(std::abs(werner_from_lambda(d, q.lambda).alpha - al) <= 1e-12);
    }
    CHECK(std::abs(werner_from_lambda(d, 0.5).alpha - 1.0 / d) <= 1e-12);
    CHECK(std::abs(werner_from_lambda(d, 0.0).alpha - 1.0) <= 1e-12);
    CHECK(std::abs(werner_from_lambda(d, 1.0).alpha + 1.0) <= 1e-12);
  }
  CHECK_THROWS_AS(werner_from_lambda(3, -0.01), std::runtime_error);
  CHECK_THROWS_AS(werner_from_lambda(3, 1.01), std::runtime_error);
  CHECK_THROWS_AS(werner_from_alpha(3, -1.01), std::runtime_error);
  CHECK_THROWS_AS(werner_from_alpha(3, 1.01), std::runtime_error);
  CHECK_THROWS_AS(werner_from_lambda(1, 0.5), std::runtime_error);
}

TEST_CASE("the state family carries the projector weights and the swap form") {
  for (int d : {2, 3}) {
    int dd = d * d;
    Matrix f = swap_operator(d).matrix();
    Matrix sym = 0.5 * (Matrix::Identity(dd, dd) + f);
    Matrix anti = 0.5 * (Matrix::Identity(dd, dd) - f);
    for (double lam : {0.0, 0.3, 1.0}) {
      HermitianOperator rho = werner_state(werner_from_lambda(d, lam));
      CHECK(rho.dims().factor_count() == 2);
      CHECK(rho.dims().factor(0).label == "A");
      CHECK(rho.dims().factor(0).dim == d);
      CHECK(std::abs(rho.matrix().trace().real() - 1.0) <= 1e-12);
      double wp = 2.0 * lam / (d * (d + 1.0));
      double wm = 2.0 * (1.0 - lam) / (d * (d - 1.0));
      CHECK((rho.matrix() - wp * sym - wm * anti).cwiseAbs().maxCoeff() <= 1e-15);
    }
    // both parametrizations build the same matrix
    for (double al : {-1.0, -0.4, 0.0, 0.5, 1.0}) {
      HermitianOperator rho = werner_state(werner_from_alpha(d, al));
      Matrix swap_form =
          (Matrix::Identity(dd, dd) - al * f) / (d * (d - al));
      CHECK((rho.matrix() - swap_form).cwiseAbs().maxCoeff() <= 1e-15);
    }
  }
}

TEST_CASE("closed-form norm branches reproduce the tabulated values") {
  CHECK(std::abs(werner_norm_closed(werner_from_alpha(3, 1.0), 1) - 1.0 / 6) <=
        1e-15);
  for (int d : {2, 3, 4}) {
    CHECK(std::abs(werner_norm_closed(werner_from_alpha(d, 0.0), 1) -
                   1.0 / (d * d)) <= 1e-15);
    CHECK(std::abs(werner_norm_closed(werner_from_alpha(d, 0.0), 2) -
                   1.0 / (d * d)) <= 1e-15);
  }
  CHECK(std::abs(werner_norm_closed(werner_from_alpha(2, -1.0), 2) - 1.0 / 3) <=
        1e-15);
  CHECK(std::abs(werner_norm_closed(werner_from_alpha(3, -0.5), 2) - 1.0 / 7) <=
        1e-15);
  CHECK(std::abs(werner_norm_closed(werner_from_alpha(3, -0.5), 1) - 1.0 / 21) <=
        1e-15);
  CHECK(werner_norm_closed(werner_from_alpha(2, -1.0), 1) == 0.0);
  CHECK(werner_norm_closed(werner_from_alpha(3, 0.7), 5) ==
        werner_norm_closed(werner_from_alpha(3, 0.7), 2));
  CHECK_THROWS_AS(werner_norm_closed(werner_from_alpha(3, 0.5), 0),
                  std::runtime_error);
}

TEST_CASE("cone programs land on the closed norm branches") {
  SolverOptions opts;
  opts.tol = 1e-9;
  double worst_sep = 0.0;
  for (int d : {2, 3, 4}) {
    for (int i = 0; i <= 20; ++i) {
      WernerParams p = werner_from_alpha(d, i / 20.0);
      double sdp = conic_norm(werner_state(p), ConeSpec::sep_outer_ppt(), opts);
      worst_sep = std::max(worst_sep, std::abs(sdp - werner_norm_closed(p, 1)));
    }
  }
  CHECK(worst_sep <= 1e-6);
  MESSAGE("largest gap to the k = 1 branch on alpha in [0, 1]: " << worst_sep);

  // below alpha = 0 the separable-cone optimum is a product state and the
  // k >= 2 branch takes over
  for (int d : {2, 3}) {
    for (double al : {-1.0, -0.7, -0.35, -0.05}) {
      WernerParams p = werner_from_alpha(d, al);
      double sdp = conic_norm(werner_state(p), ConeSpec::sep_outer_ppt(), opts);
      CHECK(std::abs(sdp - werner_norm_closed(p, 2)) <= 1e-6);
    }
  }

  SolverOptions tight = tight_opts();
  double worst_pos = 0.0;
  for (int d : {2, 3, 4}) {
    for (int i = 0; i <= 20; ++i) {
      WernerParams p = werner_from_alpha(d, -1.0 + 2.0 * i / 20.0);
      HermitianOperator rho = werner_state(p);
      double sdp = conic_norm(rho, ConeSpec::positive(), tight);
      worst_pos = std::max(worst_pos, std::abs(sdp - werner_norm_closed(p, 2)));
      Eigen::SelfAdjointEigenSolver<Matrix> es(rho.matrix());
      CHECK(std::abs(es.eigenvalues().maxCoeff() -
                     werner_norm_closed(p, 2)) <= 1e-13);
    }
  }
  CHECK(worst_pos <= 1e-10);
}

TEST_CASE("symmetry-reduced two-copy program matches hand-solved vertices") {
  SolverOptions opts = tight_opts();
  struct Row {
    int d;
    double lam;
    double want;
  };
  const Row rows[] = {
      {3, 0.0, 1.0 / 27},       {3, 1.0, 1.0 / 36},
      {3, 0.5, 1.0 / 64},       {3, 2.0 / 3.0, 1.0 / 81},
      {3, 0.25, 19.0 / 864},    {3, 0.75, 1.0 / 64},
      {3, 2.0 / 7.0, 1.0 / 49}, {2, 0.0, 1.0 / 4},
      {2, 0.5, 1.0 / 9},        {2, 0.875, 49.0 / 576},
      {4, 0.0, 1.0 / 96},       {4, 0.2, 83.0 / 12000},
  };
  for (const Row& r : rows)
    CHECK(std::abs(werner_two_copy_lp(r.d, r.lam, opts) - r.want) <= 1e-10);

  // the multiplicative point of the figure
  double closed = werner_norm_closed(werner_from_lambda(3, 0.5), 1);
  CHECK(std::abs(werner_two_copy_lp(3, 0.5, opts) - closed * closed) <= 1e-9);

  CHECK_THROWS_AS(werner_two_copy_lp(3, -0.1), std::runtime_error);
  CHECK_THROWS_AS(werner_two_copy_lp(3, 1.1), std::runtime_error);
  CHECK_THROWS_AS(werner_two_copy_lp(1, 0.5), std::runtime_error);
}

TEST_CASE("two-copy value never falls below the squared single-copy norm") {
  SolverOptions opts = tight_opts();
  for (int d : {2, 3}) {
    for (int i = 0; i <= 50; ++i) {
      double lam = i / 50.0;
      double two = werner_two_copy_lp(d, lam, opts);
      double s1 = werner_norm_closed(werner_from_lambda(d, lam), 1);
      CHECK(two >= (1.0 - 1e-9) * s1 * s1);
    }
    // in the negative-alpha region the cone norm itself multiplies: the
    // two-copy value equals the squared k >= 2 branch there
    double start = (d + 1.0) / (2.0 * d);
    for (double lam : {start + 0.05, start + 0.15, 1.0}) {
      double two = werner_two_copy_lp(d, lam, opts);
      double s2 = werner_norm_closed(werner_from_lambda(d, lam), 2);
      CHECK(std::abs(two - s2 * s2) <= 1e-9);
    }
  }
}

TEST_CASE("unreduced two-copy cone program agrees with the reduced one") {
  SolverOptions big;
  big.tol = 1e-7;
  SolverOptions lp = tight_opts();
  for (double lam : {0.15, 0.5, 0.9}) {
    HermitianOperator rho = werner_state(werner_from_lambda(3, lam));
    HermitianOperator other = relabel(rho, {"Ap", "Bp"});
    HermitianOperator prod =
        permute_factors(tensor(rho, other), {"A", "Ap", "B", "Bp"});
    double sdp = conic_norm(prod, ConeSpec::ppt({"B", "Bp"}), big);
    double red = werner_two_copy_lp(3, lam, lp);
    CHECK(std::abs(sdp - red) <= 1e-6);
  }
}

TEST_CASE("restricted divergence from the uniform reference follows the closed branches") {
  SolverOptions opts;
  opts.tol = 1e-9;
  for (int d : {2, 3}) {
    HermitianOperator ref = uniform_reference(d);
    double worst = 0.0;
    for (int i = 0; i <= 20; ++i) {
      double lam = i / 20.0;
      HermitianOperator rho = werner_state(werner_from_lambda(d, lam));
      EntropyResult res = d_max_restricted(rho, ref, ConeSpec::ppt(), opts);
      worst = std::max(worst,
                       std::abs(res.value_bits - werner_dmax_sep_closed(d, lam)));
    }
    CHECK(worst <= 1e-6);
    // the invariant outer cone gives the same answer
    for (double lam : {0.1, 0.55, 0.9}) {
      HermitianOperator rho = werner_state(werner_from_lambda(d, lam));
      EntropyResult res =
          d_max_restricted(rho, ref, ConeSpec::sep_outer_ppt(), opts);
      CHECK(std::abs(res.value_bits - werner_dmax_sep_closed(d, lam)) <= 1e-6);
    }
  }

  CHECK(std::abs(werner_dmax_sep_closed(2, 0.0)) <= 1e-12);
  CHECK(std::abs(werner_dmax_sep_closed(3, 1.0) + 1.0) <= 1e-12);
  for (int d : {2, 3, 4, 5}) {
    double star = (d + 1.0) / (2.0 * d);
    CHECK(std::abs(werner_dmax_sep_closed(d, star) + std::log2(double(d))) <=
          1e-9);
    CHECK(std::abs(werner_dmax_sep_closed(d, star - 1e-9) -
                   werner_dmax_sep_closed(d, star + 1e-9)) <= 1e-7);
  }
}

TEST_CASE("conditioning on the second factor negates the closed divergence") {
  SolverOptions opts;
  opts.tol = 1e-9;
  for (int d : {2, 3}) {
    for (double lam : {0.1, 0.4, 0.75, 1.0}) {
      HermitianOperator rho = werner_state(werner_from_lambda(d, lam));
      EntropyResult res = h_min_restricted(rho, {"A"}, ConeSpec::ppt(), opts);
      CHECK(std::abs(res.value_bits + werner_dmax_sep_closed(d, lam)) <= 1e-6);
    }
  }
}

TEST_CASE("relative entropy from the uniform reference saturates the upper bound") {
  for (int d : {2, 3, 4}) {
    HermitianOperator ref = uniform_reference(d);
    for (int i = 0; i <= 20; ++i) {
      double lam = i / 20.0;
      auto [lo, hi] = werner_relent_bounds(d, lam);
      CHECK(std::abs(hi - lo - std::log2(double(d))) <= 1e-12);
      double um =
          umegaki_relative_entropy(werner_state(werner_from_lambda(d, lam)), ref);
      CHECK(std::abs(um - hi) <= 1e-9);
    }
  }
  // endpoint limits, x log x -> 0
  CHECK(std::abs(werner_relent_bounds(2, 0.0).second - 1.0) <= 1e-12);
  CHECK(std::abs(werner_relent_bounds(3, 0.0).second) <= 1e-12);
  CHECK(std::abs(werner_relent_bounds(3, 1.0).first - std::log2(1.0 / 6)) <=
        1e-12);
}

TEST_CASE("separation scan finds the first dimension with a strict gap") {
  SeparationScan s0 = separation_scan(0.0);
  CHECK(s0.found);
  CHECK(s0.d == 2);
  CHECK(std::abs(s0.margin - 1.0) <= 1e-12);

  SeparationScan s25 = separation_scan(0.25);
  CHECK(s25.found);
  CHECK(s25.d == 2);
  CHECK(s25.margin > 0.05);

  SeparationScan s40 = separation_scan(0.4);
  CHECK(s40.found);
  CHECK(s40.d == 5);

  SeparationScan s49 = separation_scan(0.49);
  CHECK(s49.found);
  CHECK(s49.d == 50);
  CHECK(s49.margin > 0.0);
  MESSAGE("lambda = 0.49 separates first at d = " << s49.d << " with margin "
                                                  << s49.margin);
  // minimality confirmed by the direct inequality on both sides of the hit
  CHECK(werner_dmax_sep_closed(s49.d, 0.49) <
        werner_relent_bounds(s49.d, 0.49).second - 1e-12);
  CHECK_FALSE(werner_dmax_sep_closed(s49.d - 1, 0.49) <
              werner_relent_bounds(s49.d - 1, 0.49).second - 1e-12);

  SeparationScan capped = separation_scan(0.49, 10);
  CHECK_FALSE(capped.found);
  CHECK(capped.d == 0);

  SeparationScan half = separation_scan(0.5);
  CHECK_FALSE(half.found);

  CHECK_THROWS_AS(separation_scan(0.51), std::runtime_error);
  CHECK_THROWS_AS(separation_scan(-0.01), std::runtime_error);
}

TEST_CASE("figure curve rows are internally consistent") {
  SolverOptions opts = tight_opts();
  std::vector<double> grid;
  for (int i = 0; i <= 20; ++i) grid.push_back(i / 20.0);
  grid.push_back(2.0 / 3.0);  // the alpha = 0 point at d = 3
  std::vector<WernerCurveRow> rows = nonmultiplicativity_curve(3, grid, opts);
  REQUIRE(rows.size() == grid.size());
  for (const WernerCurveRow& r : rows) {
    WernerParams p = werner_from_lambda(3, r.lambda);
    CHECK(std::abs(r.single - werner_norm_closed(p, 1)) <= 1e-15);
    CHECK(std::abs(r.single_sq - r.single * r.single) <= 1e-18);
    if (std::isinf(r.ratio))
      CHECK(r.single == 0.0);
    else
      CHECK(r.ratio >= 1.0 - 1e-9);
  }
  CHECK(std::abs(rows.front().ratio - 4.0 / 3.0) <= 1e-8);
  CHECK(std::abs(rows.back().ratio - 1.0) <= 1e-7);
  CHECK(std::isinf(rows[20].ratio));
  CHECK(rows[20].ratio > 0.0);
  CHECK(std::abs(rows[20].twocopy - 1.0 / 36) <= 1e-10);
}

TEST_CASE("ratio crossings sit at the roots of the vertex quadratic") {
  SolverOptions opts = tight_opts();
  // the two boundary vertices of the reduced program tie exactly where
  // 21 lambda^2 - 20 lambda + 4 = 0, so the d = 3 window ends at 2/7 and
  // reopens at 2/3
  std::vector<double> c3 = nonmultiplicativity_crossings(3, opts);
  REQUIRE(c3.size() == 2);
  CHECK(std::abs(c3[0] - 2.0 / 7.0) <= 1e-4);
  CHECK(std::abs(c3[1] - 2.0 / 3.0) <= 1e-4);
  MESSAGE("d = 3 ratio crossings: " << c3[0] << ", " << c3[1]);

  std::vector<double> c2 = nonmultiplicativity_crossings(2, opts);
  REQUIRE(c2.size() == 1);
  CHECK(std::abs(c2[0] - 0.75) <= 1e-4);

  std::vector<double> c4 = nonmultiplicativity_crossings(4, opts);
  REQUIRE(c4.size() == 2);
  CHECK(std::abs(c4[0] - 5.0 / 14.0) <= 1e-4);
  CHECK(std::abs(c4[1] - 5.0 / 8.0) <= 1e-4);
}

TEST_CASE("skewing the reference can only raise the restricted divergence") {
  SolverOptions opts;
  opts.tol = 1e-9;

  // diagonal skew with an exactly computable optimum: filtering the symmetric
  // projector concentrates on the weakest reference direction
  {
    HermitianOperator rho = werner_state(werner_from_lambda(2, 1.0));
    Matrix omega = Matrix::Zero(2, 2);
    omega(0, 0) = 0.9;
    omega(1, 1) = 0.1;
    HermitianOperator ref = diagonal_reference(2, omega);
    for (const ConeSpec& cone : {ConeSpec::positive(), ConeSpec::ppt(),
                                 ConeSpec::sep_outer_ppt()}) {
      EntropyResult res = d_max_restricted(rho, ref, cone, opts);
      CHECK(std::abs(res.value_bits - std::log2(10.0 / 3.0)) <= 1e-5);
    }
    double lift = std::log2(10.0 / 3.0) - werner_dmax_sep_closed(2, 1.0);
    CHECK(std::abs(lift - std::log2(5.0)) <= 1e-12);
  }

  // random full-rank references never undercut the uniform one; the actual
  // deviations are reported, not assumed away
  Rng rng(41);
  for (int k = 0; k < 5; ++k) {
    int d = k < 3 ? 2 : 3;
    double lam = k < 3 ? 0.8 : 0.35;
    Matrix omega = 0.8 * random_density(rng, d) +
                   0.2 * Matrix::Identity(d, d) / static_cast<double>(d);
    HermitianOperator rho = werner_state(werner_from_lambda(d, lam));
    EntropyResult res =
        d_max_restricted(rho, diagonal_reference(d, omega), ConeSpec::ppt(), opts);
    double closed = werner_dmax_sep_closed(d, lam);
    CHECK(res.value_bits >= closed - 1e-6);
    MESSAGE("reference draw " << k << " (d = " << d
                              << "): deviation above the closed form = "
                              << res.value_bits - closed);
  }

  // rank-deficient reference loses dominance and the value diverges
  {
    Matrix omega = Matrix::Zero(2, 2);
    omega(0, 0) = 1.0;
    EntropyResult res =
        d_max_restricted(werner_state(werner_from_lambda(2, 1.0)),
                         diagonal_reference(2, omega), ConeSpec::ppt(), opts);
    CHECK(res.dominance_violated);
    CHECK(std::isinf(res.value_bits));
    CHECK(res.value_bits > 0.0);
  }
}

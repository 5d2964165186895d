#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "conelab/cone_models.hpp"
#include "conelab/conic_engine.hpp"
#include "conelab/operator_core.hpp"
#include "conelab/random_ops.hpp"
#include "conelab/superchannel_ext.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>
#include <vector>

using namespace conelab;

namespace {

SolverOptions tight_opts() {
  SolverOptions o;
  o.tol = 1e-9;
  return o;
}

DimProfile supermap_layout(int a0 = 2, int a1 = 2, int b0 = 2, int b1 = 2) {
  return DimProfile{{"A0", a0}, {"A1", a1}, {"B0", b0}, {"B1", b1}};
}

DimProfile channel_layout(int a0 = 2, int b0 = 2, int a1 = 2, int b1 = 2) {
  return DimProfile{{"A0", a0}, {"B0", b0}, {"A1", a1}, {"B1", b1}};
}

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

// unnormalized maximally entangled projector sum_{vv'} |vv><v'v'| on d (x) d
Matrix phi_plus_u(int d) {
  Matrix m = Matrix::Zero(d * d, d * d);
  for (int v = 0; v < d; ++v)
    for (int w = 0; w < d; ++w) m(v * d + v, w * d + w) = 1.0;
  return m;
}

ChoiOperator identity_bipartite_channel() {
  Vector omega = Vector::Zero(16);
  for (int v = 0; v < 4; ++v) omega(v * 4 + v) = 1.0;
  return choi_from_operator(HermitianOperator(channel_layout(), omega * omega.adjoint()),
                            2);
}

// rho_{A0 B0} -> Tr[rho] * (w on A1) (x) (t on B1)
ChoiOperator replacer_channel(const Matrix& w, const Matrix& t) {
  int d1 = static_cast<int>(w.rows()), d2 = static_cast<int>(t.rows());
  Matrix j = kron(Matrix::Identity(4, 4), kron(w, t));
  return choi_from_operator(
      HermitianOperator(channel_layout(2, 2, d1, d2), j), 2);
}

// Copies B0 in the computational basis into the post-processing: the argument
// channel is fed |i><i| and its output is rotated by U_i (U_0 = I, U_1 = X).
// A superchannel whose B0 marginal is correlated with the output pair.
SupermapChoi controlled_copy_supermap() {
  Matrix x(2, 2);
  x << 0, 1, 1, 0;
  Matrix m = Matrix::Zero(16, 16);
  for (int i = 0; i < 2; ++i) {
    Matrix u = i == 0 ? Matrix::Identity(2, 2) : x;
    Matrix lift = kron(Matrix::Identity(2, 2), u);
    Matrix phi_i = lift * phi_plus_u(2) * lift.adjoint();
    m += kron(basis_state(2, i), kron(basis_state(2, i), phi_i));
  }
  Matrix arranged = permute_factors_m(m, {2, 2, 2, 2}, {0, 2, 1, 3});
  return SupermapChoi(HermitianOperator(supermap_layout(), arranged));
}

ChoiOperator single_pair_channel(const Matrix& j, int d_in) {
  int d_out = static_cast<int>(j.rows()) / d_in;
  return choi_from_operator(
      HermitianOperator(DimProfile{{"in", d_in}, {"out", d_out}}, j), 1);
}

double pairing(const SupermapChoi& theta, const HermitianOperator& j_layout) {
  return (theta.op.matrix().cwiseProduct(j_layout.matrix().conjugate())).sum().real();
}

HermitianOperator to_supermap_layout(const ChoiOperator& channel) {
  return permute_factors(HermitianOperator(channel.dims(), channel.matrix()),
                         {"A0", "A1", "B0", "B1"});
}

}  // namespace

TEST_CASE("elementary-basis assembly reproduces the identity supermap projector") {
  Matrix sum = Matrix::Zero(16, 16);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) {
          Matrix e_a0 = Matrix::Zero(2, 2), e_a1 = Matrix::Zero(2, 2);
          e_a0(i, j) = 1.0;
          e_a1(k, l) = 1.0;
          Matrix je = kron(e_a0, e_a1);
          sum += kron(je, je);
        }
  SupermapChoi fac = identity_supermap_choi(2, 2);
  CHECK(max_abs(sum - fac.op.matrix()) == 0.0);

  // rank-one with weight d_{A0} d_{A1}
  Eigen::SelfAdjointEigenSolver<Matrix> es(fac.op.matrix());
  CHECK(es.eigenvalues()(15) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(std::abs(es.eigenvalues()(14)) < 1e-12);

  CHECK(superchannel_marginal_residual(fac) < 1e-14);
  CHECK(unital_preserving_residual(fac) < 1e-14);
  CHECK(dual_superchannel_marginal_residual(fac) < 1e-14);
  CHECK(is_superchannel(fac));
}

TEST_CASE("marginal residuals sort the example supermaps") {
  SupermapChoi dp = discard_prepare_supermap_choi(2, 2, 2, 2);
  CHECK(superchannel_marginal_residual(dp) < 1e-14);
  CHECK(is_superchannel(dp));
  // sends unital channels to the |0> replacer, so it cannot preserve
  // unitality itself: the A0 B1 marginal is 2 I (x) |0><0| instead of I
  CHECK(unital_preserving_residual(dp) == doctest::Approx(1.0).epsilon(1e-12));

  SupermapChoi dp2 = discard_prepare_supermap_choi(2, 3, 2, 2);
  CHECK(superchannel_marginal_residual(dp2) < 1e-14);
  CHECK(is_superchannel(dp2));

  SupermapChoi zero(HermitianOperator(supermap_layout(), Matrix::Zero(16, 16)));
  CHECK(superchannel_marginal_residual(zero) == doctest::Approx(1.0));
  CHECK_FALSE(is_superchannel(zero));

  // marginals intact but a negative eigenvalue: perturb along the family
  // direction phi_A (x) (I - 2 phi_B), which every marginal annihilates
  Matrix dir = kron(phi_plus_u(2), Matrix::Identity(4, 4) - 2.0 * phi_plus_u(2));
  Matrix base = 0.5 * kron(Matrix::Identity(4, 4), phi_plus_u(2));
  SupermapChoi bent(HermitianOperator(supermap_layout(),
                                      permute_factors_m(base, {2, 2, 2, 2}, {0, 2, 1, 3}) -
                                          0.05 * permute_factors_m(dir, {2, 2, 2, 2},
                                                                   {0, 2, 1, 3})));
  CHECK(superchannel_marginal_residual(bent) < 1e-12);
  CHECK_FALSE(is_superchannel(bent));
}

TEST_CASE("the adjoint exchanges the marginal roles and is an involution") {
  Rng rng(23);
  SupermapChoi id_sm = identity_supermap_choi(2, 2);
  SupermapChoi dp = discard_prepare_supermap_choi(2, 2, 2, 2);
  SupermapChoi cc = controlled_copy_supermap();
  SupermapChoi rnd(HermitianOperator(supermap_layout(2, 3, 2, 2),
                                     random_hermitian(rng, 24)));

  for (const SupermapChoi* j : {&id_sm, &dp, &cc, &rnd}) {
    SupermapChoi back = supermap_dual(supermap_dual(*j));
    CHECK(max_abs(back.op.matrix() - j->op.matrix()) == 0.0);
    // the residual of the superchannel conditions survives the exchange
    CHECK(superchannel_marginal_residual(*j) ==
          doctest::Approx(dual_superchannel_marginal_residual(supermap_dual(*j)))
              .epsilon(1e-12));
  }

  // dual dims follow the blocks
  SupermapChoi rd = supermap_dual(rnd);
  CHECK(rd.dim("A0") == 2);
  CHECK(rd.dim("A1") == 2);
  CHECK(rd.dim("B0") == 2);
  CHECK(rd.dim("B1") == 3);

  // the adjoint of this discard-and-prepare superchannel still preserves
  // unitality; input-correlated post-processing is what breaks it
  CHECK(unital_preserving_residual(supermap_dual(dp)) < 1e-14);
  CHECK(unital_preserving_residual(supermap_dual(id_sm)) < 1e-14);
  CHECK(unital_preserving_residual(supermap_dual(cc)) ==
        doctest::Approx(0.5).epsilon(1e-12));
  // so the duals of superchannels and the unital-preserving PSD supermaps
  // are genuinely different sets
  CHECK(dual_superchannel_marginal_residual(supermap_dual(cc)) < 1e-14);
}

TEST_CASE("the composition family lands in the superchannel set") {
  Rng rng(31);
  Matrix phiu = phi_plus_u(2);
  SupermapChoi idpp = pre_post_supermap_choi(single_pair_channel(phiu, 2),
                                             single_pair_channel(phiu, 2));
  CHECK(max_abs(idpp.op.matrix() - identity_supermap_choi(2, 2).op.matrix()) == 0.0);

  for (int i = 0; i < 5; ++i) {
    ChoiOperator pre = random_cptp_choi(rng, 2, 2);
    ChoiOperator post = random_cptp_choi(rng, 3, 2);  // asymmetric inner pair
    SupermapChoi theta = pre_post_supermap_choi(pre, post);
    CHECK(theta.dim("A1") == 3);
    CHECK(superchannel_marginal_residual(theta) < 1e-12);
    CHECK(is_superchannel(theta));
  }

  // the set is convex
  SupermapChoi a = pre_post_supermap_choi(random_cptp_choi(rng, 2, 2),
                                          random_cptp_choi(rng, 2, 2));
  SupermapChoi b = discard_prepare_supermap_choi(2, 2, 2, 2);
  SupermapChoi mix(HermitianOperator(supermap_layout(),
                                     0.3 * a.op.matrix() + 0.7 * b.op.matrix()));
  CHECK(is_superchannel(mix));
}

TEST_CASE("applying a supermap follows the contraction formula") {
  Rng rng(37);
  SupermapChoi id_sm = identity_supermap_choi(2, 2);
  for (int i = 0; i < 5; ++i) {
    ChoiOperator psi = random_cptp_choi(rng, 2, 2);
    ChoiOperator out = supermap_apply(id_sm, psi);
    CHECK(max_abs(out.matrix() - psi.matrix()) < 1e-12);
    CHECK(out.tp() == Tristate::Yes);
    CHECK(out.cp() == Tristate::Yes);
  }

  SupermapChoi dp = discard_prepare_supermap_choi(2, 2, 2, 2);
  ChoiOperator rep = supermap_apply(dp, random_cptp_choi(rng, 2, 2));
  Matrix expect = kron(Matrix::Identity(2, 2), basis_state(2, 0));
  CHECK(max_abs(rep.matrix() - expect) < 1e-12);

  // composition supermap acts as post . psi . pre, checked on states
  ChoiOperator pre = random_cptp_choi(rng, 2, 2);
  ChoiOperator post = random_cptp_choi(rng, 2, 2);
  ChoiOperator psi = random_cptp_choi(rng, 2, 2);
  ChoiOperator through = supermap_apply(pre_post_supermap_choi(pre, post), psi);
  for (int i = 0; i < 3; ++i) {
    HermitianOperator rho(DimProfile{{"in", 2}},
                          random_density(rng, 2));
    HermitianOperator lhs = apply_via_choi(through, rho);
    HermitianOperator rhs = apply_via_choi(post, apply_via_choi(psi, apply_via_choi(pre, rho)));
    CHECK(max_abs(lhs.matrix() - rhs.matrix()) < 1e-10);
  }

  // the basis-controlled supermap feeds |i><i| through and rotates by U_i
  SupermapChoi cc = controlled_copy_supermap();
  ChoiOperator cc_out = supermap_apply(cc, psi);
  CHECK(cc_out.tp() == Tristate::Yes);
  Matrix x(2, 2);
  x << 0, 1, 1, 0;
  for (int i = 0; i < 3; ++i) {
    Matrix rho = random_density(rng, 2);
    Matrix direct = Matrix::Zero(2, 2);
    for (int b = 0; b < 2; ++b) {
      Matrix u = b == 0 ? Matrix::Identity(2, 2) : x;
      Matrix fed = apply_via_choi(psi, HermitianOperator(DimProfile{{"in", 2}},
                                                         basis_state(2, b)))
                       .matrix();
      direct += rho(b, b).real() * u * fed * u.adjoint();
    }
    Matrix via = apply_via_choi(cc_out, HermitianOperator(DimProfile{{"in", 2}}, rho))
                     .matrix();
    CHECK(max_abs(via - direct) < 1e-10);
  }

  CHECK_THROWS_AS(supermap_apply(id_sm, random_cptp_choi(rng, 3, 2)),
                  std::runtime_error);
}

TEST_CASE("extended min-entropy of the identity channel sits at minus one bit") {
  // the optimum 4 is hand-solved: local-unitary twirling reduces feasible X
  // to a two-parameter family whose PSD corners all cap the objective at 4
  ChoiOperator idc = identity_bipartite_channel();
  SolverOptions so = tight_opts();

  EntropyResult ba = extended_min_entropy(idc, ExtDirection::BGivenA,
                                          ConeSpec::positive(), so);
  CHECK(ba.report.status == SolveStatus::Optimal);
  CHECK(ba.program_value == doctest::Approx(4.0).epsilon(1e-7));
  CHECK(ba.value_bits == doctest::Approx(-1.0).epsilon(1e-7));
  CHECK(ba.quantity == EntropyQuantity::ExtHminBGivenA);
  MESSAGE("identity bipartite channel, positive cone: "
          << ba.value_bits
          << " bits at one copy (the many-copy rate -3 is not attained here)");

  // the identity supermap itself is an optimizer
  CHECK(pairing(identity_supermap_choi(2, 2), to_supermap_layout(idc)) ==
        doctest::Approx(4.0).epsilon(1e-12));

  // the A:B cut transposes both B factors jointly, and the optimizer
  // I (x) phi_B is symmetric under that, so the restriction does not bind
  EntropyResult ba_ppt = extended_min_entropy(idc, ExtDirection::BGivenA,
                                              ConeSpec::ppt({"B0", "B1"}), so);
  CHECK(ba_ppt.value_bits == doctest::Approx(-1.0).epsilon(1e-6));

  EntropyResult ab = extended_min_entropy(idc, ExtDirection::AGivenB,
                                          ConeSpec::positive(), so);
  CHECK(ab.value_bits == doctest::Approx(-1.0).epsilon(1e-7));
  CHECK(ab.quantity == EntropyQuantity::ExtHminAGivenB);
  EntropyResult ab_ppt = extended_min_entropy(idc, ExtDirection::AGivenB,
                                              ConeSpec::ppt({"B0", "B1"}), so);
  CHECK(ab_ppt.value_bits == doctest::Approx(-1.0).epsilon(1e-6));

  // label order inside the input and output blocks is immaterial
  HermitianOperator h(channel_layout(), idc.matrix());
  HermitianOperator swapped = permute_factors(h, {"B0", "A0", "B1", "A1"});
  ChoiOperator idc2 = choi_from_operator(swapped, 2);
  EntropyResult ba2 = extended_min_entropy(idc2, ExtDirection::BGivenA,
                                           ConeSpec::positive(), so);
  CHECK(ba2.value_bits == doctest::Approx(ba.value_bits).epsilon(1e-8));
}

TEST_CASE("extended min-entropy of a replacer is the prepared state's min-entropy") {
  Rng rng(41);
  SolverOptions so = tight_opts();
  Matrix w = Matrix::Zero(2, 2);
  w(0, 0) = 0.6;
  w(1, 1) = 0.4;
  Matrix t = Matrix::Zero(2, 2);
  t(0, 0) = 0.7;
  t(1, 1) = 0.3;

  ChoiOperator rep = replacer_channel(w, t);
  EntropyResult ba = extended_min_entropy(rep, ExtDirection::BGivenA,
                                          ConeSpec::positive(), so);
  CHECK(ba.value_bits == doctest::Approx(-std::log2(0.7)).epsilon(1e-7));
  EntropyResult ab = extended_min_entropy(rep, ExtDirection::AGivenB,
                                          ConeSpec::positive(), so);
  CHECK(ab.value_bits == doctest::Approx(-std::log2(0.6)).epsilon(1e-7));

  // the optimizer is a product supermap, so the transposition cone agrees
  EntropyResult ba_ppt = extended_min_entropy(rep, ExtDirection::BGivenA,
                                              ConeSpec::ppt({"B0", "B1"}), so);
  CHECK(ba_ppt.value_bits == doctest::Approx(ba.value_bits).epsilon(1e-6));

  // non-diagonal prepared state, and a non-qubit output factor
  Matrix tau = random_density(rng, 3);
  Eigen::SelfAdjointEigenSolver<Matrix> es(tau);
  Matrix j = kron(Matrix::Identity(4, 4), kron(w, tau));
  ChoiOperator rep3 = choi_from_operator(
      HermitianOperator(channel_layout(2, 2, 2, 3), j), 2);
  EntropyResult ba3 = extended_min_entropy(rep3, ExtDirection::BGivenA,
                                           ConeSpec::positive(), so);
  CHECK(ba3.value_bits ==
        doctest::Approx(-std::log2(es.eigenvalues()(2))).epsilon(1e-6));
}

TEST_CASE("program optimizers are valid supermap matrices for their direction") {
  Rng rng(47);
  SolverOptions so = tight_opts();
  Matrix raw = random_cptp_choi(rng, 4, 4).matrix();
  ChoiOperator ch = choi_from_operator(HermitianOperator(channel_layout(), raw), 2);

  EntropyResult ba = extended_min_entropy(ch, ExtDirection::BGivenA,
                                          ConeSpec::positive(), so);
  SupermapChoi xs(HermitianOperator(supermap_layout(),
                                    ba.report.value_of(VarRef{0})));
  CHECK(superchannel_marginal_residual(xs) < 1e-8);
  CHECK(is_superchannel(xs, 1e-7));

  EntropyResult ab = extended_min_entropy(ch, ExtDirection::AGivenB,
                                          ConeSpec::positive(), so);
  SupermapChoi ys(HermitianOperator(supermap_layout(),
                                    ab.report.value_of(VarRef{0})));
  CHECK(dual_superchannel_marginal_residual(ys) < 1e-8);
}

TEST_CASE("restricting the cone can only raise the extended min-entropy") {
  Rng rng(53);
  SolverOptions so;
  so.tol = 1e-8;
  double least = 1e9;
  for (int i = 0; i < 3; ++i) {
    Matrix raw = random_cptp_choi(rng, 4, 4).matrix();
    ChoiOperator ch = choi_from_operator(HermitianOperator(channel_layout(), raw), 2);
    EntropyResult pos = extended_min_entropy(ch, ExtDirection::BGivenA,
                                             ConeSpec::positive(), so);
    EntropyResult ppt = extended_min_entropy(ch, ExtDirection::BGivenA,
                                             ConeSpec::ppt({"B0", "B1"}), so);
    double gap = ppt.value_bits - pos.value_bits;
    CHECK(gap > -1e-7);
    if (gap < least) least = gap;
  }
  MESSAGE("smallest transposition-minus-positive gap over the draws: "
          << least << " bits (generic channels separate the cones strictly)");
}

TEST_CASE("random composition samples never beat the program optimum") {
  Rng rng(59);
  SolverOptions so = tight_opts();
  Matrix w = Matrix::Zero(2, 2);
  w(0, 0) = 0.6;
  w(1, 1) = 0.4;
  Matrix t = Matrix::Zero(2, 2);
  t(0, 0) = 0.7;
  t(1, 1) = 0.3;
  ChoiOperator rep = replacer_channel(w, t);
  EntropyResult sdp = extended_min_entropy(rep, ExtDirection::BGivenA,
                                           ConeSpec::positive(), so);
  HermitianOperator jlay = to_supermap_layout(rep);

  double best = -1e9;
  for (int i = 0; i < 2000; ++i) {
    SupermapChoi theta = pre_post_supermap_choi(random_cptp_choi(rng, 2, 2),
                                                random_cptp_choi(rng, 2, 2));
    if (i < 10) CHECK(superchannel_marginal_residual(theta) < 1e-12);
    double score = pairing(theta, jlay);
    CHECK(score <= sdp.program_value + 1e-6);
    if (score > best) best = score;
  }
  MESSAGE("best of 2000 composition samples: " << best << " vs program optimum "
                                               << sdp.program_value);

  // discarding the argument and preparing the top eigenvector is optimal
  Matrix jdep = kron(Matrix::Identity(2, 2), Matrix::Identity(2, 2) * 0.5);
  Matrix jtop = kron(Matrix::Identity(2, 2), basis_state(2, 0));
  SupermapChoi opt = pre_post_supermap_choi(single_pair_channel(jdep, 2),
                                            single_pair_channel(jtop, 2));
  CHECK(pairing(opt, jlay) == doctest::Approx(sdp.program_value).epsilon(1e-7));
}

TEST_CASE("the partial-transpose screen separates the examples") {
  SupermapChoi id_sm = identity_supermap_choi(2, 2);
  KebReport k1 = keb_check(id_sm);
  CHECK(k1.is_superchannel);
  CHECK_FALSE(k1.ppt_across_cut);
  CHECK(k1.min_pt_eigenvalue == doctest::Approx(-1.0).epsilon(1e-9));
  REQUIRE(k1.witness.size() == 16);
  // the witness attains its eigenvalue on the transposed matrix
  HermitianOperator pt = partial_transpose(id_sm.op,
                                           std::vector<std::string>{"B0", "B1"});
  double quad = (k1.witness.adjoint() * pt.matrix() * k1.witness)(0, 0).real();
  CHECK(quad == doctest::Approx(k1.min_pt_eigenvalue).epsilon(1e-10));

  KebReport k2 = keb_check(discard_prepare_supermap_choi(2, 2, 2, 2));
  CHECK(k2.is_superchannel);
  CHECK(k2.ppt_across_cut);
  CHECK(k2.witness.size() == 0);
  CHECK(k2.min_pt_eigenvalue >= -1e-12);

  KebReport k3 = keb_check(controlled_copy_supermap());
  CHECK(k3.is_superchannel);
  CHECK_FALSE(k3.ppt_across_cut);

  // the screen cannot tell a supermap from its adjoint
  Rng rng(61);
  SupermapChoi rnd(HermitianOperator(supermap_layout(), random_hermitian(rng, 16)));
  for (const SupermapChoi* j : {&id_sm, &rnd}) {
    KebReport a = keb_check(*j);
    KebReport b = keb_check(supermap_dual(*j));
    CHECK(a.ppt_across_cut == b.ppt_across_cut);
    CHECK(a.min_pt_eigenvalue == doctest::Approx(b.min_pt_eigenvalue).epsilon(1e-10));
  }
}

TEST_CASE("unital-preserving constraints carve out the derived optima") {
  SolverOptions so = tight_opts();
  // against the identity supermap the doubly constrained optimum saturates
  // trace times top eigenvalue, which forces the optimizer onto the projector
  SupermapChoi id_sm = identity_supermap_choi(2, 2);
  {
    ConicProgram prog;
    VarRef x = prog.add_hermitian_variable(supermap_layout(), "X");
    superchannel_constraints(prog, prog.var(x));
    unital_preserving_constraints(prog, prog.var(x));
    prog.add_psd(prog.var(x));
    ScalarExpr obj;
    obj.add_inner(x, id_sm.op.matrix());
    prog.maximize(obj);
    SolveReport rep = prog.solve(so);
    REQUIRE(rep.status == SolveStatus::Optimal);
    CHECK(rep.primal_value == doctest::Approx(16.0).epsilon(1e-7));
    CHECK(max_abs(rep.value_of(x) - id_sm.op.matrix()) < 1e-5);
  }
  // against discard-and-prepare the unital conditions pin the twirled
  // feasible point to I/4, dropping the optimum from 2 to 1
  {
    ConicProgram prog;
    VarRef x = prog.add_hermitian_variable(supermap_layout(), "X");
    superchannel_constraints(prog, prog.var(x));
    unital_preserving_constraints(prog, prog.var(x));
    prog.add_psd(prog.var(x));
    ScalarExpr obj;
    obj.add_inner(x, discard_prepare_supermap_choi(2, 2, 2, 2).op.matrix());
    prog.maximize(obj);
    SolveReport rep = prog.solve(so);
    REQUIRE(rep.status == SolveStatus::Optimal);
    CHECK(rep.primal_value == doctest::Approx(1.0).epsilon(1e-7));
  }
}

TEST_CASE("malformed inputs are rejected") {
  Rng rng(67);
  CHECK_THROWS_AS(SupermapChoi(HermitianOperator(
                      DimProfile{{"A0", 2}, {"B0", 2}, {"A1", 2}, {"B1", 2}},
                      Matrix::Identity(16, 16))),
                  std::runtime_error);
  CHECK_THROWS_AS(identity_supermap_choi(0, 2), std::runtime_error);
  CHECK_THROWS_AS(discard_prepare_supermap_choi(2, 2, 0, 2), std::runtime_error);

  // wrong labels on the channel
  ChoiOperator bad = random_cptp_choi(rng, 4, 4);
  CHECK_THROWS_AS(extended_min_entropy(bad, ExtDirection::BGivenA,
                                       ConeSpec::positive()),
                  std::runtime_error);
  // right labels but not trace preserving
  Matrix scaled = 0.9 * identity_bipartite_channel().matrix();
  ChoiOperator nt = choi_from_operator(HermitianOperator(channel_layout(), scaled), 2);
  CHECK_THROWS_AS(extended_min_entropy(nt, ExtDirection::BGivenA,
                                       ConeSpec::positive()),
                  std::runtime_error);

  // constraint emitters insist on the supermap layout
  ConicProgram prog;
  VarRef x = prog.add_hermitian_variable(DimProfile{{"A", 4}, {"B", 4}}, "X");
  CHECK_THROWS_AS(superchannel_constraints(prog, prog.var(x)), std::runtime_error);
}

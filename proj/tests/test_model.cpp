#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <hdp/errors.hpp>
#include <hdp/loss.hpp>
#include <hdp/model.hpp>
#include <hdp/solvers.hpp>

#include "fd.hpp"
#include "instances.hpp"

#include <Eigen/Dense>
#include <cmath>

using namespace hdp;
using testsupport::lift;
using testsupport::shifted_quadratic_1d;

namespace {

// F as a function of the stacked [a; b] vector, for the FD oracles.
testsupport::ScalarFn F_fn(const L1Problem& prob) {
  return [&prob](const Eigen::VectorXd& ab) {
    return F_value(prob, HdpPoint::from_stacked(ab));
  };
}

testsupport::VectorFn Fgrad_fn(const L1Problem& prob) {
  return [&prob](const Eigen::VectorXd& ab) {
    return F_grad(prob, HdpPoint::from_stacked(ab));
  };
}

L1Problem random_instance(std::uint64_t seed) {
  return testsupport::random_least_squares(6, 4, 0.4, seed);
}

} // namespace

TEST_CASE("lifted point caches the product and round-trips stacking") {
  Eigen::VectorXd a(3), b(3);
  a << 1.0, -2.0, 0.5;
  b << 0.5, 1.0, 0.5;
  const HdpPoint p(a, b);
  CHECK(p.dim() == 3);
  CHECK(p.s()[0] == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(p.s()[1] == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(p.s()[2] == doctest::Approx(0.0).epsilon(1e-15));

  const Eigen::VectorXd st = p.stacked();
  REQUIRE(st.size() == 6);
  CHECK((st.head(3) - a).cwiseAbs().maxCoeff() == 0.0);
  CHECK((st.tail(3) - b).cwiseAbs().maxCoeff() == 0.0);
  const HdpPoint back = HdpPoint::from_stacked(st);
  CHECK((back.a() - a).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.b() - b).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(HdpPoint(a, Eigen::VectorXd::Zero(2)), InvalidInputError);
  CHECK_THROWS_AS(HdpPoint(Eigen::VectorXd(), Eigen::VectorXd()),
                  InvalidInputError);
  CHECK_THROWS_AS(HdpPoint::from_stacked(Eigen::VectorXd::Zero(5)),
                  InvalidInputError);
}

TEST_CASE("problem construction validates inputs") {
  CHECK_THROWS_AS(L1Problem(nullptr, 1.0), InvalidInputError);
  const L1Problem prob = shifted_quadratic_1d(2.0, 1.0);
  CHECK_THROWS_AS(L1Problem(prob.loss, 0.0), InvalidInputError);
  CHECK_THROWS_AS(L1Problem(prob.loss, -1.0), InvalidInputError);
}

TEST_CASE("value identity: lifted minus base objective is the coupling term") {
  GaussianStream gs(101);
  const L1Problem prob = random_instance(5);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::VectorXd a = gs.vector(4, 1.5);
    const Eigen::VectorXd b = gs.vector(4, 1.5);
    const HdpPoint p(a, b);
    const double lhs = F_value(prob, p) - f_value(prob, p.s());
    const double rhs =
        2.0 * prob.mu * a.cwiseAbs2().cwiseMin(b.cwiseAbs2()).sum();
    const double scale = 1.0 + std::abs(F_value(prob, p));
    CHECK(std::abs(lhs - rhs) / scale < 1e-12);
  }
}

TEST_CASE("product form agrees with difference form under change of variables") {
  GaussianStream gs(102);
  const L1Problem prob = random_instance(6);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::VectorXd u = gs.vector(4, 1.5);
    const Eigen::VectorXd v = gs.vector(4, 1.5);
    const HdpPoint p = uv_to_ab(u, v);
    // a^2 - b^2 telescopes back to the componentwise product.
    CHECK((p.s() - u.cwiseProduct(v)).cwiseAbs().maxCoeff() < 1e-13);
    const double scale = 1.0 + std::abs(G_value(prob, u, v));
    CHECK(std::abs(G_value(prob, u, v) - F_value(prob, p)) / scale < 1e-12);
    // And the reverse change of variables inverts it.
    const auto [u2, v2] = ab_to_uv(p);
    CHECK((u2 - u).cwiseAbs().maxCoeff() < 1e-13);
    CHECK((v2 - v).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("lifted gradient and Hessian match finite differences") {
  GaussianStream gs(103);
  const L1Problem prob = random_instance(7);
  for (int trial = 0; trial < 25; ++trial) {
    const Eigen::VectorXd ab = gs.vector(8, 1.2);
    const Eigen::VectorXd g = F_grad(prob, HdpPoint::from_stacked(ab));
    const Eigen::VectorXd gfd = testsupport::fd_gradient(F_fn(prob), ab, 1e-6);
    CHECK((g - gfd).cwiseAbs().maxCoeff() / (1.0 + g.cwiseAbs().maxCoeff()) <
          1e-7);
    const Eigen::MatrixXd H = F_hess(prob, HdpPoint::from_stacked(ab));
    CHECK((H - H.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    const Eigen::MatrixXd Hfd = testsupport::fd_jacobian(Fgrad_fn(prob), ab, 1e-6);
    CHECK((H - Hfd).cwiseAbs().maxCoeff() / (1.0 + H.cwiseAbs().maxCoeff()) <
          1e-6);
  }
}

TEST_CASE("lifted Hessian matches the hand-computed 1-D block form") {
  // h = 0.5 (x - 1)^2, mu = 1, at (a, b) = (1, 0): s = 1, grad_h = 0,
  // hess_h = 1, so the Hessian is [[4 + 2, 0], [0, 2]].
  const L1Problem prob = shifted_quadratic_1d(1.0, 1.0);
  const HdpPoint p(Eigen::VectorXd::Ones(1), Eigen::VectorXd::Zero(1));
  const Eigen::MatrixXd H = F_hess(prob, p);
  CHECK(H(0, 0) == doctest::Approx(6.0).epsilon(1e-14));
  CHECK(H(0, 1) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(H(1, 0) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(H(1, 1) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("lifted gradient vanishes exactly at canonically lifted minimizers") {
  // h = 0.5 (x - 2)^2, mu = 1: the base minimizer is x = 1 and both signed
  // lifts of it are stationary for F.
  const L1Problem prob = shifted_quadratic_1d(2.0, 1.0);
  const HdpPoint plus(Eigen::VectorXd::Ones(1), Eigen::VectorXd::Zero(1));
  CHECK(F_grad(prob, plus).norm() == doctest::Approx(0.0).epsilon(1e-15));
  Eigen::VectorXd minus_a(1);
  minus_a << -1.0;
  const HdpPoint minus(minus_a, Eigen::VectorXd::Zero(1));
  CHECK(F_grad(prob, minus).norm() == doctest::Approx(0.0).epsilon(1e-15));
  // The origin is always a lifted stationary point.
  CHECK(F_grad(prob, testsupport::zero_point(1)).norm() == 0.0);
}

TEST_CASE("subdifferential distance covers the three coordinate regimes") {
  const L1Problem prob = shifted_quadratic_1d(2.0, 1.0);
  Eigen::VectorXd x(1);

  x << 1.0; // grad_h = -1, sign +1: dual exactly cancels
  CHECK(f_subdiff_dist(prob, x) == doctest::Approx(0.0).epsilon(1e-15));
  x << 2.0; // grad_h = 0, sign +1: distance mu
  CHECK(f_subdiff_dist(prob, x) == doctest::Approx(1.0).epsilon(1e-15));
  x << 0.0; // zero coordinate: max(|grad_h| - mu, 0) = 1
  CHECK(f_subdiff_dist(prob, x) == doctest::Approx(1.0).epsilon(1e-15));
  x << -1.0; // grad_h = -3, sign -1: |-3 - 1| = 4
  CHECK(f_subdiff_dist(prob, x) == doctest::Approx(4.0).epsilon(1e-15));

  // The zero test is exact: a tiny nonzero coordinate is treated as signed.
  x << 1e-300;
  CHECK(f_subdiff_dist(prob, x) == doctest::Approx(1.0).epsilon(1e-12));

  // Multi-coordinate distances combine in the Euclidean norm.
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(2, 2);
  Eigen::VectorXd y(2);
  y << 3.0, 3.0;
  const L1Problem prob2(make_least_squares(A, y), 1.0);
  Eigen::VectorXd x2 = Eigen::VectorXd::Zero(2);
  // Each zero coordinate contributes max(3 - 1, 0) = 2.
  CHECK(f_subdiff_dist(prob2, x2) ==
        doctest::Approx(std::sqrt(8.0)).epsilon(1e-14));

  // f_value is the plain composite objective.
  x << 0.5;
  CHECK(f_value(prob, x) == doctest::Approx(0.5 * 2.25 + 0.5).epsilon(1e-14));
}

TEST_CASE("reduction map applies per-coordinate blocks and is an involution") {
  ReductionMap map;
  map.tags = {ReductionTag::I1, ReductionTag::I2, ReductionTag::I3,
              ReductionTag::I4};
  Eigen::VectorXd a(4), b(4);
  a << 1.0, 2.0, 3.0, 4.0;
  b << 5.0, 6.0, 7.0, 8.0;
  const HdpPoint p(a, b);
  const HdpPoint q = map.apply(p);
  // I1 keeps, I2 swaps, I3 negates a, I4 swaps and negates both.
  CHECK(q.a()[0] == 1.0);
  CHECK(q.b()[0] == 5.0);
  CHECK(q.a()[1] == 6.0);
  CHECK(q.b()[1] == 2.0);
  CHECK(q.a()[2] == -3.0);
  CHECK(q.b()[2] == 7.0);
  CHECK(q.a()[3] == -8.0);
  CHECK(q.b()[3] == -4.0);

  const Eigen::VectorXd signs = map.product_signs();
  CHECK(signs[0] == 1.0);
  CHECK(signs[1] == -1.0);
  CHECK(signs[2] == 1.0);
  CHECK(signs[3] == -1.0);
  // The product point transforms by exactly those signs.
  CHECK((q.s() - signs.cwiseProduct(p.s())).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((map.apply_product(p.s()) - signs.cwiseProduct(p.s()))
            .cwiseAbs()
            .maxCoeff() == 0.0);

  // Applying the map twice restores the original point.
  const HdpPoint r = map.apply(q);
  CHECK((r.a() - a).cwiseAbs().maxCoeff() == 0.0);
  CHECK((r.b() - b).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS((void)map.apply(HdpPoint(Eigen::VectorXd::Ones(2),
                                           Eigen::VectorXd::Ones(2))),
                  InvalidInputError);
}

TEST_CASE("reduce normalizes a positive-support stationary point") {
  const L1Problem prob = shifted_quadratic_1d(2.0, 1.0);
  const HdpPoint p(Eigen::VectorXd::Ones(1), Eigen::VectorXd::Zero(1));
  const ReductionResult res = reduce(prob, p, 1e-10);
  CHECK(res.map.tags[0] == ReductionTag::I1);
  CHECK(res.reduced.a()[0] == doctest::Approx(1.0));
  CHECK(res.reduced.b()[0] == doctest::Approx(0.0));
  CHECK(res.map.product_signs()[0] == 1.0);
  // The transformed problem is unchanged on the I1 block.
  CHECK(res.transformed.loss->value(res.reduced.s()) ==
        doctest::Approx(prob.loss->value(p.s())).epsilon(1e-15));
}

TEST_CASE("reduce flips a negative-a stationary point into the first block") {
  const L1Problem prob = shifted_quadratic_1d(2.0, 1.0);
  Eigen::VectorXd a(1);
  a << -1.0;
  const HdpPoint p(a, Eigen::VectorXd::Zero(1));
  REQUIRE(F_grad(prob, p).norm() < 1e-14);
  const ReductionResult res = reduce(prob, p, 1e-10);
  CHECK(res.map.tags[0] == ReductionTag::I3);
  CHECK(res.reduced.a()[0] == doctest::Approx(1.0));
  CHECK(res.reduced.b()[0] == doctest::Approx(0.0));
  // I3 keeps the product sign: same transformed landscape.
  CHECK(res.map.product_signs()[0] == 1.0);
  CHECK(F_grad(res.transformed, res.reduced).norm() < 1e-14);
}

TEST_CASE("reduce swaps a b-supported point and flips the loss sign") {
  // h = 0.5 (x + 5)^2, mu = 1: base minimizer x = -4 lifts to (0, 2).
  const L1Problem prob = shifted_quadratic_1d(-5.0, 1.0);
  Eigen::VectorXd b(1);
  b << 2.0;
  const HdpPoint p(Eigen::VectorXd::Zero(1), b);
  REQUIRE(F_grad(prob, p).norm() < 1e-14);

  const ReductionResult res = reduce(prob, p, 1e-10);
  CHECK(res.map.tags[0] == ReductionTag::I2);
  CHECK(res.reduced.a()[0] == doctest::Approx(2.0));
  CHECK(res.reduced.b()[0] == doctest::Approx(0.0));
  CHECK(res.map.product_signs()[0] == -1.0);

  // The image is stationary for the transformed problem, whose gradient on
  // the (now positive) support sits at -mu.
  CHECK(F_grad(res.transformed, res.reduced).norm() < 1e-14);
  CHECK(res.transformed.loss->gradient(res.reduced.s())[0] ==
        doctest::Approx(-1.0).epsilon(1e-14));
}

TEST_CASE("reduce sends boundary-dual zeros to the sign-flipped block") {
  // h = 0.5 ||x - (2, -1)||^2, mu = 1: minimizer (1, 0) with the second
  // coordinate's dual exactly at +mu.
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(2, 2);
  Eigen::VectorXd y(2);
  y << 2.0, -1.0;
  const L1Problem prob(make_least_squares(A, y), 1.0);
  Eigen::VectorXd a(2), b(2);
  a << 1.0, 0.0;
  b << 0.0, 0.0;
  const HdpPoint p(a, b);
  REQUIRE(F_grad(prob, p).norm() < 1e-14);

  const ReductionResult res = reduce(prob, p, 1e-10);
  CHECK(res.map.tags[0] == ReductionTag::I1);
  CHECK(res.map.tags[1] == ReductionTag::I2);
  CHECK(res.map.product_signs()[1] == -1.0);
  // After composing the sign flip into the loss, the boundary dual sits at
  // -mu on every flipped zero coordinate.
  const Eigen::VectorXd g = res.transformed.loss->gradient(res.reduced.s());
  CHECK(g[1] == doctest::Approx(-1.0).epsilon(1e-13));
  // Interior-dual zeros stay in the identity block instead.
  Eigen::VectorXd y2(2);
  y2 << 2.0, 0.5;
  const L1Problem prob2(make_least_squares(A, y2), 1.0);
  const ReductionResult res2 = reduce(prob2, p, 1e-10);
  CHECK(res2.map.tags[1] == ReductionTag::I1);
}

TEST_CASE("reduce preserves objective values along the transformation") {
  // On a 3-D instance with mixed signs, the reduced point must be
  // nonnegative in a, vanish in b, and reproduce F exactly.
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(3, 3);
  Eigen::VectorXd y(3);
  y << 2.0, -3.0, 0.5;
  const L1Problem prob(make_least_squares(A, y), 1.0);
  // Base minimizer (1, -2, 0); pick the lift with b-support on coord 1.
  Eigen::VectorXd x(3);
  x << 1.0, -2.0, 0.0;
  const HdpPoint p = lift(x);
  REQUIRE(F_grad(prob, p).norm() < 1e-14);

  const ReductionResult res = reduce(prob, p, 1e-10);
  CHECK(res.reduced.a().minCoeff() >= 0.0);
  CHECK(res.reduced.b().cwiseAbs().maxCoeff() < 1e-12);
  CHECK(F_value(res.transformed, res.reduced) ==
        doctest::Approx(F_value(prob, p)).epsilon(1e-14));
  CHECK(F_grad(res.transformed, res.reduced).norm() < 1e-13);
  // The reduced product point is the sign-flipped original.
  CHECK((res.reduced.s() -
         res.map.product_signs().cwiseProduct(p.s()))
            .cwiseAbs()
            .maxCoeff() < 1e-12);
}

TEST_CASE("reduce refuses points that are not stationary") {
  const L1Problem prob = shifted_quadratic_1d(2.0, 1.0);
  const HdpPoint p(Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1));
  REQUIRE(F_grad(prob, p).norm() > 1e-3);
  CHECK_THROWS_AS((void)reduce(prob, p, 1e-10), NotStationaryError);
  CHECK_THROWS_AS((void)reduce(prob, p, -1.0), InvalidInputError);
}

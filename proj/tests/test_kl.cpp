#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <hdp/errors.hpp>
#include <hdp/kl.hpp>
#include <hdp/loss.hpp>
#include <hdp/model.hpp>
#include <hdp/solvers.hpp>
#include <hdp/stationarity.hpp>

#include "instances.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

using namespace hdp;
using testsupport::lift;
using testsupport::zero_point;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> vals) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(vals.size()));
  Eigen::Index i = 0;
  for (double x : vals) v[i++] = x;
  return v;
}

// Exact power-law samples slope = C * gap^alpha on a geometric gap grid.
std::vector<KlSample> power_law_samples(double alpha, double C, int count,
                                        double gap_lo, double gap_hi) {
  std::vector<KlSample> out;
  for (int i = 0; i < count; ++i) {
    const double t = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
    const double gap = gap_lo * std::pow(gap_hi / gap_lo, t);
    out.push_back({gap, C * std::pow(gap, alpha)});
  }
  return out;
}

} // namespace

TEST_CASE("exponent prediction follows the two dichotomy branches") {
  // Strict complementarity: the lifted exponent is max(alpha, 1/2).
  CHECK(predict_F_exponent(0.25, true).exponent == doctest::Approx(0.5));
  CHECK(predict_F_exponent(0.75, true).exponent == doctest::Approx(0.75));
  CHECK(predict_F_exponent(0.5, true).source ==
        PredictionSource::strict_complementarity);

  // Without it, a Holder bound with exponent gamma gives (1 + beta)/2.
  const ExponentPrediction flat = predict_F_exponent(0.5, false, 1.0);
  CHECK(flat.exponent == doctest::Approx(0.75)); // beta = 1 - 1*(1/2)
  CHECK(flat.source == PredictionSource::holder_error_bound);
  CHECK(predict_F_exponent(0.75, false, 0.5).exponent ==
        doctest::Approx(0.9375)); // beta = 1 - 0.5*0.25
  CHECK(predict_F_exponent(0.9, false, 0.25).exponent ==
        doctest::Approx(0.9875));

  CHECK_THROWS_AS((void)predict_F_exponent(0.0, true), InvalidInputError);
  CHECK_THROWS_AS((void)predict_F_exponent(1.0, true), InvalidInputError);
  CHECK_THROWS_AS((void)predict_F_exponent(0.5, false, 0.0),
                  InvalidInputError);
  CHECK_THROWS_AS((void)predict_F_exponent(0.5, false, 1.5),
                  InvalidInputError);
  CHECK(std::string(to_string(PredictionSource::strict_complementarity)) ==
        "strict-complementarity");
  CHECK(std::string(to_string(PredictionSource::holder_error_bound)) ==
        "holder-error-bound");
}

TEST_CASE("log-log fit recovers exact power laws") {
  const GapWindow window{1e-12, 1e-2};
  for (double alpha : {0.5, 0.75, 0.9}) {
    const auto samples = power_law_samples(alpha, 2.0, 60, 1e-10, 1e-3);
    const KlFit fit = fit_kl_exponent(samples, window);
    CHECK(fit.alpha_hat == doctest::Approx(alpha).epsilon(1e-10));
    CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fit.n_samples == 60);
    CHECK(fit.n_excluded == 0);
    // The intercept recovers log C.
    CHECK(fit.log_intercept == doctest::Approx(std::log(2.0)).epsilon(1e-9));
  }
}

TEST_CASE("log-log fit filters samples outside the gap window") {
  auto samples = power_law_samples(0.6, 1.0, 40, 1e-10, 1e-3);
  samples.push_back({1.0, 1.0});    // above the cap
  samples.push_back({1e-14, 1.0});  // below the floor
  samples.push_back({1e-5, 0.0});   // zero slope carries no information
  const KlFit fit = fit_kl_exponent(samples, GapWindow{1e-12, 1e-2});
  CHECK(fit.n_samples == 40);
  CHECK(fit.n_excluded == 3);
  CHECK(fit.alpha_hat == doctest::Approx(0.6).epsilon(1e-10));
  CHECK(fit.window.lo == 1e-12);
  CHECK(fit.window.hi == 1e-2);

  // Fewer than 10 usable samples is refused, as is a bad window.
  const auto few = power_law_samples(0.6, 1.0, 9, 1e-10, 1e-3);
  CHECK_THROWS_AS((void)fit_kl_exponent(few, GapWindow{1e-12, 1e-2}),
                  InvalidInputError);
  CHECK_THROWS_AS(
      (void)fit_kl_exponent(samples, GapWindow{1e-2, 1e-12}),
      InvalidInputError);

  // The default window scales its cap with the reference value.
  const GapWindow w = default_gap_window(3.0);
  CHECK(w.lo == doctest::Approx(1e-12));
  CHECK(w.hi == doctest::Approx(4e-2).epsilon(1e-12));
}

TEST_CASE("ray sampler measures the lifted landscape around a minimizer") {
  // h = 0.5 (x - 2)^2, mu = 1: quadratic growth around the lifted
  // minimizer (1, 0), so the slope-vs-gap exponent is 1/2.
  const L1Problem prob = testsupport::shifted_quadratic_1d(2.0, 1.0);
  const HdpPoint pstar = lift(vec({1.0}));

  KlSampleConfig cfg;
  cfg.radius = 0.3;
  cfg.count = 80;
  cfg.ratio = 0.93;
  cfg.seed = 4;
  cfg.n_directions = 6;
  const KlSampleSet set = sample_kl_F(prob, pstar, SampleMode::ray, cfg);
  CHECK(set.samples.size() > 100); // several directions x many radii
  for (const KlSample& s : set.samples) {
    CHECK(s.gap > 0.0);
    CHECK(s.slope >= 0.0);
  }
  const KlFit fit = fit_kl_exponent(
      set.samples, default_gap_window(F_value(prob, pstar)));
  CHECK(fit.alpha_hat == doctest::Approx(0.5).epsilon(2e-3));

  // Ball mode produces the same exponent from uniform draws.
  KlSampleConfig ball;
  ball.radius = 0.2;
  ball.count = 400;
  ball.seed = 5;
  const KlSampleSet bset = sample_kl_F(prob, pstar, SampleMode::ball, ball);
  const KlFit bfit = fit_kl_exponent(
      bset.samples, default_gap_window(F_value(prob, pstar)));
  CHECK(bfit.alpha_hat == doctest::Approx(0.5).epsilon(5e-3));

  // Identical seeds reproduce identical samples.
  const KlSampleSet again = sample_kl_F(prob, pstar, SampleMode::ray, cfg);
  REQUIRE(again.samples.size() == set.samples.size());
  for (size_t i = 0; i < set.samples.size(); ++i) {
    CHECK(again.samples[i].gap == set.samples[i].gap);
    CHECK(again.samples[i].slope == set.samples[i].slope);
  }

  KlSampleConfig bad = cfg;
  bad.radius = 0.0;
  CHECK_THROWS_AS((void)sample_kl_F(prob, pstar, SampleMode::ray, bad),
                  InvalidInputError);
}

TEST_CASE("trace sampler reads gaps and slopes off a recorded run") {
  Trace t;
  t.values = {10.0, 6.0, 5.5, 5.0};
  t.grad_norms = {4.0, 2.0, 1.0, 0.5};
  const KlSampleSet set = sample_kl_from_trace(t, 5.0);
  REQUIRE(set.samples.size() == 3); // the zero-gap tail entry is dropped
  CHECK(set.n_discarded == 1);
  CHECK(set.samples[0].gap == doctest::Approx(5.0));
  CHECK(set.samples[0].slope == doctest::Approx(4.0));
  CHECK(set.samples[2].gap == doctest::Approx(0.5));
  CHECK(set.samples[2].slope == doctest::Approx(1.0));
}

TEST_CASE("restricted sampler requires strict complementarity") {
  // Identity design, targets (2, 0.5): minimizer (1, 0) with margin 0.5.
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(2, 2);
  const L1Problem sc_prob(make_least_squares(A, vec({2.0, 0.5})), 1.0);
  const Eigen::VectorXd sstar = vec({1.0, 0.0});
  const IndexSets isets = index_sets(sc_prob, sstar, 1e-10);

  const KlSampleSet set =
      sample_kl_f_restricted(sc_prob, sstar, isets, 0.4, 120, 7);
  CHECK(set.samples.size() >= 100);
  const KlFit fit =
      fit_kl_exponent(set.samples, default_gap_window(0.0));
  // Quadratic loss on the support: exponent 1/2 exactly.
  CHECK(fit.alpha_hat == doctest::Approx(0.5).epsilon(2e-3));

  // A boundary dual voids the precondition.
  const L1Problem nosc_prob(make_least_squares(A, vec({2.0, 1.0})), 1.0);
  const IndexSets isets2 = index_sets(nosc_prob, sstar, 1e-10);
  CHECK_THROWS_AS((void)sample_kl_f_restricted(nosc_prob, sstar, isets2, 0.4,
                                               120, 7),
                  UnsupportedError);
}

TEST_CASE("rate fit recognizes synthetic linear decay") {
  // d_k = 0.9^k exactly, planted in a converged trace. The horizon keeps
  // all distances above the fitter's 1e-13 floor.
  Trace t;
  t.status = SolveStatus::converged;
  const Eigen::VectorXd ref = vec({1.0, -2.0});
  const Eigen::VectorXd dir = vec({1.0, 0.0});
  for (int k = 0; k <= 150; ++k) {
    t.iterates.push_back(ref + std::pow(0.9, k) * dir);
    t.iterate_indices.push_back(k);
  }
  const RateFit fit = fit_convergence_rate(t, ref);
  CHECK(fit.model == RateModel::linear);
  CHECK(fit.linear_ratio == doctest::Approx(0.9).epsilon(1e-10));
  CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::isnan(fit.sublinear_exponent));
  CHECK(fit.r_squared_linear > fit.r_squared_sublinear);
  CHECK(fit.k_hi == 150);
  CHECK(std::string(to_string(fit.model)) == "linear");
}

TEST_CASE("rate fit recognizes synthetic sublinear decay") {
  // d_k = k^{-1/2} exactly.
  Trace t;
  t.status = SolveStatus::converged;
  const Eigen::VectorXd ref = vec({0.0, 0.0});
  const Eigen::VectorXd dir = vec({0.0, 1.0});
  for (int k = 1; k <= 500; ++k) {
    t.iterates.push_back(ref + std::pow(static_cast<double>(k), -0.5) * dir);
    t.iterate_indices.push_back(k);
  }
  const RateFit fit = fit_convergence_rate(t, ref);
  CHECK(fit.model == RateModel::sublinear);
  CHECK(fit.sublinear_exponent == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::isnan(fit.linear_ratio));
  CHECK(std::string(to_string(fit.model)) == "sublinear");

  // Non-converged traces and malformed references are refused.
  Trace bad = t;
  bad.status = SolveStatus::max_iter;
  CHECK_THROWS_AS((void)fit_convergence_rate(bad, ref), InvalidInputError);
  CHECK_THROWS_AS((void)fit_convergence_rate(t, Eigen::VectorXd::Zero(3)),
                  InvalidInputError);
  Trace tiny;
  tiny.status = SolveStatus::converged;
  for (int k = 0; k < 4; ++k) {
    tiny.iterates.push_back(vec({1.0 / (k + 1.0)}));
    tiny.iterate_indices.push_back(k);
  }
  CHECK_THROWS_AS((void)fit_convergence_rate(tiny, Eigen::VectorXd::Zero(1)),
                  InvalidInputError);
}

TEST_CASE("singleton oracle projects onto its point and respects boxes") {
  const SingletonOracle point(vec({1.0, -2.0}));
  const Eigen::VectorXd x = vec({5.0, 5.0});
  CHECK((point.project(x) - vec({1.0, -2.0})).norm() == doctest::Approx(0.0));
  CHECK(point.dist(x) == doctest::Approx((x - vec({1.0, -2.0})).norm()));

  // The point is inside the box: unchanged.
  const Eigen::VectorXd inside = point.project_intersect_box(
      x, vec({0.0, -3.0}), vec({2.0, 0.0}));
  CHECK((inside - vec({1.0, -2.0})).norm() == doctest::Approx(0.0));
  // The point is outside the box: the intersection is empty.
  CHECK_THROWS_AS((void)point.project_intersect_box(x, vec({2.0, -3.0}),
                                                    vec({3.0, 0.0})),
                  NumericalError);
}

TEST_CASE("segment oracle matches hand projections") {
  const SegmentOracle seg(vec({0.0, 0.0}), vec({1.0, 1.0}));
  // Interior foot point.
  CHECK((seg.project(vec({1.0, 0.0})) - vec({0.5, 0.5})).norm() <
        1e-14);
  // Clamped to the endpoints beyond the parameter range.
  CHECK((seg.project(vec({-1.0, -2.0})) - vec({0.0, 0.0})).norm() < 1e-14);
  CHECK((seg.project(vec({3.0, 2.0})) - vec({1.0, 1.0})).norm() < 1e-14);
  CHECK(seg.dist(vec({1.0, 0.0})) == doctest::Approx(std::sqrt(0.5)));

  // Box constraints restrict the feasible parameter interval: forcing
  // x1 >= 0.6 moves the best point to t = 0.6.
  const Eigen::VectorXd lo = vec({0.6, -10.0});
  const Eigen::VectorXd hi = vec({10.0, 10.0});
  const Eigen::VectorXd p = seg.project_intersect_box(vec({0.0, 0.0}), lo, hi);
  CHECK((p - vec({0.6, 0.6})).norm() < 1e-12);
  // An infeasible box is reported.
  CHECK_THROWS_AS(
      (void)seg.project_intersect_box(vec({0.0, 0.0}), vec({2.0, -10.0}),
                                      vec({3.0, 10.0})),
      NumericalError);
  CHECK_THROWS_AS(SegmentOracle(vec({0.0}), vec({1.0, 1.0})),
                  InvalidInputError);
}

TEST_CASE("power region oracle matches hand projections") {
  // gamma = 1/2: the region is x2 >= x1^2, x1 >= 0.
  const PowerRegionOracle region(0.5);

  // Interior points are fixed.
  CHECK((region.project(vec({0.5, 0.4})) - vec({0.5, 0.4})).norm() == 0.0);
  // Below the vertex: the apex is closest.
  CHECK((region.project(vec({0.0, -1.0})) - vec({0.0, 0.0})).norm() < 1e-10);
  // Left of the axis with admissible height: the wall is closest.
  CHECK((region.project(vec({-1.0, 0.5})) - vec({0.0, 0.5})).norm() < 1e-10);
  // Against the parabola: foot point solves 2t^3 + t - 2 = 0 (value
  // recomputed outside this codebase). The distance is exact; the foot
  // parameter of a flat objective is only sqrt-of-eps accurate.
  const Eigen::VectorXd foot = region.project(vec({2.0, 0.0}));
  CHECK(foot[0] == doctest::Approx(0.83512234848136657).epsilon(1e-6));
  CHECK(foot[1] == doctest::Approx(0.69742933693303311).epsilon(1e-6));
  CHECK(region.dist(vec({2.0, 0.0})) ==
        doctest::Approx(1.3576993861022464).epsilon(1e-12));

  // Box intersection: capping x2 at 0.04 pins the projection of (1, 0) to
  // the corner (0.2, 0.04).
  const Eigen::VectorXd corner = region.project_intersect_box(
      vec({1.0, 0.0}), vec({0.0, -10.0}), vec({10.0, 0.04}));
  CHECK((corner - vec({0.2, 0.04})).norm() < 1e-9);
  CHECK_THROWS_AS((void)region.project_intersect_box(
                      vec({1.0, 0.0}), vec({0.0, -10.0}), vec({10.0, -1.0})),
                  NumericalError);

  CHECK_THROWS_AS(PowerRegionOracle(0.0), InvalidInputError);
  CHECK_THROWS_AS(PowerRegionOracle(0.6), InvalidInputError);
  CHECK_THROWS_AS((void)region.project(vec({1.0, 2.0, 3.0})),
                  InvalidInputError);
}

TEST_CASE("error-bound probe is deterministic and scale-stable by design") {
  // Degenerate instance with a known minimizing segment. At a vertex of
  // the segment the probe ratio must stay of order one across radii; the
  // polyhedral case carries exponent gamma = 1.
  Eigen::MatrixXd A(1, 2);
  A << 1.0, 1.0;
  const L1Problem prob(make_least_squares(A, vec({1.0})), 0.1);
  const Eigen::VectorXd sstar = vec({0.9, 0.0});
  const IndexSets isets = index_sets(prob, sstar, 1e-8);
  const SegmentOracle segment(vec({0.9, 0.0}), vec({0.0, 0.9}));

  const std::vector<double> radii = {1e-3, 1e-2, 1e-1};
  const ErrorBoundProbe probe =
      errorbound_probe(prob, segment, isets, sstar, 1.0, radii, 150, 3);
  REQUIRE(probe.rows.size() == 3);
  CHECK(std::isfinite(probe.worst_ratio));
  CHECK(probe.worst_ratio > 0.1);
  for (const ErrorBoundProbeRow& row : probe.rows) {
    CHECK(row.n_samples > 0);
    CHECK(std::isfinite(row.worst_ratio));
    CHECK(row.worst_ratio <= probe.worst_ratio + 1e-15);
  }

  const ErrorBoundProbe again =
      errorbound_probe(prob, segment, isets, sstar, 1.0, radii, 150, 3);
  CHECK(again.worst_ratio == probe.worst_ratio);
  for (size_t i = 0; i < probe.rows.size(); ++i) {
    CHECK(again.rows[i].worst_ratio == probe.rows[i].worst_ratio);
  }

  CHECK_THROWS_AS((void)errorbound_probe(prob, segment, isets, sstar, 0.0,
                                         radii, 150, 3),
                  InvalidInputError);
  CHECK_THROWS_AS((void)errorbound_probe(prob, segment, isets, sstar, 1.0, {},
                                         150, 3),
                  InvalidInputError);
}

#pragma once

#include "hdp/model.hpp"
#include "hdp/solvers.hpp"
#include "hdp/stationarity.hpp"

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace hdp {

// One sharpness sample: objective gap against the reference point and the
// slope measure (gradient norm, or a restricted/fixed-point residual).
struct KlSample {
  double gap = 0;
  double slope = 0;
};

struct KlSampleSet {
  std::vector<KlSample> samples;
  long n_discarded = 0; // nonpositive gaps dropped at collection time
};

// Gap acceptance window for fitting; the floor keeps samples above float
// cancellation noise, the cap keeps them local.
struct GapWindow {
  double lo = 1e-12;
  double hi = 1e-2;
};

// [1e-12, 1e-2 * (1 + |ref_value|)].
GapWindow default_gap_window(double ref_value);

struct KlFit {
  double alpha_hat = 0;
  double log_intercept = 0;
  double r_squared = 0;
  long n_samples = 0;   // samples used by the fit
  long n_excluded = 0;  // outside the window or with zero slope
  GapWindow window;
};

enum class PredictionSource {
  strict_complementarity, // exponent max(alpha, 1/2)
  holder_error_bound,     // exponent (1 + beta)/2 with beta = 1 - gamma (1 - alpha)
};

const char* to_string(PredictionSource s);

struct ExponentPrediction {
  double exponent = 0;
  PredictionSource source = PredictionSource::strict_complementarity;
};

// Predicted sharpness exponent of the lifted objective at a minimizer whose
// base point has exponent alpha in (0, 1). Under strict complementarity the
// answer is max(alpha, 1/2); otherwise a Holder error bound with exponent
// gamma in (0, 1] gives (1 + beta)/2, beta = 1 - gamma (1 - alpha).
ExponentPrediction predict_F_exponent(double alpha, bool strict_comp,
                                      double gamma = 1.0);

// Log-log least squares of slope against gap over the window. Requires at
// least 10 usable samples.
KlFit fit_kl_exponent(const std::vector<KlSample>& samples, GapWindow window);

enum class SampleMode { ray, ball, trajectory };

const char* to_string(SampleMode m);

struct KlSampleConfig {
  double radius = 0.97;
  int count = 200;      // radii per direction (ray) / total draws (ball)
  double ratio = 0.98;  // geometric radius decay, ray mode
  std::uint64_t seed = 0;
  int n_directions = 8; // ray mode fallback when directions is empty
  std::vector<Eigen::VectorXd> directions; // stacked [a; b] ray directions
};

// Gap/slope samples of the lifted objective around pstar. Ray mode walks
// each direction at geometric radii; ball mode draws uniformly from the
// ball of the given radius. Nonpositive gaps are discarded and counted.
KlSampleSet sample_kl_F(const L1Problem& prob, const HdpPoint& pstar,
                        SampleMode mode, const KlSampleConfig& cfg);

// Trajectory samples from a recorded solve: gap = values[k] - ref_value,
// slope = grad_norms[k].
KlSampleSet sample_kl_from_trace(const Trace& trace, double ref_value);

// Restricted sharpness samples of the linearized loss on the support:
// for x with x = sstar off-support,
//   gap   = h(x) - h(sstar) - <grad_h(sstar), x - sstar>,
//   slope = || (grad_h(x) - grad_h(sstar)) restricted to the support ||.
// Requires strict complementarity at sstar (within tol); otherwise the
// error-bound prediction route applies and this sampler refuses.
KlSampleSet sample_kl_f_restricted(const L1Problem& prob,
                                   const Eigen::VectorXd& sstar,
                                   const IndexSets& isets, double radius,
                                   int count, std::uint64_t seed,
                                   double tol = 1e-8);

enum class RateModel { linear, sublinear };

const char* to_string(RateModel m);

struct RateFit {
  RateModel model = RateModel::linear;
  double linear_ratio = 0;       // c in d_k ~ c^k (NaN when sublinear wins)
  double sublinear_exponent = 0; // p in d_k ~ k^-p (NaN when linear wins)
  double r_squared = 0;          // of the winning model
  double r_squared_linear = 0;
  double r_squared_sublinear = 0;
  long n_points = 0;
  long k_lo = 0, k_hi = 0; // iteration window of the fit
};

// Distance decay model of a converged trace against a reference point
// (same stacking as the trace's iterates). Fits both log d_k ~ k log c and
// log d_k ~ -p log k on the last recorded third of iterations with
// d_k > 1e-13 and returns the model with higher R^2.
RateFit fit_convergence_rate(const Trace& trace, const Eigen::VectorXd& ref);

// Solution-set geometry oracle: Euclidean projection onto a closed convex
// set, plus projection onto the set intersected with a coordinate box
// (defaults to alternating projections, tolerance 1e-10, at most 1e4 sweeps).
class SolutionSetOracle {
public:
  virtual ~SolutionSetOracle() = default;
  virtual Eigen::VectorXd project(const Eigen::VectorXd& x) const = 0;
  virtual double dist(const Eigen::VectorXd& x) const {
    return (x - project(x)).norm();
  }
  // lo/hi are full-dimension bounds (+-inf where unconstrained).
  virtual Eigen::VectorXd project_intersect_box(const Eigen::VectorXd& x,
                                                const Eigen::VectorXd& lo,
                                                const Eigen::VectorXd& hi) const;
};

class SingletonOracle final : public SolutionSetOracle {
public:
  explicit SingletonOracle(Eigen::VectorXd point) : point_(std::move(point)) {}
  Eigen::VectorXd project(const Eigen::VectorXd&) const override { return point_; }
  Eigen::VectorXd project_intersect_box(const Eigen::VectorXd& x,
                                        const Eigen::VectorXd& lo,
                                        const Eigen::VectorXd& hi) const override;

private:
  Eigen::VectorXd point_;
};

class SegmentOracle final : public SolutionSetOracle {
public:
  SegmentOracle(Eigen::VectorXd p, Eigen::VectorXd q);
  Eigen::VectorXd project(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd project_intersect_box(const Eigen::VectorXd& x,
                                        const Eigen::VectorXd& lo,
                                        const Eigen::VectorXd& hi) const override;

private:
  Eigen::VectorXd p_, q_;
};

// { x in R^2 : x1 >= 0, x2 >= x1^(1/gamma) }, gamma in (0, 1/2].
class PowerRegionOracle final : public SolutionSetOracle {
public:
  explicit PowerRegionOracle(double gamma);
  Eigen::VectorXd project(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd project_intersect_box(const Eigen::VectorXd& x,
                                        const Eigen::VectorXd& lo,
                                        const Eigen::VectorXd& hi) const override;

private:
  double r_; // 1/gamma
};

struct ErrorBoundProbeRow {
  double radius = 0;
  double worst_ratio = 0;
  long n_samples = 0;
  long n_skipped = 0; // vanishing denominators
};

struct ErrorBoundProbe {
  double worst_ratio = 0;
  std::vector<ErrorBoundProbeRow> rows;
};

// Empirical Holder error-bound probe at a stationary point sstar: draws
// points in sstar + K (K the critical cone) at each radius, builds boxes
// S_rho on the boundary-dual coordinates (rho from the sample itself plus a
// randomized box), and records
//   dist(x, Omega intersect S_rho) / max(dist(x, Omega), dist(x, S_rho))^gamma.
ErrorBoundProbe errorbound_probe(const L1Problem& prob,
                                 const SolutionSetOracle& omega,
                                 const IndexSets& isets,
                                 const Eigen::VectorXd& sstar, double gamma,
                                 const std::vector<double>& radii, int count,
                                 std::uint64_t seed);

} // namespace hdp

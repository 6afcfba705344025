#pragma once

#include "hdp/model.hpp"

#include <Eigen/Core>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace hdp {

enum class SolveStatus { converged, max_iter, error };

const char* to_string(SolveStatus s);

// Iteration history. Scalar sequences (values, grad_norms, stepsizes) cover
// every iteration; iterates are decimated: every record_every-th iteration
// plus the first and last 100 are kept, endpoints always included.
// For the lifted-gradient solver, iterates are stacked [a; b] vectors,
// values is F and grad_norms is ||grad F||; for the proximal solver,
// iterates are x vectors, values is f and grad_norms is the fixed-point
// residual ||x - prox_step(x)|| / step.
struct Trace {
  std::vector<double> values;
  std::vector<double> grad_norms;
  std::vector<double> stepsizes; // one entry per completed step
  std::vector<Eigen::VectorXd> iterates;
  std::vector<long> iterate_indices;
  long iterations = 0;
  long backtrack_count = 0;
  SolveStatus status = SolveStatus::error;
  std::string message;

  const Eigen::VectorXd& final_iterate() const { return iterates.back(); }
};

struct GdConfig {
  double theta0 = 1.0;
  double kappa = 0.5;       // stepsize shrink factor, in (0, 1)
  long max_iter = 100000;
  double grad_tol = 1e-9;
  long record_every = 1;
  int max_backtracks = 200; // per iteration; beyond this the solver stalls
};

// Gradient descent on F with monotone backtracking: from the current point,
// try theta; while F(new) > F(old) - (theta^2 / 2) ||grad F(old)||^2 shrink
// theta by kappa and retry. theta persists across iterations and never
// increases. Terminates when ||grad F|| <= grad_tol or max_iter is reached.
Trace gd_backtracking(const L1Problem& prob, const HdpPoint& p0,
                      const GdConfig& cfg = {});

// Proximal gradient on f with fixed step:
//   x+ = soft_threshold(x - step * grad_h(x), step * mu).
// Stops when ||x+ - x|| / step <= tol. Ten consecutive objective increases
// raise a step-too-large error status.
Trace ista(const L1Problem& prob, const Eigen::VectorXd& x0, double step,
           long max_iter, double tol);

// Same iteration with per-coordinate l1 weights (used for doubled-penalty
// subproblems): x+ = soft_threshold(x - step * grad_h(x), step * weights).
Trace ista_weighted(const SmoothLoss& loss, const Eigen::VectorXd& weights,
                    const Eigen::VectorXd& x0, double step, long max_iter,
                    double tol);

// Componentwise sgn(x_i) * max(|x_i| - tau, 0).
Eigen::VectorXd soft_threshold(const Eigen::VectorXd& x, double tau);
Eigen::VectorXd soft_threshold(const Eigen::VectorXd& x,
                               const Eigen::VectorXd& tau);

// 1 / lambda_max(grad2_h(0)), the exact safe step for quadratic-type losses
// and the curvature bound at the origin otherwise. Falls back to 1 when the
// Hessian at 0 vanishes.
double suggest_ista_step(const L1Problem& prob);

// Deterministic stream of standard normals (Box-Muller over mt19937_64
// uniforms); identical output across platforms for a given seed.
class GaussianStream {
public:
  explicit GaussianStream(std::uint64_t seed) : eng_(seed) {}
  double next();    // N(0, 1)
  double uniform(); // (0, 1]
  Eigen::VectorXd vector(int n, double scale = 1.0);

private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0;
};

// (a, b) with i.i.d. N(0, scale^2) entries, a drawn before b.
HdpPoint random_init(int n, std::uint64_t seed, double scale = 1.0);

} // namespace hdp

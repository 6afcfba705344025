#pragma once

#include <Eigen/Core>
#include <memory>
#include <string>

namespace hdp {

// Twice continuously differentiable loss h : R^n -> R.
// Implementations are immutable and safe to share across threads.
class SmoothLoss {
public:
  virtual ~SmoothLoss() = default;

  virtual int dim() const = 0;
  virtual double value(const Eigen::VectorXd& x) const = 0;
  virtual Eigen::VectorXd gradient(const Eigen::VectorXd& x) const = 0;
  // Always symmetric.
  virtual Eigen::MatrixXd hessian(const Eigen::VectorXd& x) const = 0;
  virtual bool is_convex() const = 0;
  virtual std::string label() const = 0;

protected:
  void require_dim(const Eigen::VectorXd& x) const;
};

using LossPtr = std::shared_ptr<const SmoothLoss>;

// h(x) = 0.5 * ||A x - y||^2.
LossPtr make_least_squares(Eigen::MatrixXd A, Eigen::VectorXd y);

// h(x) = (1/m) * sum_i log(1 + exp(<y_i, x>)), rows of Y are the y_i.
// Evaluated in overflow-safe form.
LossPtr make_logistic(Eigen::MatrixXd Y);

// 1-D power loss, alpha in [1/2, 1):
//   h(x) = (1 - alpha) |x|^{1/(1-alpha)} - x.
// alpha = 1/2 is exactly 0.5 x^2 - x. C^2 on all of R.
LossPtr make_power_1d(double alpha);

// 2-D hinge power loss, alpha in (1/2, 1), gamma in (0, 1/2]:
//   h(x) = (1 - alpha) * max(|x1|^{1/gamma} - x2, 0)^{1/(1-alpha)} - x1 - x2.
// C^2 on all of R^2.
LossPtr make_hinge_power_2d(double alpha, double gamma);

// h(x) = 0.5 x^T Q x + c^T x, Q symmetric.
LossPtr make_quadratic(Eigen::MatrixXd Q, Eigen::VectorXd c);

// hhat(t) = h(signs .* t) for signs in {-1,+1}^n. Used by the reduction map.
LossPtr make_sign_flipped(LossPtr inner, Eigen::VectorXd signs);

struct DerivReport {
  double grad_rel_err = 0;       // max over coords, central differences of value
  double hess_rel_err = 0;       // max over entries, central differences of gradient
  double step = 0;               // finite-difference step used
  bool hessian_near_singular = false; // smallest singular value ~ 0 at this point
};

// Central-difference consistency check at one point.
// step <= 0 picks 1e-5 * (1 + ||x||_inf). Relative errors are measured
// against 1 + max-magnitude of the analytic quantity.
DerivReport check_derivatives(const SmoothLoss& loss, const Eigen::VectorXd& x,
                              double step = 0);

} // namespace hdp

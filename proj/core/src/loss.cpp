#include "hdp/loss.hpp"

#include "hdp/errors.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>
#include <utility>

namespace hdp {

void SmoothLoss::require_dim(const Eigen::VectorXd& x) const {
  if (x.size() != dim()) {
    std::ostringstream os;
    os << label() << ": expected dimension " << dim() << ", got " << x.size();
    throw InvalidInputError(os.str());
  }
}

namespace {

class LeastSquaresLoss final : public SmoothLoss {
public:
  LeastSquaresLoss(Eigen::MatrixXd A, Eigen::VectorXd y)
      : A_(std::move(A)), y_(std::move(y)), AtA_(A_.transpose() * A_) {}

  int dim() const override { return static_cast<int>(A_.cols()); }

  double value(const Eigen::VectorXd& x) const override {
    require_dim(x);
    return 0.5 * (A_ * x - y_).squaredNorm();
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const override {
    require_dim(x);
    return A_.transpose() * (A_ * x - y_);
  }

  Eigen::MatrixXd hessian(const Eigen::VectorXd& x) const override {
    require_dim(x);
    return AtA_;
  }

  bool is_convex() const override { return true; }
  std::string label() const override { return "least_squares"; }

private:
  Eigen::MatrixXd A_;
  Eigen::VectorXd y_;
  Eigen::MatrixXd AtA_;
};

double sigmoid(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

// log(1 + exp(t)) without overflow.
double log1pexp(double t) {
  if (t > 0) return t + std::log1p(std::exp(-t));
  return std::log1p(std::exp(t));
}

class LogisticLoss final : public SmoothLoss {
public:
  explicit LogisticLoss(Eigen::MatrixXd Y) : Y_(std::move(Y)) {}

  int dim() const override { return static_cast<int>(Y_.cols()); }

  double value(const Eigen::VectorXd& x) const override {
    require_dim(x);
    const Eigen::VectorXd t = Y_ * x;
    double acc = 0;
    for (Eigen::Index i = 0; i < t.size(); ++i) acc += log1pexp(t[i]);
    return acc / static_cast<double>(Y_.rows());
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const override {
    require_dim(x);
    const Eigen::VectorXd t = Y_ * x;
    Eigen::VectorXd sig(t.size());
    for (Eigen::Index i = 0; i < t.size(); ++i) sig[i] = sigmoid(t[i]);
    return Y_.transpose() * sig / static_cast<double>(Y_.rows());
  }

  Eigen::MatrixXd hessian(const Eigen::VectorXd& x) const override {
    require_dim(x);
    const Eigen::VectorXd t = Y_ * x;
    Eigen::VectorXd w(t.size());
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      const double s = sigmoid(t[i]);
      w[i] = s * (1.0 - s);
    }
    return Y_.transpose() * w.asDiagonal() * Y_ / static_cast<double>(Y_.rows());
  }

  bool is_convex() const override { return true; }
  std::string label() const override { return "logistic"; }

private:
  Eigen::MatrixXd Y_;
};

class Power1dLoss final : public SmoothLoss {
public:
  explicit Power1dLoss(double alpha) : alpha_(alpha) {
    p_ = 1.0 / (1.0 - alpha_);      // > 2
    q_ = alpha_ / (1.0 - alpha_);   // = p - 1 >= 1
  }

  int dim() const override { return 1; }

  double value(const Eigen::VectorXd& x) const override {
    require_dim(x);
    const double t = x[0];
    return (1.0 - alpha_) * std::pow(std::abs(t), p_) - t;
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const override {
    require_dim(x);
    const double t = x[0];
    Eigen::VectorXd g(1);
    g[0] = sgn(t) * std::pow(std::abs(t), q_) - 1.0;
    return g;
  }

  Eigen::MatrixXd hessian(const Eigen::VectorXd& x) const override {
    require_dim(x);
    const double t = x[0];
    Eigen::MatrixXd H(1, 1);
    // q - 1 = 0 at alpha = 1/2, where |t|^0 = 1 for every t.
    H(0, 0) = (q_ == 1.0) ? q_ : q_ * std::pow(std::abs(t), q_ - 1.0);
    return H;
  }

  bool is_convex() const override { return true; }

  std::string label() const override {
    std::ostringstream os;
    os << "power_1d(alpha=" << alpha_ << ")";
    return os.str();
  }

private:
  static double sgn(double t) { return t > 0 ? 1.0 : (t < 0 ? -1.0 : 0.0); }

  double alpha_, p_, q_;
};

class HingePower2dLoss final : public SmoothLoss {
public:
  HingePower2dLoss(double alpha, double gamma) : alpha_(alpha), gamma_(gamma) {
    p_ = 1.0 / (1.0 - alpha_);    // > 2
    q_ = alpha_ / (1.0 - alpha_); // > 1
    r_ = 1.0 / gamma_;            // >= 2
  }

  int dim() const override { return 2; }

  double value(const Eigen::VectorXd& x) const override {
    require_dim(x);
    const double w = hinge(x);
    const double head = w > 0 ? (1.0 - alpha_) * std::pow(w, p_) : 0.0;
    return head - x[0] - x[1];
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const override {
    require_dim(x);
    Eigen::VectorXd g(2);
    const double w = hinge(x);
    if (w > 0) {
      const double wq = std::pow(w, q_);
      g[0] = wq * phi1(x[0]) - 1.0;
      g[1] = -wq - 1.0;
    } else {
      g[0] = -1.0;
      g[1] = -1.0;
    }
    return g;
  }

  Eigen::MatrixXd hessian(const Eigen::VectorXd& x) const override {
    require_dim(x);
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(2, 2);
    const double w = hinge(x);
    if (w > 0) {
      const double wq1 = std::pow(w, q_ - 1.0);
      const double wq = wq1 * w;
      const double d1 = phi1(x[0]);
      H(0, 0) = q_ * wq1 * d1 * d1 + wq * phi11(x[0]);
      H(0, 1) = H(1, 0) = -q_ * wq1 * d1;
      H(1, 1) = q_ * wq1;
    }
    return H;
  }

  bool is_convex() const override { return true; }

  std::string label() const override {
    std::ostringstream os;
    os << "hinge_power_2d(alpha=" << alpha_ << ",gamma=" << gamma_ << ")";
    return os.str();
  }

private:
  double hinge(const Eigen::VectorXd& x) const {
    return std::pow(std::abs(x[0]), r_) - x[1];
  }
  // d/dx1 |x1|^r and d^2/dx1^2, r >= 2 keeps both continuous.
  double phi1(double x1) const {
    return r_ * sgn(x1) * std::pow(std::abs(x1), r_ - 1.0);
  }
  double phi11(double x1) const {
    if (r_ == 2.0) return r_ * (r_ - 1.0);
    return r_ * (r_ - 1.0) * std::pow(std::abs(x1), r_ - 2.0);
  }
  static double sgn(double t) { return t > 0 ? 1.0 : (t < 0 ? -1.0 : 0.0); }

  double alpha_, gamma_, p_, q_, r_;
};

class QuadraticLoss final : public SmoothLoss {
public:
  QuadraticLoss(Eigen::MatrixXd Q, Eigen::VectorXd c)
      : Q_(std::move(Q)), c_(std::move(c)) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Q_);
    convex_ = es.eigenvalues().minCoeff() >= -1e-12 * (1.0 + Q_.cwiseAbs().maxCoeff());
  }

  int dim() const override { return static_cast<int>(Q_.cols()); }

  double value(const Eigen::VectorXd& x) const override {
    require_dim(x);
    return 0.5 * x.dot(Q_ * x) + c_.dot(x);
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const override {
    require_dim(x);
    return Q_ * x + c_;
  }

  Eigen::MatrixXd hessian(const Eigen::VectorXd& x) const override {
    require_dim(x);
    return Q_;
  }

  bool is_convex() const override { return convex_; }
  std::string label() const override { return "quadratic"; }

private:
  Eigen::MatrixXd Q_;
  Eigen::VectorXd c_;
  bool convex_;
};

class SignFlippedLoss final : public SmoothLoss {
public:
  SignFlippedLoss(LossPtr inner, Eigen::VectorXd signs)
      : inner_(std::move(inner)), signs_(std::move(signs)) {}

  int dim() const override { return inner_->dim(); }

  double value(const Eigen::VectorXd& x) const override {
    require_dim(x);
    return inner_->value(signs_.cwiseProduct(x));
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const override {
    require_dim(x);
    return signs_.cwiseProduct(inner_->gradient(signs_.cwiseProduct(x)));
  }

  Eigen::MatrixXd hessian(const Eigen::VectorXd& x) const override {
    require_dim(x);
    const Eigen::MatrixXd H = inner_->hessian(signs_.cwiseProduct(x));
    return signs_.asDiagonal() * H * signs_.asDiagonal();
  }

  bool is_convex() const override { return inner_->is_convex(); }

  std::string label() const override {
    return "sign_flipped(" + inner_->label() + ")";
  }

private:
  LossPtr inner_;
  Eigen::VectorXd signs_;
};

} // namespace

LossPtr make_least_squares(Eigen::MatrixXd A, Eigen::VectorXd y) {
  if (A.rows() == 0 || A.cols() == 0)
    throw InvalidInputError("least_squares: A must be nonempty");
  if (A.rows() != y.size())
    throw InvalidInputError("least_squares: A rows must match y size");
  return std::make_shared<LeastSquaresLoss>(std::move(A), std::move(y));
}

LossPtr make_logistic(Eigen::MatrixXd Y) {
  if (Y.rows() == 0 || Y.cols() == 0)
    throw InvalidInputError("logistic: Y must be nonempty");
  return std::make_shared<LogisticLoss>(std::move(Y));
}

LossPtr make_power_1d(double alpha) {
  if (!(alpha >= 0.5 && alpha < 1.0))
    throw InvalidInputError("power_1d: alpha must lie in [1/2, 1)");
  return std::make_shared<Power1dLoss>(alpha);
}

LossPtr make_hinge_power_2d(double alpha, double gamma) {
  if (!(alpha > 0.5 && alpha < 1.0))
    throw InvalidInputError("hinge_power_2d: alpha must lie in (1/2, 1)");
  if (!(gamma > 0.0 && gamma <= 0.5))
    throw InvalidInputError("hinge_power_2d: gamma must lie in (0, 1/2]");
  return std::make_shared<HingePower2dLoss>(alpha, gamma);
}

LossPtr make_quadratic(Eigen::MatrixXd Q, Eigen::VectorXd c) {
  if (Q.rows() == 0 || Q.rows() != Q.cols())
    throw InvalidInputError("quadratic: Q must be square and nonempty");
  if (Q.rows() != c.size())
    throw InvalidInputError("quadratic: Q and c dimensions must match");
  const double scale = 1.0 + Q.cwiseAbs().maxCoeff();
  if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw InvalidInputError("quadratic: Q must be symmetric");
  return std::make_shared<QuadraticLoss>(std::move(Q), std::move(c));
}

LossPtr make_sign_flipped(LossPtr inner, Eigen::VectorXd signs) {
  if (!inner) throw InvalidInputError("sign_flipped: null inner loss");
  if (signs.size() != inner->dim())
    throw InvalidInputError("sign_flipped: signs dimension mismatch");
  for (Eigen::Index i = 0; i < signs.size(); ++i)
    if (signs[i] != 1.0 && signs[i] != -1.0)
      throw InvalidInputError("sign_flipped: signs must be +1 or -1");
  return std::make_shared<SignFlippedLoss>(std::move(inner), std::move(signs));
}

namespace {

void require_finite(double v, const Eigen::VectorXd& x, const char* what) {
  if (!std::isfinite(v)) {
    std::ostringstream os;
    os << "check_derivatives: non-finite " << what << " at x = ["
       << x.transpose() << "]";
    throw NumericalError(os.str());
  }
}

} // namespace

DerivReport check_derivatives(const SmoothLoss& loss, const Eigen::VectorXd& x,
                              double step) {
  const int n = loss.dim();
  if (x.size() != n) throw InvalidInputError("check_derivatives: dimension mismatch");
  if (step <= 0) step = 1e-5 * (1.0 + x.cwiseAbs().maxCoeff());

  DerivReport rep;
  rep.step = step;

  const Eigen::VectorXd g = loss.gradient(x);
  const Eigen::MatrixXd H = loss.hessian(x);
  require_finite(loss.value(x), x, "value");
  for (int i = 0; i < n; ++i) require_finite(g[i], x, "gradient");
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) require_finite(H(i, j), x, "hessian");

  const double gscale = 1.0 + g.cwiseAbs().maxCoeff();
  const double hscale = 1.0 + H.cwiseAbs().maxCoeff();

  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp[i] += step;
    xm[i] -= step;
    const double vp = loss.value(xp), vm = loss.value(xm);
    require_finite(vp, xp, "value");
    require_finite(vm, xm, "value");
    const double fd = (vp - vm) / (2.0 * step);
    rep.grad_rel_err = std::max(rep.grad_rel_err, std::abs(fd - g[i]) / gscale);

    const Eigen::VectorXd gp = loss.gradient(xp), gm = loss.gradient(xm);
    for (int j = 0; j < n; ++j) {
      require_finite(gp[j], xp, "gradient");
      require_finite(gm[j], xm, "gradient");
      const double fdh = (gp[j] - gm[j]) / (2.0 * step);
      rep.hess_rel_err = std::max(rep.hess_rel_err, std::abs(fdh - H(i, j)) / hscale);
    }
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (H + H.transpose()));
  const double lo = es.eigenvalues().cwiseAbs().minCoeff();
  const double hi = es.eigenvalues().cwiseAbs().maxCoeff();
  rep.hessian_near_singular = lo <= 1e-8 * (1.0 + hi);
  return rep;
}

} // namespace hdp

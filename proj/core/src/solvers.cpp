#include "hdp/solvers.hpp"

#include "hdp/errors.hpp"
#include "hdp/stationarity.hpp"

#include <cmath>
#include <deque>
#include <map>

namespace hdp {

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::max_iter: return "max_iter";
    case SolveStatus::error: return "error";
  }
  return "unknown";
}

namespace {

// Accumulates the decimated iterate record: every record_every-th index,
// the first 100 and the last 100 iterations, endpoints always present.
class IterateRecorder {
public:
  explicit IterateRecorder(long record_every)
      : every_(record_every > 0 ? record_every : 1) {}

  void push(long k, const Eigen::VectorXd& x) {
    last_k_ = k;
    if (k < 100 || k % every_ == 0) main_[k] = x;
    tail_.emplace_back(k, x);
    if (tail_.size() > 100) tail_.pop_front();
  }

  void finalize(Trace& tr) {
    for (auto& [k, x] : tail_) main_.try_emplace(k, std::move(x));
    tr.iterates.reserve(main_.size());
    tr.iterate_indices.reserve(main_.size());
    for (auto& [k, x] : main_) {
      tr.iterate_indices.push_back(k);
      tr.iterates.push_back(std::move(x));
    }
  }

  long last_index() const { return last_k_; }

private:
  long every_;
  long last_k_ = -1;
  std::map<long, Eigen::VectorXd> main_;
  std::deque<std::pair<long, Eigen::VectorXd>> tail_;
};

double F_stacked(const L1Problem& prob, const Eigen::VectorXd& ab) {
  return F_value(prob, HdpPoint::from_stacked(ab));
}

Eigen::VectorXd Fgrad_stacked(const L1Problem& prob, const Eigen::VectorXd& ab) {
  return F_grad(prob, HdpPoint::from_stacked(ab));
}

} // namespace

Trace gd_backtracking(const L1Problem& prob, const HdpPoint& p0,
                      const GdConfig& cfg) {
  if (p0.dim() != prob.dim())
    throw InvalidInputError("gd_backtracking: dimension mismatch");
  if (!(cfg.theta0 > 0)) throw InvalidInputError("gd_backtracking: theta0 must be positive");
  if (!(cfg.kappa > 0 && cfg.kappa < 1))
    throw InvalidInputError("gd_backtracking: kappa must lie in (0, 1)");
  if (cfg.max_iter < 0) throw InvalidInputError("gd_backtracking: negative max_iter");

  Trace tr;
  IterateRecorder rec(cfg.record_every);

  Eigen::VectorXd cur = p0.stacked();
  double Fcur = F_stacked(prob, cur);
  if (!std::isfinite(Fcur))
    throw InvalidInputError("gd_backtracking: F not finite at the initial point");
  Eigen::VectorXd g = Fgrad_stacked(prob, cur);
  double gn = g.norm();
  if (!std::isfinite(gn)) {
    tr.status = SolveStatus::error;
    tr.message = "gradient not finite at the initial point";
    rec.push(0, cur);
    tr.values.push_back(Fcur);
    tr.grad_norms.push_back(gn);
    rec.finalize(tr);
    return tr;
  }

  tr.values.push_back(Fcur);
  tr.grad_norms.push_back(gn);
  rec.push(0, cur);

  double theta = cfg.theta0;
  long k = 0;
  tr.status = SolveStatus::max_iter;

  if (gn <= cfg.grad_tol) tr.status = SolveStatus::converged;

  while (tr.status == SolveStatus::max_iter && k < cfg.max_iter) {
    // Monotone step: shrink theta until the decrease test passes.
    const double need = 0.5 * gn * gn;
    Eigen::VectorXd trial;
    double Ftrial = 0;
    int bt = 0;
    for (;;) {
      trial = cur - theta * g;
      Ftrial = F_stacked(prob, trial);
      if (std::isfinite(Ftrial) && Ftrial <= Fcur - theta * theta * need) break;
      theta *= cfg.kappa;
      ++bt;
      ++tr.backtrack_count;
      if (bt > cfg.max_backtracks) {
        tr.status = SolveStatus::error;
        tr.message = "backtracking stalled: no acceptable step within " +
                     std::to_string(cfg.max_backtracks) + " shrinks";
        break;
      }
    }
    if (tr.status == SolveStatus::error) break;

    cur = std::move(trial);
    Fcur = Ftrial;
    ++k;
    g = Fgrad_stacked(prob, cur);
    gn = g.norm();

    tr.values.push_back(Fcur);
    tr.grad_norms.push_back(gn);
    tr.stepsizes.push_back(theta);
    rec.push(k, cur);

    if (!std::isfinite(gn)) {
      tr.status = SolveStatus::error;
      tr.message = "gradient not finite at iteration " + std::to_string(k);
      break;
    }
    if (gn <= cfg.grad_tol) tr.status = SolveStatus::converged;
  }

  tr.iterations = k;
  rec.finalize(tr);
  return tr;
}

namespace {

Trace prox_gradient(const SmoothLoss& loss, const Eigen::VectorXd& weights,
                    const Eigen::VectorXd& x0, double step, long max_iter,
                    double tol) {
  if (x0.size() != loss.dim())
    throw InvalidInputError("ista: dimension mismatch");
  if (!(step > 0) || !std::isfinite(step))
    throw InvalidInputError("ista: step must be positive and finite");
  if (max_iter < 0) throw InvalidInputError("ista: negative max_iter");

  auto objective = [&](const Eigen::VectorXd& x) {
    return loss.value(x) + weights.cwiseProduct(x.cwiseAbs()).sum();
  };

  Trace tr;
  IterateRecorder rec(1);

  Eigen::VectorXd x = x0;
  double fx = objective(x);
  if (!std::isfinite(fx))
    throw InvalidInputError("ista: objective not finite at the initial point");

  tr.status = SolveStatus::max_iter;
  int increases = 0;
  long k = 0;
  for (;;) {
    const Eigen::VectorXd xn =
        soft_threshold(x - step * loss.gradient(x), step * weights);
    const double resid = (xn - x).norm() / step;

    tr.values.push_back(fx);
    tr.grad_norms.push_back(resid);
    rec.push(k, x);

    if (!std::isfinite(resid)) {
      tr.status = SolveStatus::error;
      tr.message = "non-finite iterate at iteration " + std::to_string(k);
      break;
    }
    if (resid <= tol) {
      tr.status = SolveStatus::converged;
      break;
    }
    if (k >= max_iter) break;

    const double fn = objective(xn);
    increases = fn > fx ? increases + 1 : 0;
    x = xn;
    fx = fn;
    ++k;
    tr.stepsizes.push_back(step);

    if (increases >= 10) {
      tr.status = SolveStatus::error;
      tr.message = "objective increased for 10 consecutive iterations; "
                   "step too large";
      tr.values.push_back(fx);
      tr.grad_norms.push_back((soft_threshold(x - step * loss.gradient(x),
                                              step * weights) -
                               x)
                                  .norm() /
                              step);
      rec.push(k, x);
      break;
    }
  }

  tr.iterations = k;
  rec.finalize(tr);
  return tr;
}

} // namespace

Trace ista(const L1Problem& prob, const Eigen::VectorXd& x0, double step,
           long max_iter, double tol) {
  const Eigen::VectorXd w = Eigen::VectorXd::Constant(prob.dim(), prob.mu);
  return prox_gradient(*prob.loss, w, x0, step, max_iter, tol);
}

Trace ista_weighted(const SmoothLoss& loss, const Eigen::VectorXd& weights,
                    const Eigen::VectorXd& x0, double step, long max_iter,
                    double tol) {
  if (weights.size() != loss.dim())
    throw InvalidInputError("ista_weighted: weights dimension mismatch");
  if (weights.minCoeff() < 0)
    throw InvalidInputError("ista_weighted: weights must be nonnegative");
  return prox_gradient(loss, weights, x0, step, max_iter, tol);
}

Eigen::VectorXd soft_threshold(const Eigen::VectorXd& x, double tau) {
  return soft_threshold(x, Eigen::VectorXd::Constant(x.size(), tau));
}

Eigen::VectorXd soft_threshold(const Eigen::VectorXd& x,
                               const Eigen::VectorXd& tau) {
  if (x.size() != tau.size())
    throw InvalidInputError("soft_threshold: dimension mismatch");
  Eigen::VectorXd out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double m = std::abs(x[i]) - tau[i];
    out[i] = m > 0 ? (x[i] > 0 ? m : -m) : 0.0;
  }
  return out;
}

double suggest_ista_step(const L1Problem& prob) {
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(prob.dim());
  const Eigen::MatrixXd H = prob.loss->hessian(zero);
  const double lmax = -lambda_min(-H);
  if (!(lmax > 0) || !std::isfinite(lmax)) return 1.0;
  return 1.0 / lmax;
}

double GaussianStream::uniform() {
  // 53 random bits into (0, 1].
  return static_cast<double>((eng_() >> 11) + 1) * 0x1.0p-53;
}

double GaussianStream::next() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double t = 2.0 * M_PI * u2;
  spare_ = r * std::sin(t);
  has_spare_ = true;
  return r * std::cos(t);
}

Eigen::VectorXd GaussianStream::vector(int n, double scale) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = scale * next();
  return v;
}

HdpPoint random_init(int n, std::uint64_t seed, double scale) {
  if (n <= 0) throw InvalidInputError("random_init: dimension must be positive");
  if (!(scale > 0)) throw InvalidInputError("random_init: scale must be positive");
  GaussianStream gs(seed);
  Eigen::VectorXd a = gs.vector(n, scale);
  Eigen::VectorXd b = gs.vector(n, scale);
  return HdpPoint(std::move(a), std::move(b));
}

} // namespace hdp

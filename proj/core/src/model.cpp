#include "hdp/model.hpp"

#include "hdp/errors.hpp"

#include <cmath>
#include <sstream>

namespace hdp {

L1Problem::L1Problem(LossPtr loss_in, double mu_in)
    : loss(std::move(loss_in)), mu(mu_in) {
  if (!loss) throw InvalidInputError("L1Problem: null loss");
  if (!(mu > 0) || !std::isfinite(mu))
    throw InvalidInputError("L1Problem: mu must be positive and finite");
}

HdpPoint::HdpPoint(Eigen::VectorXd a, Eigen::VectorXd b)
    : a_(std::move(a)), b_(std::move(b)) {
  if (a_.size() != b_.size())
    throw InvalidInputError("HdpPoint: a and b must have equal dimension");
  if (a_.size() == 0) throw InvalidInputError("HdpPoint: empty point");
  s_ = a_.array().square().matrix() - b_.array().square().matrix();
}

Eigen::VectorXd HdpPoint::stacked() const {
  Eigen::VectorXd ab(2 * a_.size());
  ab << a_, b_;
  return ab;
}

HdpPoint HdpPoint::from_stacked(const Eigen::VectorXd& ab) {
  if (ab.size() % 2 != 0 || ab.size() == 0)
    throw InvalidInputError("HdpPoint::from_stacked: size must be even and positive");
  const Eigen::Index n = ab.size() / 2;
  return HdpPoint(ab.head(n), ab.tail(n));
}

double f_value(const L1Problem& prob, const Eigen::VectorXd& x) {
  return prob.loss->value(x) + prob.mu * x.lpNorm<1>();
}

double f_subdiff_dist(const L1Problem& prob, const Eigen::VectorXd& x) {
  const Eigen::VectorXd g = prob.loss->gradient(x);
  double acc = 0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    double d;
    if (x[i] != 0.0) {
      d = std::abs(g[i] + prob.mu * (x[i] > 0 ? 1.0 : -1.0));
    } else {
      d = std::max(std::abs(g[i]) - prob.mu, 0.0);
    }
    acc += d * d;
  }
  return std::sqrt(acc);
}

double F_value(const L1Problem& prob, const HdpPoint& p) {
  if (p.dim() != prob.dim()) throw InvalidInputError("F_value: dimension mismatch");
  return prob.loss->value(p.s()) +
         prob.mu * (p.a().squaredNorm() + p.b().squaredNorm());
}

Eigen::VectorXd F_grad(const L1Problem& prob, const HdpPoint& p) {
  if (p.dim() != prob.dim()) throw InvalidInputError("F_grad: dimension mismatch");
  const Eigen::VectorXd g = prob.loss->gradient(p.s());
  const int n = p.dim();
  Eigen::VectorXd out(2 * n);
  out.head(n) = 2.0 * p.a().cwiseProduct(g) + 2.0 * prob.mu * p.a();
  out.tail(n) = -2.0 * p.b().cwiseProduct(g) + 2.0 * prob.mu * p.b();
  return out;
}

Eigen::MatrixXd F_hess(const L1Problem& prob, const HdpPoint& p) {
  if (p.dim() != prob.dim()) throw InvalidInputError("F_hess: dimension mismatch");
  const int n = p.dim();
  const Eigen::VectorXd g = prob.loss->gradient(p.s());
  const Eigen::MatrixXd H = prob.loss->hessian(p.s());

  Eigen::MatrixXd out(2 * n, 2 * n);
  const Eigen::MatrixXd Haa = p.a().asDiagonal() * H * p.a().asDiagonal();
  const Eigen::MatrixXd Hab = p.a().asDiagonal() * H * p.b().asDiagonal();
  const Eigen::MatrixXd Hbb = p.b().asDiagonal() * H * p.b().asDiagonal();
  out.topLeftCorner(n, n) = 4.0 * Haa;
  out.topRightCorner(n, n) = -4.0 * Hab;
  out.bottomLeftCorner(n, n) = -4.0 * Hab.transpose();
  out.bottomRightCorner(n, n) = 4.0 * Hbb;
  for (int i = 0; i < n; ++i) {
    out(i, i) += 2.0 * (g[i] + prob.mu);
    out(n + i, n + i) += 2.0 * (prob.mu - g[i]);
  }
  return out;
}

double G_value(const L1Problem& prob, const Eigen::VectorXd& u,
               const Eigen::VectorXd& v) {
  if (u.size() != v.size() || u.size() != prob.dim())
    throw InvalidInputError("G_value: dimension mismatch");
  return prob.loss->value(u.cwiseProduct(v)) +
         0.5 * prob.mu * (u.squaredNorm() + v.squaredNorm());
}

HdpPoint uv_to_ab(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  if (u.size() != v.size())
    throw InvalidInputError("uv_to_ab: dimension mismatch");
  return HdpPoint(0.5 * (u + v), 0.5 * (u - v));
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> ab_to_uv(const HdpPoint& p) {
  return {p.a() + p.b(), p.a() - p.b()};
}

HdpPoint ReductionMap::apply(const HdpPoint& p) const {
  if (static_cast<int>(tags.size()) != p.dim())
    throw InvalidInputError("ReductionMap: dimension mismatch");
  Eigen::VectorXd c(p.dim()), d(p.dim());
  for (int i = 0; i < p.dim(); ++i) {
    const double ai = p.a()[i], bi = p.b()[i];
    switch (tags[i]) {
      case ReductionTag::I1: c[i] = ai;  d[i] = bi;  break;
      case ReductionTag::I2: c[i] = bi;  d[i] = ai;  break;
      case ReductionTag::I3: c[i] = -ai; d[i] = bi;  break;
      case ReductionTag::I4: c[i] = -bi; d[i] = -ai; break;
    }
  }
  return HdpPoint(std::move(c), std::move(d));
}

Eigen::VectorXd ReductionMap::apply_product(const Eigen::VectorXd& s) const {
  if (static_cast<size_t>(s.size()) != tags.size())
    throw InvalidInputError("ReductionMap: dimension mismatch");
  return product_signs().cwiseProduct(s);
}

Eigen::VectorXd ReductionMap::product_signs() const {
  Eigen::VectorXd sg(static_cast<Eigen::Index>(tags.size()));
  for (size_t i = 0; i < tags.size(); ++i) {
    const bool flip = tags[i] == ReductionTag::I2 || tags[i] == ReductionTag::I4;
    sg[static_cast<Eigen::Index>(i)] = flip ? -1.0 : 1.0;
  }
  return sg;
}

ReductionResult reduce(const L1Problem& prob, const HdpPoint& p, double tol) {
  if (p.dim() != prob.dim()) throw InvalidInputError("reduce: dimension mismatch");
  if (!(tol >= 0)) throw InvalidInputError("reduce: tol must be nonnegative");

  const double gn = F_grad(prob, p).norm();
  if (gn > tol) {
    std::ostringstream os;
    os << "reduce: point is not stationary (||grad F|| = " << gn
       << " > tol = " << tol << ")";
    throw NotStationaryError(os.str());
  }

  const Eigen::VectorXd g = prob.loss->gradient(p.s());
  ReductionMap map;
  map.tags.resize(p.dim());
  for (int i = 0; i < p.dim(); ++i) {
    const double ai = p.a()[i], bi = p.b()[i];
    if (ai > tol) {
      map.tags[i] = ReductionTag::I1;
    } else if (ai < -tol) {
      map.tags[i] = ReductionTag::I3;
    } else if (bi > tol) {
      map.tags[i] = ReductionTag::I2;
    } else if (bi < -tol) {
      map.tags[i] = ReductionTag::I4;
    } else {
      map.tags[i] = std::abs(g[i] - prob.mu) <= tol ? ReductionTag::I2
                                                    : ReductionTag::I1;
    }
  }

  L1Problem transformed(make_sign_flipped(prob.loss, map.product_signs()),
                        prob.mu);
  return ReductionResult{map, map.apply(p), std::move(transformed)};
}

} // namespace hdp

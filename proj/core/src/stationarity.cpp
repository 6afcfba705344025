#include "hdp/stationarity.hpp"

#include "hdp/errors.hpp"
#include "hdp/solvers.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <sstream>

namespace hdp {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_f_stationary(const L1Problem& prob, const Eigen::VectorXd& s,
                          double tol, const char* who) {
  const double d = f_subdiff_dist(prob, s);
  if (d > tol) {
    std::ostringstream os;
    os << who << ": point is not stationary for f (subdifferential distance "
       << d << " > tol " << tol << ")";
    throw NotStationaryError(os.str());
  }
}
} // namespace

const char* to_string(CaseTag t) {
  switch (t) {
    case CaseTag::both_zero: return "both_zero";
    case CaseTag::a_zero_grad_mu: return "a_zero_grad_mu";
    case CaseTag::b_zero_grad_negmu: return "b_zero_grad_negmu";
    case CaseTag::none: return "none";
  }
  return "unknown";
}

StationarityReport classify_F_stationary(const L1Problem& prob,
                                         const HdpPoint& p, double tol) {
  if (p.dim() != prob.dim())
    throw InvalidInputError("classify_F_stationary: dimension mismatch");
  if (!(tol >= 0)) throw InvalidInputError("classify_F_stationary: negative tol");

  StationarityReport rep;
  rep.tol = tol;
  rep.grad_norm_F = F_grad(prob, p).norm();
  // Solver limits carry coordinates that converge to zero without ever
  // reaching it exactly; the subdifferential distance needs them rounded,
  // since its zero test is exact by contract.
  Eigen::VectorXd s_rounded = p.s();
  for (Eigen::Index i = 0; i < s_rounded.size(); ++i)
    if (std::abs(s_rounded[i]) <= tol) s_rounded[i] = 0;
  rep.f_subdiff = f_subdiff_dist(prob, s_rounded);
  rep.f_stationary = rep.f_subdiff <= tol;

  const Eigen::VectorXd g = prob.loss->gradient(p.s());
  rep.case_tags.resize(p.dim());
  rep.min_ab_product = 0;
  for (int i = 0; i < p.dim(); ++i) {
    const double ai = p.a()[i], bi = p.b()[i];
    const bool az = std::abs(ai) <= tol, bz = std::abs(bi) <= tol;
    if (az && bz)
      rep.case_tags[i] = CaseTag::both_zero;
    else if (az && std::abs(g[i] - prob.mu) <= tol)
      rep.case_tags[i] = CaseTag::a_zero_grad_mu;
    else if (bz && std::abs(g[i] + prob.mu) <= tol)
      rep.case_tags[i] = CaseTag::b_zero_grad_negmu;
    else
      rep.case_tags[i] = CaseTag::none;
    rep.min_ab_product =
        std::max(rep.min_ab_product, std::min(ai * ai, bi * bi));
  }

  if (rep.f_stationary) {
    rep.sc_margin = kInf;
    for (int i = 0; i < p.dim(); ++i)
      if (std::abs(p.s()[i]) <= tol)
        rep.sc_margin = std::min(rep.sc_margin, prob.mu - std::abs(g[i]));
    rep.strict_complementarity = rep.sc_margin >= tol;
  } else {
    rep.sc_margin = kNaN;
    rep.strict_complementarity = false;
  }

  rep.lambda_min_F = kNaN;
  rep.support_lambda_min = kNaN;
  rep.support_hessian_psd = false;
  rep.second_order = false;
  return rep;
}

IndexSets index_sets(const L1Problem& prob, const Eigen::VectorXd& s,
                     double tol) {
  if (s.size() != prob.dim())
    throw InvalidInputError("index_sets: dimension mismatch");
  require_f_stationary(prob, s, tol, "index_sets");

  const Eigen::VectorXd g = prob.loss->gradient(s);
  IndexSets out;
  out.n = static_cast<int>(s.size());
  for (int i = 0; i < out.n; ++i) {
    if (std::abs(s[i]) > tol) {
      out.J2.push_back(i);
    } else if (std::abs(g[i] + prob.mu) <= tol) {
      out.J31.push_back(i);
    } else if (std::abs(g[i] - prob.mu) <= tol) {
      out.J32.push_back(i);
    } else {
      out.J1.push_back(i);
    }
  }
  return out;
}

bool ConeDescriptor::contains(const Eigen::VectorXd& d, double tol) const {
  if (static_cast<size_t>(d.size()) != tags.size())
    throw InvalidInputError("ConeDescriptor: dimension mismatch");
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    switch (tags[i]) {
      case ConeTag::zero:
        if (std::abs(d[i]) > tol) return false;
        break;
      case ConeTag::free_axis:
        break;
      case ConeTag::nonneg:
        if (d[i] < -tol) return false;
        break;
      case ConeTag::nonpos:
        if (d[i] > tol) return false;
        break;
    }
  }
  return true;
}

Eigen::VectorXd ConeDescriptor::project(const Eigen::VectorXd& d) const {
  if (static_cast<size_t>(d.size()) != tags.size())
    throw InvalidInputError("ConeDescriptor: dimension mismatch");
  Eigen::VectorXd out = d;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    switch (tags[i]) {
      case ConeTag::zero: out[i] = 0; break;
      case ConeTag::free_axis: break;
      case ConeTag::nonneg: out[i] = std::max(d[i], 0.0); break;
      case ConeTag::nonpos: out[i] = std::min(d[i], 0.0); break;
    }
  }
  return out;
}

ConeDescriptor critical_cone(const IndexSets& isets) {
  ConeDescriptor cone;
  cone.tags.assign(isets.n, ConeTag::zero);
  for (int i : isets.J2) cone.tags[i] = ConeTag::free_axis;
  for (int i : isets.J31) cone.tags[i] = ConeTag::nonneg;
  for (int i : isets.J32) cone.tags[i] = ConeTag::nonpos;
  return cone;
}

std::pair<bool, double> strict_complementarity(const L1Problem& prob,
                                               const Eigen::VectorXd& s,
                                               double tol) {
  if (s.size() != prob.dim())
    throw InvalidInputError("strict_complementarity: dimension mismatch");
  require_f_stationary(prob, s, tol, "strict_complementarity");

  const Eigen::VectorXd g = prob.loss->gradient(s);
  double margin = kInf;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (std::abs(s[i]) <= tol)
      margin = std::min(margin, prob.mu - std::abs(g[i]));
  return {margin >= tol, margin};
}

double lambda_min(const Eigen::MatrixXd& M) {
  if (M.rows() == 0 || M.rows() != M.cols())
    throw InvalidInputError("lambda_min: matrix must be square and nonempty");
  const double scale = 1.0 + M.cwiseAbs().maxCoeff();
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw InvalidInputError("lambda_min: matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (M + M.transpose()),
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

StationarityReport second_order_test(const L1Problem& prob, const HdpPoint& p,
                                     double tol) {
  StationarityReport rep = classify_F_stationary(prob, p, tol);
  rep.lambda_min_F = lambda_min(F_hess(prob, p));

  std::vector<int> support;
  for (int i = 0; i < p.dim(); ++i)
    if (std::abs(p.s()[i]) > tol) support.push_back(i);

  if (support.empty()) {
    rep.support_lambda_min = kInf;
    rep.support_hessian_psd = true;
  } else {
    const Eigen::MatrixXd H = prob.loss->hessian(p.s());
    Eigen::MatrixXd HII(support.size(), support.size());
    for (size_t r = 0; r < support.size(); ++r)
      for (size_t c = 0; c < support.size(); ++c)
        HII(r, c) = H(support[r], support[c]);
    rep.support_lambda_min = lambda_min(HII);
    rep.support_hessian_psd = rep.support_lambda_min >= -tol;
  }

  rep.second_order = rep.grad_norm_F <= tol && rep.min_ab_product <= tol &&
                     rep.f_stationary && rep.support_hessian_psd;
  return rep;
}

SaddleMarginResult saddle_margin_bruteforce(const L1Problem& prob,
                                            const SaddleMarginConfig& cfg) {
  const int n = prob.dim();
  if (n > 10)
    throw UnsupportedError("saddle_margin_bruteforce: dimension exceeds 10");
  if (!prob.loss->is_convex())
    throw UnsupportedError("saddle_margin_bruteforce: loss must be convex");

  const double step = cfg.step > 0 ? cfg.step : suggest_ista_step(prob);
  const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(n);

  SaddleMarginResult res;
  res.inner_tol = cfg.inner_tol;
  res.epsilon = kInf;

  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    Eigen::VectorXd w(n);
    for (int i = 0; i < n; ++i)
      w[i] = prob.mu * (((mask >> i) & 1u) ? 2.0 : 1.0);

    Trace tr = ista_weighted(*prob.loss, w, x0, step, cfg.max_iter, cfg.inner_tol);

    SaddleMarginRow row;
    row.subset_mask = mask;
    row.converged = tr.status == SolveStatus::converged;
    row.iterations = tr.iterations;
    row.v = prob.loss->gradient(tr.final_iterate());
    double acc = 0;
    for (int i = 0; i < n; ++i) {
      const double excess = std::max(std::abs(row.v[i]) - prob.mu, 0.0);
      acc += excess * excess;
    }
    row.dist = std::sqrt(acc);
    if (row.converged && row.dist > cfg.positive_tol) {
      res.epsilon = std::min(res.epsilon, row.dist);
      res.family_empty = false;
    }
    res.rows.push_back(std::move(row));
  }

  res.delta = res.family_empty
                  ? 2.0 * prob.mu
                  : std::min(2.0 * prob.mu, 2.0 * res.epsilon / std::sqrt(n));
  return res;
}

namespace {

// Damped Newton for grad_h(s)_S = -mu sigma_S with s = 0 off S.
// Returns true when the residual drops below cfg.newton_tol.
bool solve_face(const L1Problem& prob, const std::vector<int>& S,
                const Eigen::VectorXd& sigma, const EnumerateConfig& cfg,
                Eigen::VectorXd& s_out) {
  const int n = prob.dim();
  Eigen::VectorXd s = Eigen::VectorXd::Zero(n);
  const int m = static_cast<int>(S.size());
  if (m == 0) {
    s_out = s;
    return true;
  }

  auto residual = [&](const Eigen::VectorXd& sv) {
    const Eigen::VectorXd g = prob.loss->gradient(sv);
    Eigen::VectorXd r(m);
    for (int j = 0; j < m; ++j) r[j] = g[S[j]] + prob.mu * sigma[S[j]];
    return r;
  };

  Eigen::VectorXd r = residual(s);
  for (int it = 0; it < cfg.newton_max_iter; ++it) {
    if (r.norm() <= cfg.newton_tol) break;
    const Eigen::MatrixXd H = prob.loss->hessian(s);
    Eigen::MatrixXd J(m, m);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) J(a, b) = H(S[a], S[b]);

    // Rank-safe solve; on degenerate faces this picks the least-norm step.
    const Eigen::VectorXd dir = J.completeOrthogonalDecomposition().solve(-r);
    if (!dir.allFinite()) return false;

    double t = 1.0;
    bool moved = false;
    for (int half = 0; half < 30; ++half) {
      Eigen::VectorXd cand = s;
      for (int j = 0; j < m; ++j) cand[S[j]] += t * dir[j];
      const Eigen::VectorXd rc = residual(cand);
      if (rc.allFinite() && rc.norm() <= (1.0 - 1e-4 * t) * r.norm()) {
        s = cand;
        r = rc;
        moved = true;
        break;
      }
      t *= 0.5;
    }
    if (!moved) return false;
  }

  if (r.norm() > cfg.newton_tol) return false;
  s_out = s;
  return true;
}

} // namespace

EnumerationResult enumerate_F_stationary_smalln(const L1Problem& prob,
                                                const EnumerateConfig& cfg) {
  const int n = prob.dim();
  if (n > 4)
    throw UnsupportedError("enumerate_F_stationary_smalln: dimension exceeds 4");

  EnumerationResult res;
  long total = 1;
  for (int i = 0; i < n; ++i) total *= 3;

  std::vector<Eigen::VectorXd> kept_s;
  for (long code = 0; code < total; ++code) {
    // Decode a sign pattern in {-1, 0, +1}^n.
    Eigen::VectorXd sigma(n);
    std::vector<int> S;
    long c = code;
    for (int i = 0; i < n; ++i) {
      const int digit = static_cast<int>(c % 3);
      c /= 3;
      sigma[i] = digit == 2 ? -1.0 : static_cast<double>(digit);
      if (digit != 0) S.push_back(i);
    }
    ++res.patterns_tried;

    Eigen::VectorXd s;
    if (!solve_face(prob, S, sigma, cfg, s)) {
      std::ostringstream os;
      os << "pattern [" << sigma.transpose() << "]: face solve diverged; skipped";
      res.warnings.push_back(os.str());
      continue;
    }

    // The lift needs sigma_i * s_i >= 0 on the support.
    bool compatible = true;
    for (int i : S) {
      if (sigma[i] * s[i] < -1e-10) {
        compatible = false;
        break;
      }
      if (std::abs(s[i]) <= 1e-10) s[i] = 0.0;
    }
    if (!compatible) continue;

    Eigen::VectorXd a(n), b(n);
    for (int i = 0; i < n; ++i) {
      a[i] = s[i] > 0 ? std::sqrt(s[i]) : 0.0;
      b[i] = s[i] < 0 ? std::sqrt(-s[i]) : 0.0;
    }
    HdpPoint p(std::move(a), std::move(b));

    const double gn = F_grad(prob, p).norm();
    if (gn > cfg.grad_accept) {
      std::ostringstream os;
      os << "pattern [" << sigma.transpose()
         << "]: lifted gradient norm " << gn << " exceeds acceptance; skipped";
      res.warnings.push_back(os.str());
      continue;
    }

    bool dup = false;
    for (const auto& seen : kept_s)
      if ((seen - p.s()).lpNorm<Eigen::Infinity>() <= cfg.dedup_tol) {
        dup = true;
        break;
      }
    if (dup) continue;

    kept_s.push_back(p.s());
    res.points.push_back(std::move(p));
  }
  return res;
}

} // namespace hdp

#include "hdp/kl.hpp"

#include "hdp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace hdp {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct OlsFit {
  double slope = 0;
  double intercept = 0;
  double r_squared = 0;
};

// Plain least squares of y against x; r_squared is 1 - SSR/SST.
OlsFit ols(const std::vector<double>& x, const std::vector<double>& y) {
  const size_t n = x.size();
  double mx = 0, my = 0;
  for (size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0, sxy = 0, syy = 0;
  for (size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0) throw InvalidInputError("fit: degenerate abscissae");
  OlsFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (syy <= 0) {
    f.r_squared = 1.0;
  } else {
    double ssr = 0;
    for (size_t i = 0; i < n; ++i) {
      const double e = y[i] - (f.intercept + f.slope * x[i]);
      ssr += e * e;
    }
    f.r_squared = 1.0 - ssr / syy;
  }
  return f;
}
} // namespace

GapWindow default_gap_window(double ref_value) {
  return GapWindow{1e-12, 1e-2 * (1.0 + std::abs(ref_value))};
}

const char* to_string(PredictionSource s) {
  switch (s) {
    case PredictionSource::strict_complementarity:
      return "strict-complementarity";
    case PredictionSource::holder_error_bound:
      return "holder-error-bound";
  }
  return "unknown";
}

ExponentPrediction predict_F_exponent(double alpha, bool strict_comp,
                                      double gamma) {
  if (!(alpha > 0 && alpha < 1))
    throw InvalidInputError("predict_F_exponent: alpha must lie in (0, 1)");
  if (strict_comp)
    return {std::max(alpha, 0.5), PredictionSource::strict_complementarity};
  if (!(gamma > 0 && gamma <= 1))
    throw InvalidInputError("predict_F_exponent: gamma must lie in (0, 1]");
  const double beta = 1.0 - gamma * (1.0 - alpha);
  return {0.5 * (1.0 + beta), PredictionSource::holder_error_bound};
}

KlFit fit_kl_exponent(const std::vector<KlSample>& samples, GapWindow window) {
  if (!(window.lo > 0 && window.hi > window.lo))
    throw InvalidInputError("fit_kl_exponent: bad window");

  std::vector<double> lg, ls;
  long excluded = 0;
  for (const auto& s : samples) {
    if (!(s.gap >= window.lo && s.gap <= window.hi) || !(s.slope > 0)) {
      ++excluded;
      continue;
    }
    lg.push_back(std::log(s.gap));
    ls.push_back(std::log(s.slope));
  }
  if (lg.size() < 10) {
    std::ostringstream os;
    os << "fit_kl_exponent: only " << lg.size()
       << " usable samples in the window; at least 10 required";
    throw InvalidInputError(os.str());
  }

  const OlsFit f = ols(lg, ls);
  KlFit out;
  out.alpha_hat = f.slope;
  out.log_intercept = f.intercept;
  out.r_squared = f.r_squared;
  out.n_samples = static_cast<long>(lg.size());
  out.n_excluded = excluded;
  out.window = window;
  return out;
}

const char* to_string(SampleMode m) {
  switch (m) {
    case SampleMode::ray: return "ray";
    case SampleMode::ball: return "ball";
    case SampleMode::trajectory: return "trajectory";
  }
  return "unknown";
}

KlSampleSet sample_kl_F(const L1Problem& prob, const HdpPoint& pstar,
                        SampleMode mode, const KlSampleConfig& cfg) {
  if (pstar.dim() != prob.dim())
    throw InvalidInputError("sample_kl_F: dimension mismatch");
  if (!(cfg.radius > 0)) throw InvalidInputError("sample_kl_F: radius must be positive");
  if (cfg.count <= 0) throw InvalidInputError("sample_kl_F: count must be positive");
  if (mode == SampleMode::trajectory)
    throw InvalidInputError(
        "sample_kl_F: trajectory mode reads a Trace; use sample_kl_from_trace");

  const int d = 2 * prob.dim();
  const double Fstar = F_value(prob, pstar);
  const Eigen::VectorXd center = pstar.stacked();
  GaussianStream gs(cfg.seed);

  KlSampleSet out;
  auto push = [&](const Eigen::VectorXd& z) {
    const HdpPoint p = HdpPoint::from_stacked(z);
    const double gap = F_value(prob, p) - Fstar;
    if (!(gap > 0)) {
      ++out.n_discarded;
      return;
    }
    out.samples.push_back({gap, F_grad(prob, p).norm()});
  };

  if (mode == SampleMode::ray) {
    if (!(cfg.ratio > 0 && cfg.ratio < 1))
      throw InvalidInputError("sample_kl_F: ratio must lie in (0, 1)");
    std::vector<Eigen::VectorXd> dirs = cfg.directions;
    if (dirs.empty()) {
      for (int j = 0; j < cfg.n_directions; ++j) dirs.push_back(gs.vector(d));
    }
    for (auto& dir : dirs) {
      if (dir.size() != d)
        throw InvalidInputError("sample_kl_F: direction dimension mismatch");
      const double nrm = dir.norm();
      if (!(nrm > 0)) throw InvalidInputError("sample_kl_F: zero direction");
      const Eigen::VectorXd u = dir / nrm;
      double r = cfg.radius;
      for (int j = 0; j < cfg.count; ++j) {
        push(center + r * u);
        r *= cfg.ratio;
      }
    }
  } else { // ball
    for (int j = 0; j < cfg.count; ++j) {
      Eigen::VectorXd g = gs.vector(d);
      const double nrm = g.norm();
      if (!(nrm > 0)) continue;
      const double r =
          cfg.radius * std::pow(gs.uniform(), 1.0 / static_cast<double>(d));
      push(center + (r / nrm) * g);
    }
  }
  return out;
}

KlSampleSet sample_kl_from_trace(const Trace& trace, double ref_value) {
  KlSampleSet out;
  const size_t n = std::min(trace.values.size(), trace.grad_norms.size());
  for (size_t k = 0; k < n; ++k) {
    const double gap = trace.values[k] - ref_value;
    if (!(gap > 0)) {
      ++out.n_discarded;
      continue;
    }
    out.samples.push_back({gap, trace.grad_norms[k]});
  }
  return out;
}

KlSampleSet sample_kl_f_restricted(const L1Problem& prob,
                                   const Eigen::VectorXd& sstar,
                                   const IndexSets& isets, double radius,
                                   int count, std::uint64_t seed, double tol) {
  if (sstar.size() != prob.dim())
    throw InvalidInputError("sample_kl_f_restricted: dimension mismatch");
  const auto [sc, margin] = strict_complementarity(prob, sstar, tol);
  if (!sc) {
    std::ostringstream os;
    os << "sample_kl_f_restricted: strict complementarity fails (margin "
       << margin << "); the restricted sampler does not apply, use the "
       << "error-bound prediction route";
    throw UnsupportedError(os.str());
  }
  const std::vector<int>& I = isets.support();
  if (I.empty())
    throw InvalidInputError("sample_kl_f_restricted: empty support");
  if (!(radius > 0) || count <= 0)
    throw InvalidInputError("sample_kl_f_restricted: bad radius or count");

  const double h_star = prob.loss->value(sstar);
  const Eigen::VectorXd g_star = prob.loss->gradient(sstar);

  GaussianStream gs(seed);
  KlSampleSet out;
  const int m = static_cast<int>(I.size());
  for (int j = 0; j < count; ++j) {
    Eigen::VectorXd dir = gs.vector(m);
    const double nrm = dir.norm();
    if (!(nrm > 0)) continue;
    // Geometric radius ladder so gaps cover several decades.
    const double r = radius * std::pow(0.9, j % 120);
    Eigen::VectorXd x = sstar;
    for (int t = 0; t < m; ++t) x[I[t]] += (r / nrm) * dir[t];

    const Eigen::VectorXd dx = x - sstar;
    const double gap = prob.loss->value(x) - h_star - g_star.dot(dx);
    if (!(gap > 0)) {
      ++out.n_discarded;
      continue;
    }
    const Eigen::VectorXd gd = prob.loss->gradient(x) - g_star;
    double acc = 0;
    for (int t = 0; t < m; ++t) acc += gd[I[t]] * gd[I[t]];
    out.samples.push_back({gap, std::sqrt(acc)});
  }
  return out;
}

const char* to_string(RateModel m) {
  return m == RateModel::linear ? "linear" : "sublinear";
}

RateFit fit_convergence_rate(const Trace& trace, const Eigen::VectorXd& ref) {
  if (trace.status != SolveStatus::converged)
    throw InvalidInputError("fit_convergence_rate: trace did not converge");
  if (trace.iterates.empty() || trace.iterates.front().size() != ref.size())
    throw InvalidInputError("fit_convergence_rate: reference dimension mismatch");

  std::vector<long> ks;
  std::vector<double> ds;
  for (size_t i = 0; i < trace.iterates.size(); ++i) {
    const double d = (trace.iterates[i] - ref).norm();
    if (d > 1e-13) {
      ks.push_back(trace.iterate_indices[i]);
      ds.push_back(d);
    }
  }

  const size_t start = ks.size() - ks.size() / 3; // last recorded third
  std::vector<double> xs_lin, xs_sub, ys, ys_sub;
  for (size_t i = start; i < ks.size(); ++i) {
    xs_lin.push_back(static_cast<double>(ks[i]));
    ys.push_back(std::log(ds[i]));
    if (ks[i] >= 1) {
      xs_sub.push_back(std::log(static_cast<double>(ks[i])));
      ys_sub.push_back(std::log(ds[i]));
    }
  }
  if (xs_lin.size() < 5 || xs_sub.size() < 5)
    throw InvalidInputError("fit_convergence_rate: too few tail points");

  const OlsFit lin = ols(xs_lin, ys);
  const OlsFit sub = ols(xs_sub, ys_sub);

  RateFit out;
  out.r_squared_linear = lin.r_squared;
  out.r_squared_sublinear = sub.r_squared;
  out.n_points = static_cast<long>(xs_lin.size());
  out.k_lo = ks[start];
  out.k_hi = ks.back();
  if (lin.r_squared >= sub.r_squared) {
    out.model = RateModel::linear;
    out.linear_ratio = std::exp(lin.slope);
    out.sublinear_exponent = kNaN;
    out.r_squared = lin.r_squared;
  } else {
    out.model = RateModel::sublinear;
    out.linear_ratio = kNaN;
    out.sublinear_exponent = -sub.slope;
    out.r_squared = sub.r_squared;
  }
  return out;
}

namespace {

Eigen::VectorXd clamp_box(const Eigen::VectorXd& x, const Eigen::VectorXd& lo,
                          const Eigen::VectorXd& hi) {
  return x.cwiseMax(lo).cwiseMin(hi);
}

} // namespace

Eigen::VectorXd SolutionSetOracle::project_intersect_box(
    const Eigen::VectorXd& x, const Eigen::VectorXd& lo,
    const Eigen::VectorXd& hi) const {
  // Dykstra's alternating projections between the set and the box.
  Eigen::VectorXd z = x;
  Eigen::VectorXd p = Eigen::VectorXd::Zero(x.size());
  Eigen::VectorXd q = Eigen::VectorXd::Zero(x.size());
  for (int sweep = 0; sweep < 10000; ++sweep) {
    const Eigen::VectorXd y = project(z + p);
    p = z + p - y;
    const Eigen::VectorXd zn = clamp_box(y + q, lo, hi);
    q = y + q - zn;
    const double move = (zn - z).norm();
    z = zn;
    if (move <= 1e-10 && (z - project(z)).norm() <= 1e-9) break;
  }
  return z;
}

Eigen::VectorXd SingletonOracle::project_intersect_box(
    const Eigen::VectorXd& x, const Eigen::VectorXd& lo,
    const Eigen::VectorXd& hi) const {
  // The intersection is the point itself whenever it fits the box.
  const Eigen::VectorXd c = clamp_box(point_, lo, hi);
  if ((c - point_).norm() > 0)
    throw NumericalError("SingletonOracle: box excludes the solution point");
  return point_;
}

SegmentOracle::SegmentOracle(Eigen::VectorXd p, Eigen::VectorXd q)
    : p_(std::move(p)), q_(std::move(q)) {
  if (p_.size() != q_.size())
    throw InvalidInputError("SegmentOracle: endpoint dimension mismatch");
}

Eigen::VectorXd SegmentOracle::project(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd v = q_ - p_;
  const double vv = v.squaredNorm();
  if (vv == 0) return p_;
  const double t = std::clamp((x - p_).dot(v) / vv, 0.0, 1.0);
  return p_ + t * v;
}

Eigen::VectorXd SegmentOracle::project_intersect_box(
    const Eigen::VectorXd& x, const Eigen::VectorXd& lo,
    const Eigen::VectorXd& hi) const {
  // The box constraints are linear in the segment parameter, so the
  // feasible parameter range is an interval and the projection is the
  // clamped least-squares parameter.
  const Eigen::VectorXd v = q_ - p_;
  const double vv = v.squaredNorm();
  if (vv == 0) return p_;
  double tlo = 0.0;
  double thi = 1.0;
  for (Eigen::Index i = 0; i < p_.size(); ++i) {
    // lo_i <= p_i + t v_i <= hi_i
    if (v(i) > 0) {
      tlo = std::max(tlo, (lo(i) - p_(i)) / v(i));
      thi = std::min(thi, (hi(i) - p_(i)) / v(i));
    } else if (v(i) < 0) {
      tlo = std::max(tlo, (hi(i) - p_(i)) / v(i));
      thi = std::min(thi, (lo(i) - p_(i)) / v(i));
    } else if (p_(i) < lo(i) || p_(i) > hi(i)) {
      throw NumericalError("SegmentOracle: box excludes the whole segment");
    }
  }
  if (tlo > thi) {
    throw NumericalError("SegmentOracle: box excludes the whole segment");
  }
  const double t = std::clamp((x - p_).dot(v) / vv, tlo, thi);
  return p_ + t * v;
}

PowerRegionOracle::PowerRegionOracle(double gamma) {
  if (!(gamma > 0 && gamma <= 0.5))
    throw InvalidInputError("PowerRegionOracle: gamma must lie in (0, 1/2]");
  r_ = 1.0 / gamma;
}

Eigen::VectorXd PowerRegionOracle::project(const Eigen::VectorXd& x) const {
  if (x.size() != 2) throw InvalidInputError("PowerRegionOracle: dimension 2 only");
  const double x1 = x[0], x2 = x[1];
  if (x1 >= 0 && x2 >= std::pow(x1, r_)) return x; // inside

  // Candidate on the vertical face {0} x [0, inf).
  Eigen::VectorXd best(2);
  best << 0.0, std::max(x2, 0.0);
  double best_d2 = (x - best).squaredNorm();

  // Candidate on the curve (t, t^r), t >= 0: coarse scan then golden section.
  const double T =
      std::max({1.0, x1, x2 > 0 ? std::pow(x2, 1.0 / r_) : 0.0}) + 1.0;
  auto d2 = [&](double t) {
    const double dy = std::pow(t, r_) - x2;
    return (t - x1) * (t - x1) + dy * dy;
  };
  double lo = 0, hi = T;
  {
    const int grid = 128;
    double bt = 0, bv = d2(0);
    for (int i = 1; i <= grid; ++i) {
      const double t = T * i / grid;
      const double v = d2(t);
      if (v < bv) {
        bv = v;
        bt = t;
      }
    }
    lo = std::max(0.0, bt - T / grid);
    hi = std::min(T, bt + T / grid);
  }
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = hi - phi * (hi - lo), d = lo + phi * (hi - lo);
  double fc = d2(c), fd = d2(d);
  while (hi - lo > 1e-13 * (1.0 + hi)) {
    if (fc < fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - phi * (hi - lo);
      fc = d2(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + phi * (hi - lo);
      fd = d2(d);
    }
  }
  const double t = 0.5 * (lo + hi);
  Eigen::VectorXd cand(2);
  cand << t, std::pow(t, r_);
  if ((x - cand).squaredNorm() < best_d2) best = cand;
  return best;
}

namespace {

// Golden-section minimizer of a scalar unimodal function on [lo, hi].
template <class F>
double golden_min(const F& f, double lo, double hi, double tol) {
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = hi - phi * (hi - lo);
  double d = lo + phi * (hi - lo);
  double fc = f(c);
  double fd = f(d);
  while (hi - lo > tol) {
    if (fc < fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - phi * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + phi * (hi - lo);
      fd = f(d);
    }
  }
  return 0.5 * (lo + hi);
}

} // namespace

Eigen::VectorXd PowerRegionOracle::project_intersect_box(
    const Eigen::VectorXd& x, const Eigen::VectorXd& lo,
    const Eigen::VectorXd& hi) const {
  if (x.size() != 2) {
    throw InvalidInputError("PowerRegionOracle: dimension 2 only");
  }
  // Feasible first coordinates: t >= max(0, lo1), t <= hi1, and the
  // second-coordinate slice [max(lo2, t^r), hi2] must be nonempty.
  const double t_lo = std::max(0.0, lo(0));
  double t_hi = hi(0);
  if (hi(1) < 0) {
    throw NumericalError("PowerRegionOracle: box excludes the region");
  }
  t_hi = std::min(t_hi, std::pow(hi(1), 1.0 / r_));
  if (t_lo > t_hi) {
    throw NumericalError("PowerRegionOracle: box excludes the region");
  }
  const auto slice_point = [&](double t) {
    const double z2 = std::clamp(x(1), std::max(lo(1), std::pow(t, r_)), hi(1));
    Eigen::VectorXd z(2);
    z << t, z2;
    return z;
  };
  const auto d2 = [&](double t) { return (x - slice_point(t)).squaredNorm(); };
  // Squared distance to the slice is convex in t, so golden section applies.
  const double t =
      golden_min(d2, t_lo, t_hi, 1e-13 * (1.0 + std::abs(t_hi)));
  Eigen::VectorXd best = slice_point(t);
  // Endpoints, in case the minimizer sits on the boundary of the range.
  for (double te : {t_lo, t_hi}) {
    const Eigen::VectorXd cand = slice_point(te);
    if ((x - cand).squaredNorm() < (x - best).squaredNorm()) best = cand;
  }
  return best;
}

ErrorBoundProbe errorbound_probe(const L1Problem& prob,
                                 const SolutionSetOracle& omega,
                                 const IndexSets& isets,
                                 const Eigen::VectorXd& sstar, double gamma,
                                 const std::vector<double>& radii, int count,
                                 std::uint64_t seed) {
  if (sstar.size() != prob.dim())
    throw InvalidInputError("errorbound_probe: dimension mismatch");
  if (!(gamma > 0 && gamma <= 1))
    throw InvalidInputError("errorbound_probe: gamma must lie in (0, 1]");
  if (radii.empty() || count <= 0)
    throw InvalidInputError("errorbound_probe: empty radii or count");

  const int n = prob.dim();
  const ConeDescriptor cone = critical_cone(isets);
  std::vector<int> J3 = isets.J31;
  J3.insert(J3.end(), isets.J32.begin(), isets.J32.end());

  // Deterministic unit directions probing the cone's boundary structure:
  // the extreme rays plus slightly perturbed copies. The bound is tightest
  // near the rays, where a sample can be far from the solution set in one
  // coordinate while close in the others.
  std::vector<Eigen::VectorXd> fixed_dirs;
  {
    Eigen::VectorXd ones = cone.project(Eigen::VectorXd::Ones(n));
    const double on = ones.norm();
    if (on > 0) ones /= on;
    std::vector<Eigen::VectorXd> rays;
    const auto add_ray = [&](int i, double sign) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
      e(i) = sign;
      rays.push_back(e);
    };
    for (int i : isets.J2) {
      add_ray(i, 1.0);
      add_ray(i, -1.0);
    }
    for (int i : isets.J31) add_ray(i, 1.0);
    for (int i : isets.J32) add_ray(i, -1.0);
    for (const Eigen::VectorXd& rdir : rays) {
      fixed_dirs.push_back(rdir);
      if (on > 0) {
        for (double eta : {0.03, 0.3}) {
          Eigen::VectorXd mix = cone.project(rdir + eta * ones);
          const double mn = mix.norm();
          if (mn > 0) fixed_dirs.push_back(mix / mn);
        }
      }
    }
  }

  GaussianStream gs(seed);
  ErrorBoundProbe out;

  for (double radius : radii) {
    if (!(radius > 0))
      throw InvalidInputError("errorbound_probe: radii must be positive");
    ErrorBoundProbeRow row;
    row.radius = radius;

    // Box half-widths are drawn log-uniformly from [rho_lo, radius]; the
    // lower end scales like radius^{1/gamma} because the bound is attained
    // with boxes whose gamma-th power matches the sampling radius.
    const double rho_lo = std::max(
        std::min(radius, std::pow(radius / 10.0, 1.0 / gamma)), 1e-14);
    const double log_span = std::log(radius) - std::log(rho_lo);

    for (int j = 0; j < count; ++j) {
      Eigen::VectorXd dir;
      if (static_cast<std::size_t>(j) < fixed_dirs.size()) {
        dir = fixed_dirs[static_cast<std::size_t>(j)];
      } else {
        Eigen::VectorXd z = cone.project(gs.vector(n));
        const double nrm = z.norm();
        if (!(nrm > 0)) continue;
        dir = z / nrm;
      }
      const Eigen::VectorXd x = sstar + radius * dir;
      const double dist_omega = omega.dist(x);

      // Box variants: tight (rho_i = |x_i - sstar_i|, so x lies in S_rho)
      // followed by four with independent log-uniform half-widths.
      for (int variant = 0; variant < 5; ++variant) {
        Eigen::VectorXd lo = Eigen::VectorXd::Constant(n, -kInf);
        Eigen::VectorXd hi = Eigen::VectorXd::Constant(n, kInf);
        double dist_box = 0;
        for (int i : J3) {
          const double rho =
              variant == 0
                  ? std::abs(x[i] - sstar[i])
                  : rho_lo * std::exp(log_span * gs.uniform());
          lo[i] = sstar[i] - rho;
          hi[i] = sstar[i] + rho;
          const double viol = std::max({x[i] - hi[i], lo[i] - x[i], 0.0});
          dist_box += viol * viol;
        }
        dist_box = std::sqrt(dist_box);

        const double den = std::pow(std::max(dist_omega, dist_box), gamma);
        if (den < 1e-14) {
          ++row.n_skipped;
          continue;
        }
        const Eigen::VectorXd zint = omega.project_intersect_box(x, lo, hi);
        const double ratio = (x - zint).norm() / den;
        row.worst_ratio = std::max(row.worst_ratio, ratio);
        ++row.n_samples;
      }
    }
    out.worst_ratio = std::max(out.worst_ratio, row.worst_ratio);
    out.rows.push_back(row);
  }
  return out;
}

} // namespace hdp

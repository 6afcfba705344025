#pragma once

#include "hdp/model.hpp"

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

namespace hdp {

// First-order condition satisfied at coordinate i of a lifted point:
//   both_zero          a_i = b_i = 0
//   a_zero_grad_mu     a_i = 0 and grad_h(s)_i = mu
//   b_zero_grad_negmu  b_i = 0 and grad_h(s)_i = -mu
//   none               no condition holds (not stationary in coordinate i)
enum class CaseTag { both_zero, a_zero_grad_mu, b_zero_grad_negmu, none };

const char* to_string(CaseTag t);

struct StationarityReport {
  double grad_norm_F = 0;
  std::vector<CaseTag> case_tags;
  double min_ab_product = 0; // || min(a.^2, b.^2) ||_inf
  // f_subdiff_dist at s = a.^2 - b.^2, with coordinates |s_i| <= tol
  // rounded to exact zeros first (solver limits never hit zero exactly).
  double f_subdiff = 0;
  bool f_stationary = false;

  // Meaningful only when f_stationary; margin is +inf for full support.
  bool strict_complementarity = false;
  double sc_margin = 0;

  // Filled by second_order_test; NaN / false from classify_F_stationary.
  double lambda_min_F = 0;        // smallest eigenvalue of hess F
  double support_lambda_min = 0;  // smallest eigenvalue of hess h on support, +inf if empty
  bool support_hessian_psd = false;
  bool second_order = false;

  double tol = 0;
};

// Per-coordinate first-order classification plus the scalar diagnostics
// that need no eigendecomposition.
StationarityReport classify_F_stationary(const L1Problem& prob,
                                         const HdpPoint& p, double tol);

// Partition of coordinates at an f-stationary point s:
//   J1  s_i = 0 and |grad_h(s)_i| < mu      (inactive, interior dual)
//   J2  s_i != 0                            (support)
//   J31 s_i = 0 and grad_h(s)_i = -mu       (boundary dual, nonneg side)
//   J32 s_i = 0 and grad_h(s)_i = +mu       (boundary dual, nonpos side)
struct IndexSets {
  int n = 0;
  std::vector<int> J1, J2, J31, J32;

  const std::vector<int>& support() const { return J2; }
};

// Requires f_subdiff_dist(prob, s) <= tol.
IndexSets index_sets(const L1Problem& prob, const Eigen::VectorXd& s, double tol);

enum class ConeTag { zero, free_axis, nonneg, nonpos };

// Critical cone at s*: directions d with d_i = 0 on J1, free on J2,
// d_i >= 0 on J31, d_i <= 0 on J32.
struct ConeDescriptor {
  std::vector<ConeTag> tags;

  bool contains(const Eigen::VectorXd& d, double tol = 0) const;
  Eigen::VectorXd project(const Eigen::VectorXd& d) const;
};

ConeDescriptor critical_cone(const IndexSets& isets);

// True iff every zero coordinate of s has |grad_h(s)_i| <= mu - tol.
// Returns {verdict, margin}; margin = min over zero coordinates of
// (mu - |grad_h(s)_i|), +inf when the support is full.
// Requires f_subdiff_dist(prob, s) <= tol.
std::pair<bool, double> strict_complementarity(const L1Problem& prob,
                                               const Eigen::VectorXd& s,
                                               double tol);

// Full second-order verdict. second_order is the conjunction of
//   (a) ||grad F|| <= tol
//   (b) ||min(a.^2, b.^2)||_inf <= tol
//   (c) f_subdiff_dist(s) <= tol
//   (d) smallest eigenvalue of grad2_h(s) restricted to the support >= -tol
// and lambda_min_F additionally reports the smallest eigenvalue of the
// full lifted Hessian (equivalent test, reported for cross-checking).
StationarityReport second_order_test(const L1Problem& prob, const HdpPoint& p,
                                     double tol);

// Smallest eigenvalue of a dense symmetric matrix. Requires symmetry
// within 1e-10 * (1 + max |entry|).
double lambda_min(const Eigen::MatrixXd& M);

// Sweep of the doubled-penalty problems f_I(x) = h(x) + mu ||x||_1
// + mu ||x_I||_1 over all index subsets I, each solved to global optimality
// by proximal gradient (h convex required). From each solution the shared
// gradient v^I = grad_h(x^I) is extracted; epsilon is the smallest positive
// distance of any v^I to the box [-mu, mu]^n and the escape margin is
//   delta = min(2 mu, 2 epsilon / sqrt(n)),
// or delta = 2 mu when no subset has positive distance.
struct SaddleMarginConfig {
  long max_iter = 200000;
  double inner_tol = 1e-10;   // proximal-gradient fixed-point residual
  double step = 0;            // <= 0 picks 1 / lambda_max(grad2_h(0))
  double positive_tol = 1e-8; // numerical stand-in for dist > 0
};

struct SaddleMarginRow {
  std::uint32_t subset_mask = 0;
  Eigen::VectorXd v;      // grad_h at the subset's minimizer
  double dist = 0;        // distance of v to [-mu, mu]^n
  bool converged = false;
  long iterations = 0;
};

struct SaddleMarginResult {
  double delta = 0;
  double epsilon = 0;     // +inf when no subset qualifies
  bool family_empty = true;
  std::vector<SaddleMarginRow> rows;
  double inner_tol = 0;
};

// Requires convex loss and dim <= 10.
SaddleMarginResult saddle_margin_bruteforce(const L1Problem& prob,
                                            const SaddleMarginConfig& cfg = {});

// Exhaustive enumeration of the lifted stationary points for dim <= 4:
// for every sign pattern in {-1, 0, +1}^n, solve grad_h(s)_i = -mu sigma_i
// on the pattern's support by damped Newton with s = 0 off-support, keep
// sign-compatible solutions, lift canonically (a = sqrt(max(s,0)),
// b = sqrt(max(-s,0))), de-duplicate, and verify ||grad F|| <= grad_accept.
struct EnumerateConfig {
  int newton_max_iter = 100;
  double newton_tol = 1e-10;
  double grad_accept = 1e-8;
  double dedup_tol = 1e-8;
};

struct EnumerationResult {
  std::vector<HdpPoint> points;
  std::vector<std::string> warnings; // skipped patterns (solve divergence etc.)
  int patterns_tried = 0;
};

EnumerationResult enumerate_F_stationary_smalln(const L1Problem& prob,
                                                const EnumerateConfig& cfg = {});

} // namespace hdp

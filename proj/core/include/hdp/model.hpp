#pragma once

#include "hdp/loss.hpp"

#include <Eigen/Core>
#include <utility>
#include <vector>

namespace hdp {

// min_x f(x) = h(x) + mu * ||x||_1, mu > 0.
struct L1Problem {
  L1Problem(LossPtr loss_in, double mu_in);

  int dim() const { return loss->dim(); }

  LossPtr loss;
  double mu;
};

// A point of the lifted space: the pair (a, b) together with the cached
// product point s = a.^2 - b.^2. s is derived in the constructor and never
// set independently.
class HdpPoint {
public:
  HdpPoint(Eigen::VectorXd a, Eigen::VectorXd b);

  const Eigen::VectorXd& a() const { return a_; }
  const Eigen::VectorXd& b() const { return b_; }
  const Eigen::VectorXd& s() const { return s_; }
  int dim() const { return static_cast<int>(a_.size()); }

  // Stacked [a; b] vector, the layout solvers operate on.
  Eigen::VectorXd stacked() const;
  static HdpPoint from_stacked(const Eigen::VectorXd& ab);

private:
  Eigen::VectorXd a_, b_, s_;
};

// f(x) = h(x) + mu ||x||_1.
double f_value(const L1Problem& prob, const Eigen::VectorXd& x);

// Euclidean distance from 0 to the subdifferential of f at x, computed
// coordinatewise: |grad_h(x)_i + mu sgn(x_i)| where x_i != 0 (exact zero
// test), max(|grad_h(x)_i| - mu, 0) where x_i = 0.
double f_subdiff_dist(const L1Problem& prob, const Eigen::VectorXd& x);

// F(a, b) = h(a.^2 - b.^2) + mu (||a||^2 + ||b||^2).
double F_value(const L1Problem& prob, const HdpPoint& p);

// grad F = [2 a .* (grad_h(s) + mu); 2 b .* (mu - grad_h(s))], stacked [a; b].
Eigen::VectorXd F_grad(const L1Problem& prob, const HdpPoint& p);

// 2n x 2n symmetric Hessian of F at (a, b):
//   4 [diag(a); -diag(b)] grad2_h(s) [diag(a); -diag(b)]^T
//   + 2 blkdiag(diag(grad_h(s)) + mu I, -diag(grad_h(s)) + mu I).
Eigen::MatrixXd F_hess(const L1Problem& prob, const HdpPoint& p);

// G(u, v) = h(u .* v) + (mu/2)(||u||^2 + ||v||^2), the product-form lift.
double G_value(const L1Problem& prob, const Eigen::VectorXd& u,
               const Eigen::VectorXd& v);

// Change of variables between the product form and the difference form:
// a = (u + v)/2, b = (u - v)/2; in exact arithmetic a.^2 - b.^2 = u .* v.
HdpPoint uv_to_ab(const Eigen::VectorXd& u, const Eigen::VectorXd& v);
std::pair<Eigen::VectorXd, Eigen::VectorXd> ab_to_uv(const HdpPoint& p);

// Per-coordinate block of the reduction map applied at a stationary point.
enum class ReductionTag {
  I1, // keep (a_i, b_i)
  I2, // (a_i, b_i) -> (b_i, a_i), sign flip in the product space
  I3, // (a_i, b_i) -> (-a_i, b_i)
  I4, // (a_i, b_i) -> (-b_i, -a_i), sign flip in the product space
};

// H maps lifted points, P maps product points; both are involutions, and
// P carries -1 exactly on the I2 and I4 blocks.
struct ReductionMap {
  std::vector<ReductionTag> tags;

  HdpPoint apply(const HdpPoint& p) const;             // H
  Eigen::VectorXd apply_product(const Eigen::VectorXd& s) const; // P
  Eigen::VectorXd product_signs() const;               // diagonal of P
};

struct ReductionResult {
  ReductionMap map;
  HdpPoint reduced;       // (c, d) = H(a, b); c >= 0 and d = 0 up to tol
  L1Problem transformed;  // loss replaced by h composed with P, same mu
};

// Normal form of a stationary point: transforms (a, b) so the image has
// nonnegative first block and vanishing second block, composing the sign
// flip P into the loss. Requires ||grad F(a, b)|| <= tol.
// Tag priority at tolerance boundaries: a-sign tests first (I1, I3), then
// b-sign tests (I2, I4); both-zero coordinates go to I2 exactly when
// |grad_h(s)_i - mu| <= tol, else to I1.
ReductionResult reduce(const L1Problem& prob, const HdpPoint& p, double tol);

} // namespace hdp

// Small shared problem instances for the test suites.
#pragma once

#include <hdp/loss.hpp>
#include <hdp/model.hpp>
#include <hdp/solvers.hpp>

#include <Eigen/Core>

namespace testsupport {

// h(x) = 0.5 (x - 2)^2 in one dimension.
inline hdp::L1Problem shifted_quadratic_1d(double target, double mu) {
  Eigen::MatrixXd A(1, 1);
  A << 1.0;
  Eigen::VectorXd y(1);
  y << target;
  return hdp::L1Problem(hdp::make_least_squares(A, y), mu);
}

// Random least-squares instance with deterministic entries.
inline hdp::L1Problem random_least_squares(int m, int n, double mu,
                                           std::uint64_t seed) {
  hdp::GaussianStream gs(seed);
  Eigen::MatrixXd A(m, n);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      A(i, j) = gs.next() / std::sqrt(static_cast<double>(m));
    }
  }
  const Eigen::VectorXd y = gs.vector(m);
  return hdp::L1Problem(hdp::make_least_squares(A, y), mu);
}

inline hdp::HdpPoint zero_point(int n) {
  return hdp::HdpPoint(Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n));
}

inline hdp::HdpPoint lift(const Eigen::VectorXd& x) {
  return hdp::HdpPoint(x.cwiseMax(0.0).cwiseSqrt(),
                       (-x).cwiseMax(0.0).cwiseSqrt());
}

} // namespace testsupport

// Microbenchmarks for the hot paths: lifted objective evaluation, gradient,
// Hessian assembly, a full descent solve, and the exponent fit.

#include <hdp/kl.hpp>
#include <hdp/loss.hpp>
#include <hdp/model.hpp>
#include <hdp/solvers.hpp>

#include <benchmark/benchmark.h>

#include <Eigen/Core>

namespace {

hdp::L1Problem make_instance(int m, int n, std::uint64_t seed) {
  hdp::GaussianStream gs(seed);
  Eigen::MatrixXd A(m, n);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      A(i, j) = gs.next() / std::sqrt(static_cast<double>(m));
    }
  }
  const Eigen::VectorXd y = gs.vector(m);
  return hdp::L1Problem(hdp::make_least_squares(A, y), 0.1);
}

void BM_F_value(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const hdp::L1Problem prob = make_instance(2 * n, n, 7);
  const hdp::HdpPoint p = hdp::random_init(n, 8);
  for (auto _ : state) {
    benchmark::DoNotOptimize(hdp::F_value(prob, p));
  }
}
BENCHMARK(BM_F_value)->Arg(16)->Arg(64)->Arg(256);

void BM_F_grad(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const hdp::L1Problem prob = make_instance(2 * n, n, 7);
  const hdp::HdpPoint p = hdp::random_init(n, 8);
  for (auto _ : state) {
    benchmark::DoNotOptimize(hdp::F_grad(prob, p));
  }
}
BENCHMARK(BM_F_grad)->Arg(16)->Arg(64)->Arg(256);

void BM_F_hess(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const hdp::L1Problem prob = make_instance(2 * n, n, 7);
  const hdp::HdpPoint p = hdp::random_init(n, 8);
  for (auto _ : state) {
    benchmark::DoNotOptimize(hdp::F_hess(prob, p));
  }
}
BENCHMARK(BM_F_hess)->Arg(16)->Arg(64);

void BM_gd_solve(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const hdp::L1Problem prob = make_instance(2 * n, n, 7);
  hdp::GdConfig cfg;
  cfg.grad_tol = 1e-8;
  cfg.max_iter = 20000;
  cfg.record_every = 100;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        hdp::gd_backtracking(prob, hdp::random_init(n, 9), cfg));
  }
}
BENCHMARK(BM_gd_solve)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_fit_kl(benchmark::State& state) {
  const hdp::L1Problem prob(hdp::make_power_1d(0.75), 1.0);
  const hdp::HdpPoint pstar(Eigen::VectorXd::Zero(1),
                            Eigen::VectorXd::Zero(1));
  hdp::KlSampleConfig cfg;
  cfg.seed = 3;
  Eigen::VectorXd dir(2);
  dir << 1.0, 0.0;
  cfg.directions = {dir};
  const hdp::KlSampleSet set =
      hdp::sample_kl_F(prob, pstar, hdp::SampleMode::ray, cfg);
  const hdp::GapWindow window = hdp::default_gap_window(0.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(hdp::fit_kl_exponent(set.samples, window));
  }
}
BENCHMARK(BM_fit_kl);

} // namespace

BENCHMARK_MAIN();

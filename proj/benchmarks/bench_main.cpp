#include "imkc/fippa.hpp"
#include "imkc/kernel.hpp"
#include "imkc/mkl_lpp.hpp"
#include "imkc/random.hpp"

#include <benchmark/benchmark.h>

namespace {

Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, imkc::Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
  return m;
}

imkc::KernelSet make_kernels(Eigen::Index samples, int count, Eigen::Index features, std::uint64_t seed) {
  imkc::Rng rng(seed);
  imkc::KernelSet set;
  for (int m = 0; m < count; ++m) {
    const Eigen::MatrixXd points = gaussian(samples, features, rng);
    set.kernels.push_back(imkc::center_kernel(imkc::rbf_kernel(points, imkc::rule_of_thumb_gamma(features))));
  }
  return set;
}

Eigen::MatrixXd make_memberships(Eigen::Index samples, int clusters, imkc::Rng& rng) {
  Eigen::MatrixXd u = gaussian(samples, clusters, rng).array().exp().matrix();
  for (Eigen::Index i = 0; i < samples; ++i) u.row(i) /= u.row(i).sum();
  return u;
}

void BM_RbfKernel(benchmark::State& state) {
  const auto samples = static_cast<Eigen::Index>(state.range(0));
  imkc::Rng rng(7);
  const Eigen::MatrixXd points = gaussian(samples, 50, rng);
  for (auto _ : state) {
    auto kernel = imkc::center_kernel(imkc::rbf_kernel(points, imkc::rule_of_thumb_gamma(50)));
    benchmark::DoNotOptimize(kernel.values.data());
  }
  state.SetComplexityN(samples);
}
BENCHMARK(BM_RbfKernel)->RangeMultiplier(2)->Range(64, 512)->Complexity();

void BM_SelectKernel(benchmark::State& state) {
  imkc::Rng rng(11);
  const Eigen::MatrixXd points = gaussian(state.range(0), 20, rng);
  const double factors[] = {0.5, 1.0, 2.0};
  for (auto _ : state) benchmark::DoNotOptimize(imkc::select_kernel(points, factors, 5));
}
BENCHMARK(BM_SelectKernel)->Arg(100)->Arg(200);

void BM_Optimize(benchmark::State& state) {
  const auto samples = static_cast<Eigen::Index>(state.range(0));
  const auto kernels = make_kernels(samples, static_cast<int>(state.range(1)), 10, 3);
  const auto graph = imkc::build_graph(kernels, 9);
  for (auto _ : state) {
    auto model = imkc::optimize(kernels, graph);
    benchmark::DoNotOptimize(model.objective);
  }
}
BENCHMARK(BM_Optimize)->Args({60, 6})->Args({120, 6})->Args({120, 12})->Unit(benchmark::kMillisecond);

void BM_FippaReport(benchmark::State& state) {
  const auto samples = static_cast<Eigen::Index>(state.range(0));
  const auto kernels = make_kernels(samples, 6, 10, 5);
  const Eigen::VectorXd beta = Eigen::VectorXd::Constant(6, 1.0 / 6.0);
  imkc::Rng rng(13);
  const Eigen::MatrixXd memberships = make_memberships(samples, 4, rng);
  for (auto _ : state) {
    auto report = imkc::compute_report(kernels, beta, memberships);
    benchmark::DoNotOptimize(report.ffippa.scores.data());
  }
}
BENCHMARK(BM_FippaReport)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

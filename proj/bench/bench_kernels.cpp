#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include "selmopf/kernels.hpp"
#include "selmopf/scenario.hpp"
#include "selmopf/case_io.hpp"

using namespace selmopf;

namespace {

struct Inputs {
  Eigen::MatrixXd x, w, h, t;
  Eigen::VectorXd b;
};

Inputs make_inputs(Eigen::Index rows, Eigen::Index hidden) {
  std::srand(7);
  Inputs in;
  in.x = Eigen::MatrixXd::Random(rows, 18);
  in.w = Eigen::MatrixXd::Random(hidden, 18);
  in.b = Eigen::VectorXd::Random(hidden);
  in.h = Eigen::MatrixXd::Random(rows, hidden);
  in.t = Eigen::MatrixXd::Random(rows, 40);
  return in;
}

void BM_HiddenSerial(benchmark::State& s) {
  const Inputs in = make_inputs(s.range(0), s.range(1));
  for (auto _ : s) benchmark::DoNotOptimize(kernels::serial::hidden_layer(in.x, in.w, in.b, Activation::sigmoid));
}

void BM_HiddenOmp(benchmark::State& s) {
  const Inputs in = make_inputs(s.range(0), s.range(1));
  for (auto _ : s) benchmark::DoNotOptimize(kernels::omp::hidden_layer(in.x, in.w, in.b, Activation::sigmoid));
}

void BM_GramSerial(benchmark::State& s) {
  const Inputs in = make_inputs(s.range(0), s.range(1));
  for (auto _ : s) benchmark::DoNotOptimize(kernels::serial::gram(in.h));
}

void BM_GramOmp(benchmark::State& s) {
  const Inputs in = make_inputs(s.range(0), s.range(1));
  for (auto _ : s) benchmark::DoNotOptimize(kernels::omp::gram(in.h));
}

void BM_CrossSerial(benchmark::State& s) {
  const Inputs in = make_inputs(s.range(0), s.range(1));
  for (auto _ : s) benchmark::DoNotOptimize(kernels::serial::cross(in.h, in.t));
}

void BM_CrossOmp(benchmark::State& s) {
  const Inputs in = make_inputs(s.range(0), s.range(1));
  for (auto _ : s) benchmark::DoNotOptimize(kernels::omp::cross(in.h, in.t));
}

void BM_LabelSerial(benchmark::State& s) {
  const CaseData c = load_case(SELMOPF_DATA_DIR "/cases/case9.case");
  UncertaintyConfig u;
  for (auto _ : s) benchmark::DoNotOptimize(build_dataset(c, u, 64, OpfConfig{}, Execution::serial));
}

void BM_LabelParallel(benchmark::State& s) {
  const CaseData c = load_case(SELMOPF_DATA_DIR "/cases/case9.case");
  UncertaintyConfig u;
  for (auto _ : s) benchmark::DoNotOptimize(build_dataset(c, u, 64, OpfConfig{}, Execution::parallel));
}

}  // namespace

BENCHMARK(BM_HiddenSerial)->Args({500, 200})->Args({2000, 1000})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_HiddenOmp)->Args({500, 200})->Args({2000, 1000})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GramSerial)->Args({500, 200})->Args({2000, 1000})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GramOmp)->Args({500, 200})->Args({2000, 1000})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CrossSerial)->Args({500, 200})->Args({2000, 1000})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CrossOmp)->Args({500, 200})->Args({2000, 1000})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LabelSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LabelParallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

#include "iadl/kernels.hpp"
#include "iadl/random.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

using namespace iadl;

Matrix random_matrix(Index rows, Index cols, std::uint64_t stream) {
  Rng rng = make_stream(2024, stream);
  std::normal_distribution<double> g;
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

Execution exec_of(const benchmark::State& state) {
  return state.range(1) == 0 ? Execution::serial : Execution::parallel;
}

void label(benchmark::State& state) {
  state.SetLabel(state.range(1) == 0 ? "serial" : "parallel x" + std::to_string(kernels::thread_count()));
}

// Sizes follow the full benchmark: K = 20 atoms, N = 10000 voxels, T = 300.
constexpr Index kAtoms = 20;
constexpr Index kTime = 300;

void BM_Weights(benchmark::State& state) {
  const Matrix a = random_matrix(kAtoms, state.range(0), 1);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::weights(a, 1e-6, exec_of(state)));
  label(state);
}

void BM_ProjectRows(benchmark::State& state) {
  const Index n = state.range(0);
  const Matrix a = random_matrix(kAtoms, n, 2);
  const Matrix w = kernels::weights(random_matrix(kAtoms, n, 3), 1e-3, Execution::serial);
  const Vector phi = Vector::Constant(kAtoms, 0.1 * static_cast<double>(n));
  for (auto _ : state) {
    Matrix work = a;
    benchmark::DoNotOptimize(kernels::project_rows(work, w, phi, exec_of(state)));
  }
  label(state);
}

void BM_ProjectColumns(benchmark::State& state) {
  const Matrix b = random_matrix(state.range(0), kAtoms, 4);
  const Matrix delta = random_matrix(state.range(0), 3, 5);
  for (auto _ : state) {
    Matrix work = b;
    benchmark::DoNotOptimize(kernels::project_columns(work, delta, 2.0, 1.0, exec_of(state)));
  }
  label(state);
}

void BM_ResidualSq(benchmark::State& state) {
  const Index n = state.range(0);
  const Matrix d = random_matrix(kTime, kAtoms, 6);
  const Matrix s = random_matrix(kAtoms, n, 7);
  const Matrix x = random_matrix(kTime, n, 8);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::residual_sq(x, d, s, exec_of(state)));
  label(state);
}

BENCHMARK(BM_Weights)->ArgsProduct({{1600, 10000}, {0, 1}});
BENCHMARK(BM_ProjectRows)->ArgsProduct({{1600, 10000}, {0, 1}});
BENCHMARK(BM_ProjectColumns)->ArgsProduct({{150, 300}, {0, 1}});
BENCHMARK(BM_ResidualSq)->ArgsProduct({{1600, 10000}, {0, 1}});

}  // namespace

BENCHMARK_MAIN();

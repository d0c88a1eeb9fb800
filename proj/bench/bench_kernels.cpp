// Serial reference kernels against their OpenMP counterparts, plus one
// forward/backward pass of each slot decoder.

#include <benchmark/benchmark.h>

#include <random>

#include "ocvl/kernels.hpp"
#include "ocvl/train_loop.hpp"

namespace {

using ocvl::Matrix;

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(r, c);
  for (double& x : m.values()) x = n(rng);
  return m;
}

// Decoder-shaped products: (HW x D) * (D x D) and the logits (HW x D) * (K x D)^T.
template <void (*Gemm)(const Matrix&, const Matrix&, Matrix&, bool)>
void BM_gemm_nn(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_matrix(rows, 64, 1), b = random_matrix(64, 64, 2);
  Matrix c(rows, 64);
  for (auto _ : state) {
    Gemm(a, b, c, false);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * std::int64_t(rows) * 64 * 64);
}

template <void (*Gemm)(const Matrix&, const Matrix&, Matrix&, bool)>
void BM_gemm_nt(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_matrix(rows, 64, 3), b = random_matrix(11, 64, 4);
  Matrix c(rows, 11);
  for (auto _ : state) {
    Gemm(a, b, c, false);
    benchmark::DoNotOptimize(c.data());
  }
}

template <void (*Gemm)(const Matrix&, const Matrix&, Matrix&, bool)>
void BM_gemm_tn(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_matrix(rows, 64, 5), b = random_matrix(rows, 64, 6);
  Matrix c(64, 64);
  for (auto _ : state) {
    Gemm(a, b, c, false);
    benchmark::DoNotOptimize(c.data());
  }
}

template <void (*Softmax)(const Matrix&, Matrix&)>
void BM_softmax(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_matrix(rows, 11, 7);
  Matrix out(rows, 11);
  for (auto _ : state) {
    Softmax(a, out);
    benchmark::DoNotOptimize(out.data());
  }
}

template <void (*Norm)(const Matrix&, std::span<const double>, std::span<const double>, double, Matrix&, Matrix&,
                       std::vector<double>&)>
void BM_layer_norm(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_matrix(rows, 64, 8);
  const std::vector<double> g(64, 1.0), b(64, 0.0);
  Matrix out(rows, 64), normalized(rows, 64);
  std::vector<double> inv_std;
  for (auto _ : state) {
    Norm(a, g, b, 1e-5, out, normalized, inv_std);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_decoders(benchmark::State& state) {
  ocvl::BenchWorkload wl;
  wl.slots = static_cast<std::size_t>(state.range(0));
  wl.height = wl.width = 32;
  wl.repeats = 1;
  ocvl::BenchReport report;
  for (auto _ : state) report = ocvl::bench_decoders(wl);
  state.counters["attentional_s"] = report.attentional.wall_seconds;
  state.counters["broadcast_s"] = report.broadcast.wall_seconds;
  state.counters["memory_ratio"] = report.memory_ratio;
}

namespace k = ocvl::kernels;

BENCHMARK(BM_gemm_nn<k::serial::gemm_nn>)->Name("gemm_nn/serial")->Arg(1024)->Arg(4096);
BENCHMARK(BM_gemm_nn<k::gemm_nn>)->Name("gemm_nn/openmp")->Arg(1024)->Arg(4096);
BENCHMARK(BM_gemm_nt<k::serial::gemm_nt>)->Name("gemm_nt/serial")->Arg(1024)->Arg(4096);
BENCHMARK(BM_gemm_nt<k::gemm_nt>)->Name("gemm_nt/openmp")->Arg(1024)->Arg(4096);
BENCHMARK(BM_gemm_tn<k::serial::gemm_tn>)->Name("gemm_tn/serial")->Arg(1024)->Arg(4096);
BENCHMARK(BM_gemm_tn<k::gemm_tn>)->Name("gemm_tn/openmp")->Arg(1024)->Arg(4096);
BENCHMARK(BM_softmax<k::serial::softmax_rows>)->Name("softmax_rows/serial")->Arg(4096);
BENCHMARK(BM_softmax<k::softmax_rows>)->Name("softmax_rows/openmp")->Arg(4096);
BENCHMARK(BM_layer_norm<k::serial::layer_norm_rows>)->Name("layer_norm_rows/serial")->Arg(4096);
BENCHMARK(BM_layer_norm<k::layer_norm_rows>)->Name("layer_norm_rows/openmp")->Arg(4096);
BENCHMARK(BM_decoders)->Arg(1)->Arg(11)->Unit(benchmark::kMillisecond)->Iterations(1);

}  // namespace

BENCHMARK_MAIN();

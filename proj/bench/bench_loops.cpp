// Serial reference vs OpenMP builds of the hot loops.

#include <benchmark/benchmark.h>

#include <cmath>
#include <complex>
#include <vector>

#include "kbkz/loops.hpp"
#include "kbkz/relaxation_kernel.hpp"

using namespace kbkz;

namespace {

struct MemoryCase {
  std::size_t nodes, rows;
  std::vector<double> history, cur, W, out;
  DampingFunction g = DampingFunction::doi_edwards();

  MemoryCase(std::size_t n, std::size_t r) : nodes(n), rows(r), history(n * r), cur(n), W(r + 1), out(n) {
    for (std::size_t j = 0; j <= r; ++j) W[j] = std::exp(-1e-3 * static_cast<double>(j)) * 1e-3;
    for (std::size_t j = 0; j < r; ++j) {
      for (std::size_t i = 0; i < n; ++i) history[j * n + i] = 1e-3 * std::sin(0.01 * static_cast<double>(i + j));
    }
    for (std::size_t i = 0; i < n; ++i) cur[i] = 1e-3 * std::cos(0.01 * static_cast<double>(i));
  }
  loops::HistoryView view() const { return {history.data(), rows, nodes}; }
};

template <bool Omp>
void BM_memory_sum(benchmark::State& state) {
  MemoryCase m(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)));
  for (auto _ : state) {
    if constexpr (Omp) {
      loops::omp::memory_sum(m.view(), m.cur, m.W, 5e-4, 0.2, m.g, m.out);
    } else {
      loops::serial::memory_sum(m.view(), m.cur, m.W, 5e-4, 0.2, m.g, m.out);
    }
    benchmark::DoNotOptimize(m.out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(1));
}

template <bool Omp>
void BM_fourier_samples(benchmark::State& state) {
  const auto a = RelaxationKernel::doi_edwards(static_cast<double>(state.range(0)));
  std::vector<double> omega(static_cast<std::size_t>(state.range(1)));
  for (std::size_t k = 0; k < omega.size(); ++k) omega[k] = 1e-3 * std::pow(1e9, double(k) / omega.size());
  std::vector<std::complex<double>> out(omega.size());
  for (auto _ : state) {
    if constexpr (Omp) {
      loops::omp::fourier_samples(a.atoms(), 0, omega, out);
    } else {
      loops::serial::fourier_samples(a.atoms(), 0, omega, out);
    }
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(a.atoms().size() * omega.size()));
}

template <bool Omp>
void BM_product_convolve(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = RelaxationKernel::doi_edwards(100.0);
  std::vector<double> c(n), d(n), w(n), out(n);
  loops::serial::product_weights(a.atoms(), 0, 1e-3, c, d);
  for (std::size_t k = 0; k < n; ++k) w[k] = std::cos(3e-3 * static_cast<double>(k));
  for (auto _ : state) {
    if constexpr (Omp) {
      loops::omp::product_convolve(c, d, w, out);
    } else {
      loops::serial::product_convolve(c, d, w, out);
    }
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n / 2));
}

}  // namespace

BENCHMARK(BM_memory_sum<false>)->Name("memory_sum/serial")->Args({64, 1000})->Args({256, 4000});
BENCHMARK(BM_memory_sum<true>)->Name("memory_sum/omp")->Args({64, 1000})->Args({256, 4000});
BENCHMARK(BM_fourier_samples<false>)->Name("fourier_samples/serial")->Args({10000, 2000});
BENCHMARK(BM_fourier_samples<true>)->Name("fourier_samples/omp")->Args({10000, 2000});
BENCHMARK(BM_product_convolve<false>)->Name("product_convolve/serial")->Arg(2000)->Arg(8000);
BENCHMARK(BM_product_convolve<true>)->Name("product_convolve/omp")->Arg(2000)->Arg(8000);

BENCHMARK_MAIN();

#pragma once

// Hot loops, in two builds with identical per-element arithmetic: `serial` is the reference,
// `omp` parallelizes only over the outer (output) index, so both give bit-identical results.

#include <complex>
#include <span>

#include "kbkz/damping.hpp"
#include "kbkz/measure.hpp"

namespace kbkz::loops {

/// Row-major history: rows[j * stride + i], j = 0..n_rows-1.
struct HistoryView {
  const double* data = nullptr;
  std::size_t n_rows = 0;
  std::size_t stride = 0;
  const double* row(std::size_t j) const { return data + j * stride; }
};

namespace serial {
#include "kbkz/detail/loops_api.inc"
}
namespace omp {
#include "kbkz/detail/loops_api.inc"
}

/// psi0(z) = (z - 1 + e^{-z}) / z^2, psi1(z) = (1 - e^{-z} - z e^{-z}) / z^2 (series for small z).
double psi0(double z);
double psi1(double z);

/// Thread count used by the omp variants (0 = OpenMP default).
void set_threads(int n);
int threads();

}  // namespace kbkz::loops

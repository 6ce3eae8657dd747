#include <algorithm>
#include <cmath>
#include <vector>

#include "kbkz/errors.hpp"
#include "kbkz/loops.hpp"

namespace kbkz::loops {

double psi0(double z) {
  if (z < 1.0) {
    // sum_{n>=0} (-z)^n / (n+2)!
    double term = 0.5, s = 0.5;
    for (int n = 1; n < 25; ++n) {
      term *= -z / (n + 2);
      s += term;
    }
    return s;
  }
  return (z - 1.0 + std::exp(-z)) / (z * z);
}

double psi1(double z) {
  if (z < 1.0) {
    // sum_{n>=0} (-z)^n (n+1) / (n+2)!
    double f = 0.5, s = 0.5;
    for (int n = 1; n < 25; ++n) {
      f *= -z / (n + 2);
      s += f * (n + 1);
    }
    return s;
  }
  const double e = std::exp(-z);
  return (1.0 - e - z * e) / (z * z);
}

namespace serial {
#define KBKZ_PARALLEL_FOR
#include "loops_impl.inc"
#undef KBKZ_PARALLEL_FOR
}  // namespace serial

}  // namespace kbkz::loops

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "kbkz/errors.hpp"
#include "kbkz/loops.hpp"

namespace kbkz::loops {

namespace {
int g_threads = 0;
}

void set_threads(int n) {
  g_threads = n < 0 ? 0 : n;
  if (g_threads > 0) omp_set_num_threads(g_threads);
}

int threads() { return g_threads > 0 ? g_threads : omp_get_max_threads(); }

namespace omp {
#define KBKZ_PARALLEL_FOR _Pragma("omp parallel for schedule(static)")
#include "loops_impl.inc"
#undef KBKZ_PARALLEL_FOR
}  // namespace omp

}  // namespace kbkz::loops

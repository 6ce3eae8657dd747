#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <string_view>

namespace kbkz {

// Neumaier's variant of Kahan summation. Order of add() calls fixes the result bit-for-bit.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x)) {
      c_ += (sum_ - t) + x;
    } else {
      c_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + c_; }

 private:
  double sum_ = 0.0;
  double c_ = 0.0;
};

// FNV-1a, 64 bit.
class Fnv1a {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= b[i];
      h_ *= 0x100000001b3ULL;
    }
  }
  void real(double x) {
    if (x == 0.0) x = 0.0;  // fold -0
    std::uint64_t u;
    std::memcpy(&u, &x, sizeof u);
    bytes(&u, sizeof u);
  }
  void text(std::string_view s) { bytes(s.data(), s.size()); }
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

inline constexpr double pi = 3.14159265358979323846264338327950288;

}  // namespace kbkz

#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "kbkz/measure.hpp"

namespace kbkz {

struct KernelOptions {
  double truncation = std::numeric_limits<double>::infinity();  // keep atoms with rate < n
  double weight_cutoff = 1e-14;   // generated families: materialize atoms down to this weight
  double tail_tolerance = 1e-12;  // absolute bound required of the analytic tail
};

/// a(t) = sum_{rate < n} w exp(-rate t), atoms sorted by ascending rate.
///
/// Generated families are materialized at construction. When the truncation is beyond the
/// materialized range, an analytic tail (integral comparison) is added for order 0 and
/// bounded for higher orders.
class RelaxationKernel {
 public:
  explicit RelaxationKernel(const MeasureSpec& measure, KernelOptions options = {});

  static RelaxationKernel exponential(double rate = 1.0, double weight = 1.0);
  static RelaxationKernel doi_edwards(double truncation, double gamma = 0.25);

  /// (d/dt)^order a(t); t > 0 or t == 0 (right limit). order in 0..3.
  double eval(double t, int order = 0) const;
  void eval_many(std::span<const double> t, int order, std::span<double> out) const;

  /// Bound on |tail contribution| to eval(t, order); zero without a tail.
  double tail_bound(double t, int order) const;

  std::span<const Atom> atoms() const { return atoms_; }
  const MeasureSpec& measure() const { return measure_; }
  double truncation() const { return options_.truncation; }
  bool truncated() const { return !has_tail_; }
  bool has_tail() const { return has_tail_; }
  double min_rate() const { return atoms_.front().rate; }
  double max_rate() const { return atoms_.back().rate; }

  double at_zero() const { return a0_; }              // a(0+)
  double l1_norm() const { return l1_; }              // int a
  double derivative_l1_norm() const { return a0_; }   // int |a'| = a(0+) for decreasing a -> 0

  /// Stable identity of (atoms, truncation) used to pair kernels with derived operators.
  std::uint64_t fingerprint() const { return fingerprint_; }

  RelaxationKernel scaled(double c) const;
  std::string describe() const;

 private:
  RelaxationKernel() = default;
  void finalize();
  double tail_value(double t) const;

  MeasureSpec measure_;
  KernelOptions options_;
  std::vector<Atom> atoms_;
  std::vector<double> suffix_max_weight_;
  bool has_tail_ = false;
  double tail_first_odd_ = 0.0;  // first (2k+1) not materialized
  double tail_last_odd_ = 0.0;   // last (2k+1) below sqrt(n); inf when untruncated
  double tail_scale_ = 1.0;
  double a0_ = 0.0;
  double l1_ = 0.0;
  std::uint64_t fingerprint_ = 0;
};

/// abar = int |a'| r0 and psi(t) = |a'(t)| r0(t) + 2 int_t^inf |a'| r0, r0(s) = min(s, sqrt s),
/// in closed form per atom (incomplete gamma functions, split at s = 1).
struct MemoryBound {
  double abar = 0.0;
  double psi_l1 = 0.0;  // int_0^inf psi = abar + 2 int s |a'(s)| r0(s) ds
  std::vector<double> t;
  std::vector<double> psi;
};

/// Requires a truncated kernel.
MemoryBound psi_and_abar(const RelaxationKernel& kernel, std::span<const double> t);

/// int_t^inf |a'(s)| r0(s) ds.
double abs_derivative_r0_tail(const RelaxationKernel& kernel, double t);

/// Samples (t, a, a', a'') on [0, t_end] for plotting.
std::string kernel_csv(const RelaxationKernel& kernel, double t_end, int samples);

}  // namespace kbkz

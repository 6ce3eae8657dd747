#pragma once

#include <functional>
#include <span>
#include <vector>

#include "kbkz/relaxation_kernel.hpp"

namespace kbkz {

/// Samples on t_k = k dt, k = 0..n-1; zero for t < 0 by convention (never stored).
struct TimeSignal {
  double dt = 0.0;
  std::vector<double> values;

  TimeSignal() = default;
  TimeSignal(double step, std::vector<double> v);
  static TimeSignal sample(double step, std::size_t n, const std::function<double(double)>& f);

  std::size_t size() const { return values.size(); }
  double t(std::size_t k) const { return dt * static_cast<double>(k); }
  double t_end() const { return t(size() - 1); }
  double operator[](std::size_t k) const { return values[k]; }
  double& operator[](std::size_t k) { return values[k]; }
  /// Throws UsageError unless dt > 0 and size >= 2.
  void validate() const;
};

/// Trapezoid (b*w)(t_k) = int_0^{t_k} b(t_k - s) w(s) ds with b sampled on w's grid.
TimeSignal convolve(const TimeSignal& b, const TimeSignal& w);

/// (b^(order) * w) for an atomic kernel, exact for the piecewise-linear interpolant of w.
TimeSignal convolve(const RelaxationKernel& b, const TimeSignal& w, int order = 0);

/// Q(w, t, b) = int_0^t w (b*w) ds by the trapezoid rule (t = w.t_end()).
double qform(const TimeSignal& w, const TimeSignal& b);
double qform(const TimeSignal& w, const RelaxationKernel& b);

/// Q for the piecewise-linear interpolant of w, exact up to rounding (per-interval Gauss rule
/// on a smooth integrand). Used to cross-check the frequency-domain form.
double qform_exact(const TimeSignal& w, const RelaxationKernel& b);

/// Q(w, t, b) = int_0^t int_Omega w (b*w) dx ds for a space-time field stored as
/// field[k * n_x + i]; trapezoid in space first, then in time.
double qform_field(std::span<const double> field, std::size_t n_x, double dx, double dt,
                   const RelaxationKernel& b);

/// (Delta_h w)(t_k) = w(t_k + h) - w(t_k) for the k with t_k + h on the grid.
/// h must be a positive integer multiple of dt.
TimeSignal delta_h(const TimeSignal& w, double h);

/// Second-order first derivative: centered inside, one-sided three-point at both ends.
TimeSignal derivative(const TimeSignal& w);

double norm_l1(const TimeSignal& w);
double norm_l2(const TimeSignal& w);
double norm_linf(const TimeSignal& w);

struct InversionOperator;

struct InversionResult {
  TimeSignal w;
  double forward_residual = 0.0;  // ||b*w - l||_L2 / max(||l||_L2, tiny)
};

/// w = l'/b(0+) + B1*l' + B2*l. Requires l(0) = 0 (to tol * ||l||_inf) and the operator's grid.
InversionResult invert(const InversionOperator& op, const TimeSignal& l, double tol = 1e-10);
/// Same with l' supplied (e.g. from an independent formula) instead of differenced.
InversionResult invert(const InversionOperator& op, const TimeSignal& l, const TimeSignal& dl,
                       double tol = 1e-10);

}  // namespace kbkz

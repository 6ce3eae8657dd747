#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kbkz/damping.hpp"
#include "kbkz/relaxation_kernel.hpp"

namespace kbkz {

struct InversionOperator;

/// Nodes x_i = i dx, i = 0..N+1, dx = L/(N+1); v vanishes at i = 0 and i = N+1.
struct SpatialGrid {
  double length = 1.0;
  int interior = 64;

  double dx() const { return length / (interior + 1); }
  std::size_t nodes() const { return static_cast<std::size_t>(interior) + 2; }
  double x(std::size_t i) const { return dx() * static_cast<double>(i); }
  /// Throws UsageError unless L > 0 and N >= 8.
  void validate() const;
};

using InitialData = std::function<double(double x)>;
using Forcing = std::function<double(double x, double t)>;

/// Time history of (v, u) on the grid; level j is t_j = j dt. The midpoint strain
/// U_{i+1/2} = (u_{i+1} - u_i)/dx is stored alongside, since the memory term acts on it.
class ShearState {
 public:
  ShearState(SpatialGrid grid, double dt, std::span<const double> v0);

  const SpatialGrid& grid() const { return grid_; }
  double dt() const { return dt_; }
  std::size_t levels() const { return levels_; }
  std::size_t level() const { return levels_ - 1; }
  double time(std::size_t j) const { return dt_ * static_cast<double>(j); }
  double time() const { return time(level()); }

  std::span<const double> v(std::size_t j) const { return {v_.data() + j * nodes(), nodes()}; }
  std::span<const double> u(std::size_t j) const { return {u_.data() + j * nodes(), nodes()}; }
  std::span<const double> strain(std::size_t j) const {
    return {U_.data() + j * mids(), mids()};
  }
  /// All levels, row-major.
  std::span<const double> v_data() const { return {v_.data(), levels_ * nodes()}; }
  std::span<const double> u_data() const { return {u_.data(), levels_ * nodes()}; }
  std::span<const double> strain_data() const { return {U_.data(), levels_ * mids()}; }

  std::size_t nodes() const { return grid_.nodes(); }
  std::size_t mids() const { return grid_.nodes() - 1; }

  /// Appends a level; the caller guarantees u_{k+1} = u_k + dt/2 (v_k + v_{k+1}).
  void push(std::span<const double> v, std::span<const double> u);
  void reserve(std::size_t levels);

 private:
  SpatialGrid grid_;
  double dt_;
  std::size_t levels_ = 0;
  std::vector<double> v_, u_, U_;
};

/// Midpoint strain of a nodal displacement.
void midpoint_strain(std::span<const double> u, double dx, std::span<double> out);

/// Product-trapezoid weights of a' for the memory integral, grown on demand.
/// Interior lag m >= 1: c_m + d_{m-1}; endpoint (lag k at level k): d_{k-1}.
class MemoryWeights {
 public:
  MemoryWeights(const RelaxationKernel& kernel, double dt);
  void ensure(std::size_t max_lag);
  std::span<const double> interior() const { return W_; }
  double endpoint(std::size_t k) const { return k == 0 ? 0.0 : d_[k - 1]; }
  double dt() const { return dt_; }

 private:
  const RelaxationKernel* kernel_;
  double dt_;
  std::vector<double> c_, d_, W_;
};

enum class BreachPolicy { abort, clamp };

struct SolverOptions {
  double dt = 0.0;         // 0 = stable_dt(...)
  double c_safety = 0.5;
  BreachPolicy breach = BreachPolicy::abort;
  bool fast_path = false;  // exponential-sum recursion for polynomial g
  double growth_factor = 100.0;   // divergence: one step beyond this x the running max of |v|
  double overflow_factor = 1e6;  // divergence: |v| beyond this x (|v0| + t sup|f|)
};

/// c dx / sqrt(|g'(0)| a(0)): the wave speed of the linearization. Atoms with rate dt >> 1
/// only reach lag one under product integration and add a viscosity ~ w dt, which the same
/// bound covers.
double stable_dt(const SpatialGrid& grid, const RelaxationKernel& kernel,
                 const DampingFunction& g, double c_safety = 0.5);

enum class Termination { completed, breach, divergence };
const char* to_string(Termination t);

struct RunResult {
  Termination termination = Termination::completed;
  double t_final = 0.0;
  std::string message;
  bool conforming = true;  // false once a breach was clamped
  std::optional<double> breach_x, breach_t, breach_value;
};

/// Explicit Heun stepping of v_t = d/dx M + f with u_t = v (trapezoid), where
/// M(t) = int_0^inf a'(s) g(u(t) - u(t-s))_x ds and the history is zero for t < 0.
class Solver {
 public:
  Solver(SpatialGrid grid, RelaxationKernel kernel, DampingFunction g, const InitialData& v0,
         Forcing f, SolverOptions options = {});

  /// One step. Throws HyperbolicityBreach (abort policy) or DivergenceError; the state keeps
  /// the last accepted level either way.
  void step();
  /// Steps until t_end (within dt/2); breaches and divergence end the run with a status.
  RunResult run(double t_end, const std::function<void(const Solver&)>& on_step = {});

  const ShearState& state() const { return state_; }
  const SpatialGrid& grid() const { return state_.grid(); }
  const RelaxationKernel& kernel() const { return kernel_; }
  const DampingFunction& damping() const { return g_; }
  const DampingConstants& constants() const { return constants_; }
  const Forcing& forcing() const { return f_; }
  double dt() const { return state_.dt(); }
  bool conforming() const { return conforming_; }
  const MemoryWeights& weights() const { return weights_; }

  /// d/dx M at the nodes for the latest level (zero at the boundary nodes).
  std::vector<double> memory_rhs() const;

 private:
  void rhs(std::span<const double> U_cur, std::size_t history, double t, std::span<double> out);
  void midpoint_memory(std::span<const double> U_cur, std::size_t history, double t,
                       std::span<double> M);
  void fast_memory(std::span<const double> U_cur, std::size_t history, double t,
                   std::span<double> M);
  void advance_fast_sums();
  void check_divergence(std::span<const double> v, double t);
  void check_window(std::span<const double> U, double t);

  RelaxationKernel kernel_;
  DampingFunction g_;
  DampingConstants constants_;
  Forcing f_;
  SolverOptions options_;
  ShearState state_;
  MemoryWeights weights_;
  bool conforming_ = true;
  std::optional<double> breach_x_, breach_t_, breach_value_;
  double max_v_ = 0.0, max_f_ = 0.0, v0_max_ = 0.0;
  std::vector<double> U_min_, U_max_;  // running extrema of the strain history, per midpoint
  // Fast path: S[a][p][i] = sum_{0<j<k} e^{-rate_a (k-1-j) dt} U_j[i]^p at level k.
  std::vector<double> fast_S_, fast_lambda_, fast_decay_;
  std::size_t fast_powers_ = 0;
};

/// d/dx M for the latest level of a state by direct summation (weights built here).
/// Throws HyperbolicityBreach when the latest strain leaves the window of g.
std::vector<double> memory_rhs(const ShearState& state, const RelaxationKernel& kernel,
                               const DampingFunction& g);

/// sigma at the nodes for level k: g-memory of the centered nodal strain.
std::vector<double> compute_stress(const ShearState& state, const RelaxationKernel& kernel,
                                   const DampingFunction& g, std::size_t k);

// ---- remainder and reconstruction ---------------------------------------------------------

/// Nodal u_x, u_xx, v_x, v_xx (second order, one-sided at the ends) for every level,
/// rows [j * nodes + i].
struct NodalHistory {
  std::size_t levels = 0, nodes = 0;
  std::vector<double> ux, uxx, vx, vxx;
  std::span<const double> row(const std::vector<double>& f, std::size_t j) const {
    return {f.data() + j * nodes, nodes};
  }
};
NodalHistory nodal_history(const ShearState& state);

/// First (order 1) or second (order 2) derivative along a uniform grid, second order,
/// one-sided at the ends.
void grid_derivative(std::span<const double> f, double h, int order, std::span<double> out);

/// The memory remainder and its time derivative at any stored level.
class RemainderEvaluator {
 public:
  RemainderEvaluator(const ShearState& state, const RelaxationKernel& kernel,
                     const DampingFunction& g);
  /// G(x, t_k) = int_0^inf a'(s) [g'(ubar_x) - g'(0)] ubar_xx ds, ubar = u(t) - u(t-s).
  std::vector<double> G(std::size_t k) const;
  /// G_t = int a'(s) { g''(ubar_x) vbar_x ubar_xx + [g'(ubar_x) - g'(0)] vbar_xx } ds,
  /// vbar = v(t) - v(t-s) with v = 0 before t = 0.
  std::vector<double> Gt(std::size_t k) const;
  const NodalHistory& history() const { return h_; }
  bool vanishes() const { return linear_; }

 private:
  const ShearState* state_;
  const RelaxationKernel* kernel_;
  const DampingFunction* g_;
  NodalHistory h_;
  MemoryWeights W_;
  bool linear_;
};

std::vector<double> remainder_G(const ShearState& state, const RelaxationKernel& kernel,
                                const DampingFunction& g, std::size_t k);
std::vector<double> remainder_Gt(const ShearState& state, const RelaxationKernel& kernel,
                                 const DampingFunction& g, std::size_t k);

/// Time derivative (order 1 or 2) of a field stored as rows [j * nodes + i].
std::vector<double> time_derivative(std::span<const double> field, std::size_t nodes, double dt,
                                    int order);

/// v_xx(x, t_j) for every level, as rows [j * nodes + i], from
/// g'(0) v_xx = l'/a(0) + B1*l' + B2*l with l = f + G - v_t, l' = f_t + G_t - v_tt.
/// Throws UsageError unless op was built from `kernel` on the state's dt with n >= levels.
std::vector<double> reconstruct_vxx(const ShearState& state, const RelaxationKernel& kernel,
                                    const InversionOperator& op, const DampingFunction& g,
                                    const Forcing& f);

/// u_xx(x, t_j) for every level, from l = int_0^t (f + G) - v + v0, l' = f + G - v_t.
std::vector<double> reconstruct_uxx(const ShearState& state, const RelaxationKernel& kernel,
                                    const InversionOperator& op, const DampingFunction& g,
                                    const Forcing& f);

}  // namespace kbkz

#include "kbkz/solver.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "kbkz/errors.hpp"
#include "kbkz/loops.hpp"

namespace kbkz {

void SpatialGrid::validate() const {
  if (!(length > 0.0) || !std::isfinite(length)) throw UsageError("grid: length must be positive");
  if (interior < 8) throw UsageError(fmt::format("grid: need N >= 8 interior nodes, got {}", interior));
}

// ---- state ------------------------------------------------------------------------------

ShearState::ShearState(SpatialGrid grid, double dt, std::span<const double> v0)
    : grid_(grid), dt_(dt) {
  grid_.validate();
  if (!(dt > 0.0) || !std::isfinite(dt)) throw UsageError("state: dt must be positive");
  if (v0.size() != nodes()) throw UsageError("state: v0 has the wrong number of nodes");
  double scale = 0.0;
  for (double x : v0) {
    if (!std::isfinite(x)) throw DomainError("state: v0 is not finite");
    scale = std::max(scale, std::fabs(x));
  }
  const double edge = std::max(std::fabs(v0.front()), std::fabs(v0.back()));
  if (edge > 1e-12 * std::max(1.0, scale)) {
    throw DomainError(fmt::format("state: v0 = {:.3g} on the boundary (must vanish)", edge));
  }
  std::vector<double> v(v0.begin(), v0.end());
  v.front() = v.back() = 0.0;
  const std::vector<double> u(nodes(), 0.0);
  push(v, u);
}

void midpoint_strain(std::span<const double> u, double dx, std::span<double> out) {
  if (out.size() + 1 != u.size()) throw UsageError("midpoint_strain: size mismatch");
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (u[i + 1] - u[i]) / dx;
}

void ShearState::reserve(std::size_t levels) {
  v_.reserve(levels * nodes());
  u_.reserve(levels * nodes());
  U_.reserve(levels * mids());
}

void ShearState::push(std::span<const double> v, std::span<const double> u) {
  if (v.size() != nodes() || u.size() != nodes()) throw UsageError("state: level size mismatch");
  v_.insert(v_.end(), v.begin(), v.end());
  u_.insert(u_.end(), u.begin(), u.end());
  U_.resize(U_.size() + mids());
  midpoint_strain(u, grid_.dx(), std::span<double>(U_).last(mids()));
  ++levels_;
}

// ---- weights ----------------------------------------------------------------------------

MemoryWeights::MemoryWeights(const RelaxationKernel& kernel, double dt) : kernel_(&kernel), dt_(dt) {
  if (kernel.has_tail()) throw UsageError("memory weights: kernel must be truncated");
}

void MemoryWeights::ensure(std::size_t max_lag) {
  if (W_.size() > max_lag) return;
  std::size_t n = std::max<std::size_t>(64, W_.size());
  while (n <= max_lag) n *= 2;
  c_.assign(n, 0.0);
  d_.assign(n, 0.0);
  loops::omp::product_weights(kernel_->atoms(), 1, dt_, c_, d_);
  W_.assign(n, 0.0);
  W_[0] = c_[0];
  for (std::size_t m = 1; m < n; ++m) W_[m] = c_[m] + d_[m - 1];
}

// ---- solver -----------------------------------------------------------------------------

double stable_dt(const SpatialGrid& grid, const RelaxationKernel& kernel, const DampingFunction& g,
                 double c_safety) {
  grid.validate();
  if (!(c_safety > 0.0)) throw UsageError("stable_dt: c_safety must be positive");
  const double slope = std::fabs(g.slope_at_zero());
  const double dx = grid.dx();
  if (slope == 0.0) return c_safety * dx;
  return c_safety * dx / std::sqrt(slope * kernel.at_zero());
}

const char* to_string(Termination t) {
  switch (t) {
    case Termination::completed: return "completed";
    case Termination::breach: return "hyperbolicity_breach";
    case Termination::divergence: return "divergence";
  }
  return "unknown";
}

namespace {

std::vector<double> sample_v0(const SpatialGrid& grid, const InitialData& v0) {
  grid.validate();
  std::vector<double> v(grid.nodes(), 0.0);
  if (v0) {
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = v0(grid.x(i));
  }
  return v;
}

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

Solver::Solver(SpatialGrid grid, RelaxationKernel kernel, DampingFunction g, const InitialData& v0,
               Forcing f, SolverOptions options)
    : kernel_(std::move(kernel)),
      g_(std::move(g)),
      constants_(estimate_damping_constants(g_)),
      f_(std::move(f)),
      options_(options),
      state_(grid,
             options.dt > 0.0 ? options.dt : stable_dt(grid, kernel_, g_, options.c_safety),
             sample_v0(grid, v0)),
      weights_(kernel_, state_.dt()) {
  if (!(options_.growth_factor > 1.0)) throw UsageError("solver: growth_factor must exceed 1");
  if (options_.breach == BreachPolicy::clamp && std::isfinite(constants_.theta)) {
    g_ = g_.clamped(constants_.theta);
  }
  if (options_.fast_path) {
    if (!g_.is_polynomial()) throw UsageError("solver: the fast path needs a polynomial g");
    const auto atoms = kernel_.atoms();
    const double h = state_.dt();
    fast_powers_ = g_.coefficients().size();
    for (const auto& a : atoms) {
      const double z = a.rate * h;
      fast_lambda_.push_back(-a.rate * a.weight * h * (loops::psi0(z) * std::exp(-z) + loops::psi1(z)));
      fast_decay_.push_back(std::exp(-z));
    }
    fast_S_.assign(atoms.size() * fast_powers_ * state_.mids(), 0.0);
  }
  U_min_.assign(state_.mids(), 0.0);
  U_max_.assign(state_.mids(), 0.0);
  if (!(options_.overflow_factor > 1.0)) throw UsageError("solver: overflow_factor must exceed 1");
  for (std::size_t i = 0; i < state_.nodes(); ++i) {
    max_v_ = std::max(max_v_, std::fabs(state_.v(0)[i]));
    v0_max_ = max_v_;
    if (f_) max_f_ = std::max(max_f_, std::fabs(f_(grid.x(i), 0.0)));
  }
}

void Solver::midpoint_memory(std::span<const double> U_cur, std::size_t history, double t,
                             std::span<double> M) {
  if (options_.fast_path) {
    fast_memory(U_cur, history, t, M);
    return;
  }
  weights_.ensure(history + 1);
  const loops::HistoryView view{state_.strain_data().data(), history, state_.mids()};
  loops::omp::memory_sum(view, U_cur, weights_.interior(), weights_.endpoint(history),
                         kernel_.eval(t), g_, M);
}

// Sum over 0 < j < history from the running exponential sums; rows 0 and the a(t) tail directly.
void Solver::fast_memory(std::span<const double> U_cur, std::size_t history, double t,
                         std::span<double> M) {
  weights_.ensure(history + 1);
  const std::size_t na = fast_lambda_.size(), np = fast_powers_, nm = state_.mids();
  // fast_S_ holds S(levels - 1); the corrector needs one recursion step ahead.
  const std::size_t stored = state_.levels() - 1;
  if (history != stored && history != stored + 1) {
    throw UsageError("fast path: history does not match the running sums");
  }
  const bool ahead = history == stored + 1 && history >= 2;
  std::vector<double> S;
  if (ahead) {
    S = fast_S_;
    const auto last = state_.strain(history - 1);
    for (std::size_t a = 0; a < na; ++a) {
      for (std::size_t p = 0; p < np; ++p) {
        double* s = S.data() + (a * np + p) * nm;
        for (std::size_t i = 0; i < nm; ++i) s[i] = fast_decay_[a] * s[i] + std::pow(last[i], p);
      }
    }
  }
  const std::vector<double>& src = ahead ? S : fast_S_;
  const bool empty = history <= 1;
  const auto c = g_.coefficients();
  const double w0 = weights_.endpoint(history);
  const double a_now = kernel_.eval(t);
  const auto U0 = state_.strain(0);
  std::vector<double> T(np);
  for (std::size_t i = 0; i < nm; ++i) {
    for (std::size_t p = 0; p < np; ++p) {
      double s = 0.0;
      if (!empty) {
        for (std::size_t a = 0; a < na; ++a) s += fast_lambda_[a] * src[(a * np + p) * nm + i];
      }
      T[p] = s;
    }
    double acc = 0.0;
    for (std::size_t n = 0; n < np; ++n) {
      if (c[n] == 0.0) continue;
      double inner = 0.0;
      for (std::size_t p = 0; p <= n; ++p) {
        const double sign = p % 2 == 0 ? 1.0 : -1.0;
        inner += binomial(static_cast<int>(n), static_cast<int>(p)) *
                 std::pow(U_cur[i], static_cast<double>(n - p)) * sign * T[p];
      }
      acc += c[n] * inner;
    }
    if (history > 0) acc += w0 * g_(U_cur[i] - U0[i]);
    M[i] = acc - a_now * g_(U_cur[i]);
  }
}

void Solver::advance_fast_sums() {
  // Called after level k+1 was pushed: S(k+1) = decay S(k) + U_k^p (k >= 1).
  const std::size_t k = state_.levels() - 2;
  if (k == 0) return;
  const std::size_t na = fast_lambda_.size(), np = fast_powers_, nm = state_.mids();
  const auto last = state_.strain(k);
  for (std::size_t a = 0; a < na; ++a) {
    for (std::size_t p = 0; p < np; ++p) {
      double* s = fast_S_.data() + (a * np + p) * nm;
      for (std::size_t i = 0; i < nm; ++i) s[i] = fast_decay_[a] * s[i] + std::pow(last[i], p);
    }
  }
}

void Solver::rhs(std::span<const double> U_cur, std::size_t history, double t,
                 std::span<double> out) {
  std::vector<double> M(state_.mids());
  midpoint_memory(U_cur, history, t, M);
  const double dx = state_.grid().dx();
  out.front() = out.back() = 0.0;
  for (std::size_t i = 1; i + 1 < out.size(); ++i) out[i] = (M[i] - M[i - 1]) / dx;
  if (f_) {
    for (std::size_t i = 1; i + 1 < out.size(); ++i) out[i] += f_(state_.grid().x(i), t);
  }
}

std::vector<double> Solver::memory_rhs() const {
  return kbkz::memory_rhs(state_, kernel_, g_);
}

void Solver::check_divergence(std::span<const double> v, double t) {
  double m = 0.0;
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw DivergenceError(fmt::format("non-finite velocity at t = {:.6g}", t), state_.time());
    }
    m = std::max(m, std::fabs(x));
  }
  const double limit = options_.growth_factor * (max_v_ + 2.0 * dt() * max_f_);
  if (m > limit) {
    throw DivergenceError(
        fmt::format("velocity {:.3g} exceeds {:.3g} x the running maximum at t = {:.6g}", m,
                    options_.growth_factor, t),
        state_.time());
  }
  const double scale = v0_max_ + t * max_f_;
  if (m > options_.overflow_factor * scale) {
    throw DivergenceError(fmt::format("velocity {:.3g} exceeds {:.3g} x the data scale {:.3g} at "
                                      "t = {:.6g}",
                                      m, options_.overflow_factor, scale, t),
                          state_.time());
  }
}

// max_j |U - U_j| from the running extrema (U_0 = 0 included).
void Solver::check_window(std::span<const double> U, double t) {
  for (std::size_t i = 0; i < U.size(); ++i) {
    const double inc = std::max(U[i] - U_min_[i], U_max_[i] - U[i]);
    if (inc > constants_.theta) {
      const double x = (static_cast<double>(i) + 0.5) * grid().dx();
      if (options_.breach == BreachPolicy::abort) {
        throw HyperbolicityBreach(x, t, inc, constants_.theta);
      }
      if (conforming_) {
        conforming_ = false;
        breach_x_ = x;
        breach_t_ = t;
        breach_value_ = inc;
      }
    }
  }
}

void Solver::step() {
  const std::size_t k = state_.level();
  const std::size_t n = state_.nodes(), nm = state_.mids();
  const double h = dt(), t0 = state_.time(k), t1 = state_.time(k + 1);
  const auto vk = state_.v(k), uk = state_.u(k);
  if (f_) {
    for (std::size_t i = 0; i < n; ++i) max_f_ = std::max(max_f_, std::fabs(f_(grid().x(i), t1)));
  }

  std::vector<double> F0(n), F1(n), v1(n), u1(n), U1(nm);
  rhs(state_.strain(k), k, t0, F0);
  for (std::size_t i = 1; i + 1 < n; ++i) v1[i] = vk[i] + h * F0[i];
  check_divergence(v1, t1);
  for (std::size_t i = 0; i < n; ++i) u1[i] = uk[i] + 0.5 * h * (vk[i] + v1[i]);
  midpoint_strain(u1, grid().dx(), U1);
  check_window(U1, t1);

  rhs(U1, k + 1, t1, F1);
  for (std::size_t i = 1; i + 1 < n; ++i) v1[i] = vk[i] + 0.5 * h * (F0[i] + F1[i]);
  v1.front() = v1.back() = 0.0;
  check_divergence(v1, t1);
  for (std::size_t i = 0; i < n; ++i) u1[i] = uk[i] + 0.5 * h * (vk[i] + v1[i]);
  midpoint_strain(u1, grid().dx(), U1);

  check_window(U1, t1);

  state_.push(v1, u1);
  for (std::size_t i = 0; i < nm; ++i) {
    U_min_[i] = std::min(U_min_[i], U1[i]);
    U_max_[i] = std::max(U_max_[i], U1[i]);
  }
  for (double x : v1) max_v_ = std::max(max_v_, std::fabs(x));
  if (options_.fast_path) advance_fast_sums();
}

RunResult Solver::run(double t_end, const std::function<void(const Solver&)>& on_step) {
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw UsageError("run: t_end must be finite and >= 0");
  const auto steps = static_cast<std::size_t>(std::llround(t_end / dt()));
  state_.reserve(state_.levels() + steps);
  weights_.ensure(steps + 1);
  RunResult r;
  if (on_step && state_.level() == 0) on_step(*this);
  try {
    while (state_.level() < steps) {
      step();
      if (on_step) on_step(*this);
    }
  } catch (const HyperbolicityBreach& e) {
    r.termination = Termination::breach;
    r.message = e.what();
    r.breach_x = e.x();
    r.breach_t = e.t();
    r.breach_value = e.value();
  } catch (const DivergenceError& e) {
    r.termination = Termination::divergence;
    r.message = e.what();
  }
  r.t_final = state_.time();
  r.conforming = conforming_;
  if (!conforming_ && r.termination == Termination::completed) {
    r.breach_x = breach_x_;
    r.breach_t = breach_t_;
    r.breach_value = breach_value_;
    r.message = "window breached and clamped (non-conforming)";
  }
  return r;
}

// ---- free functions ---------------------------------------------------------------------

std::vector<double> memory_rhs(const ShearState& state, const RelaxationKernel& kernel,
                               const DampingFunction& g) {
  const std::size_t k = state.level();
  {
    const double theta = estimate_damping_constants(g).theta;
    std::vector<double> inc(state.mids());
    const loops::HistoryView view{state.strain_data().data(), k, state.mids()};
    loops::omp::max_increment(view, state.strain(k), inc);
    for (std::size_t i = 0; i < inc.size(); ++i) {
      if (inc[i] > theta) {
        throw HyperbolicityBreach((static_cast<double>(i) + 0.5) * state.grid().dx(), state.time(k),
                                  inc[i], theta);
      }
    }
  }
  MemoryWeights W(kernel, state.dt());
  W.ensure(k + 1);
  std::vector<double> M(state.mids()), out(state.nodes(), 0.0);
  const loops::HistoryView view{state.strain_data().data(), k, state.mids()};
  loops::omp::memory_sum(view, state.strain(k), W.interior(), W.endpoint(k),
                         kernel.eval(state.time(k)), g, M);
  const double dx = state.grid().dx();
  for (std::size_t i = 1; i + 1 < out.size(); ++i) out[i] = (M[i] - M[i - 1]) / dx;
  return out;
}

}  // namespace kbkz

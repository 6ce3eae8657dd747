#include <fmt/format.h>

#include <cmath>

#include "kbkz/errors.hpp"
#include "kbkz/loops.hpp"
#include "kbkz/solver.hpp"
#include "kbkz/spectral.hpp"
#include "kbkz/volterra.hpp"

namespace kbkz {

void grid_derivative(std::span<const double> f, double h, int order, std::span<double> out) {
  const std::size_t n = f.size();
  if (out.size() != n || n < 4) throw UsageError("grid_derivative: need at least four samples");
  if (order == 1) {
    out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
    for (std::size_t i = 1; i + 1 < n; ++i) out[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
    out[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
  } else if (order == 2) {
    const double h2 = h * h;
    out[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h2;
    for (std::size_t i = 1; i + 1 < n; ++i) out[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) / h2;
    out[n - 1] = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) / h2;
  } else {
    throw DomainError("grid_derivative: order must be 1 or 2");
  }
}

NodalHistory nodal_history(const ShearState& state) {
  NodalHistory h;
  h.levels = state.levels();
  h.nodes = state.nodes();
  const std::size_t size = h.levels * h.nodes;
  h.ux.resize(size);
  h.uxx.resize(size);
  h.vx.resize(size);
  h.vxx.resize(size);
  const double dx = state.grid().dx();
  for (std::size_t j = 0; j < h.levels; ++j) {
    const std::size_t o = j * h.nodes;
    std::span<double> ux(h.ux.data() + o, h.nodes), uxx(h.uxx.data() + o, h.nodes);
    std::span<double> vx(h.vx.data() + o, h.nodes), vxx(h.vxx.data() + o, h.nodes);
    grid_derivative(state.u(j), dx, 1, ux);
    grid_derivative(state.u(j), dx, 2, uxx);
    grid_derivative(state.v(j), dx, 1, vx);
    grid_derivative(state.v(j), dx, 2, vxx);
  }
  return h;
}

std::vector<double> time_derivative(std::span<const double> field, std::size_t nodes, double dt,
                                    int order) {
  if (nodes == 0 || field.size() % nodes != 0) throw UsageError("time_derivative: bad shape");
  const std::size_t levels = field.size() / nodes;
  std::vector<double> out(field.size(), 0.0);
  if (levels < 4) throw UsageError("time_derivative: need at least four levels");
  std::vector<double> col(levels), d(levels);
  for (std::size_t i = 0; i < nodes; ++i) {
    for (std::size_t j = 0; j < levels; ++j) col[j] = field[j * nodes + i];
    grid_derivative(col, dt, order, d);
    for (std::size_t j = 0; j < levels; ++j) out[j * nodes + i] = d[j];
  }
  return out;
}

std::vector<double> compute_stress(const ShearState& state, const RelaxationKernel& kernel,
                                   const DampingFunction& g, std::size_t k) {
  if (k >= state.levels()) throw UsageError("compute_stress: level not stored");
  const std::size_t n = state.nodes();
  std::vector<double> ux(k * n), cur(n), out(n);
  const double dx = state.grid().dx();
  for (std::size_t j = 0; j < k; ++j) grid_derivative(state.u(j), dx, 1, {ux.data() + j * n, n});
  grid_derivative(state.u(k), dx, 1, cur);
  MemoryWeights W(kernel, state.dt());
  W.ensure(k + 1);
  const loops::HistoryView view{ux.data(), k, n};
  loops::omp::memory_sum(view, cur, W.interior(), W.endpoint(k), kernel.eval(state.time(k)), g, out);
  return out;
}

// ---- remainder --------------------------------------------------------------------------

namespace {
bool is_linear(const DampingFunction& g) {
  if (!g.is_polynomial()) return false;
  const auto c = g.coefficients();
  for (std::size_t n = 2; n < c.size(); ++n) {
    if (c[n] != 0.0) return false;
  }
  return !g.is_clamped();
}
}  // namespace

RemainderEvaluator::RemainderEvaluator(const ShearState& state, const RelaxationKernel& kernel,
                                       const DampingFunction& g)
    : state_(&state),
      kernel_(&kernel),
      g_(&g),
      h_(nodal_history(state)),
      W_(kernel, state.dt()),
      linear_(is_linear(g)) {
  W_.ensure(state.levels() + 1);
}

std::vector<double> RemainderEvaluator::G(std::size_t k) const {
  if (k >= h_.levels) throw UsageError("remainder: level not stored");
  const std::size_t n = h_.nodes;
  std::vector<double> out(n, 0.0);
  if (linear_) return out;
  const loops::HistoryView U{h_.ux.data(), k, n}, U2{h_.uxx.data(), k, n};
  loops::omp::remainder_sum(U, h_.row(h_.ux, k), U2, h_.row(h_.uxx, k), W_.interior(),
                            W_.endpoint(k), kernel_->eval(state_->time(k)), *g_, out);
  return out;
}

std::vector<double> RemainderEvaluator::Gt(std::size_t k) const {
  if (k >= h_.levels) throw UsageError("remainder: level not stored");
  const std::size_t n = h_.nodes;
  std::vector<double> out(n, 0.0);
  if (linear_) return out;
  const auto W = W_.interior();
  const double w0 = W_.endpoint(k), a_now = kernel_->eval(state_->time(k));
  const double d0 = g_->derivative(0.0, 1);
  const double* ux = h_.ux.data();
  const double* uxx = h_.uxx.data();
  const double* vx = h_.vx.data();
  const double* vxx = h_.vxx.data();
  const DampingFunction& g = *g_;
  const std::ptrdiff_t nn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < nn; ++i) {
    const std::size_t c = k * n + static_cast<std::size_t>(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double w = j == 0 ? w0 : W[k - j];
      const std::size_t r = j * n + static_cast<std::size_t>(i);
      const Jet J = g.jet(ux[c] - ux[r]);
      acc += w * (J.d2 * (vx[c] - vx[r]) * (uxx[c] - uxx[r]) + (J.d1 - d0) * (vxx[c] - vxx[r]));
    }
    // s >= t: ubar = u(t), vbar = v(t).
    const Jet J = g.jet(ux[c]);
    out[i] = acc - a_now * (J.d2 * vx[c] * uxx[c] + (J.d1 - d0) * vxx[c]);
  }
  return out;
}

std::vector<double> remainder_G(const ShearState& state, const RelaxationKernel& kernel,
                                const DampingFunction& g, std::size_t k) {
  return RemainderEvaluator(state, kernel, g).G(k);
}

std::vector<double> remainder_Gt(const ShearState& state, const RelaxationKernel& kernel,
                                 const DampingFunction& g, std::size_t k) {
  return RemainderEvaluator(state, kernel, g).Gt(k);
}

// ---- reconstruction ---------------------------------------------------------------------

namespace {

void require_operator(const ShearState& state, const RelaxationKernel& kernel,
                      const InversionOperator& op) {
  if (op.kernel_fingerprint != kernel.fingerprint()) {
    throw UsageError("reconstruction: inversion operator was built for a different kernel");
  }
  if (std::fabs(op.dt - state.dt()) > 1e-12 * state.dt()) {
    throw UsageError(fmt::format("reconstruction: operator dt {:.17g} != state dt {:.17g}", op.dt,
                                 state.dt()));
  }
  if (op.n < state.levels()) throw UsageError("reconstruction: operator grid shorter than history");
  if (state.levels() < 4) throw UsageError("reconstruction: need at least four levels");
}

struct Residuals {
  std::vector<double> f, ft, G, Gt;  // rows [j * nodes + i]
};

Residuals residuals(const ShearState& state, const RelaxationKernel& kernel,
                    const DampingFunction& g, const Forcing& f) {
  const std::size_t n = state.nodes(), L = state.levels();
  Residuals r;
  r.f.assign(n * L, 0.0);
  r.G.assign(n * L, 0.0);
  r.Gt.assign(n * L, 0.0);
  if (f) {
    for (std::size_t j = 0; j < L; ++j) {
      for (std::size_t i = 0; i < n; ++i) r.f[j * n + i] = f(state.grid().x(i), state.time(j));
    }
  }
  r.ft = time_derivative(r.f, n, state.dt(), 1);
  const RemainderEvaluator rem(state, kernel, g);
  if (!rem.vanishes()) {
    for (std::size_t j = 0; j < L; ++j) {
      const auto G = rem.G(j), Gt = rem.Gt(j);
      std::copy(G.begin(), G.end(), r.G.begin() + j * n);
      std::copy(Gt.begin(), Gt.end(), r.Gt.begin() + j * n);
    }
  }
  return r;
}

std::vector<double> invert_columns(const ShearState& state, const InversionOperator& op,
                                   const std::vector<double>& l, const std::vector<double>& dl) {
  const std::size_t n = state.nodes(), L = state.levels();
  std::vector<double> out(n * L);
  TimeSignal ls(state.dt(), std::vector<double>(L)), ds(state.dt(), std::vector<double>(L));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < L; ++j) {
      ls[j] = l[j * n + i];
      ds[j] = dl[j * n + i];
    }
    const InversionResult w = invert(op, ls, ds);
    for (std::size_t j = 0; j < L; ++j) out[j * n + i] = w.w[j];
  }
  return out;
}

}  // namespace

std::vector<double> reconstruct_vxx(const ShearState& state, const RelaxationKernel& kernel,
                                    const InversionOperator& op, const DampingFunction& g,
                                    const Forcing& f) {
  require_operator(state, kernel, op);
  const std::size_t n = state.nodes(), L = state.levels();
  const Residuals r = residuals(state, kernel, g, f);
  const auto vt = time_derivative(state.v_data(), n, state.dt(), 1);
  const auto vtt = time_derivative(state.v_data(), n, state.dt(), 2);
  const double d0 = g.derivative(0.0, 1);
  std::vector<double> l(n * L), dl(n * L);
  for (std::size_t q = 0; q < n * L; ++q) {
    l[q] = (r.f[q] + r.G[q] - vt[q]) / d0;
    dl[q] = (r.ft[q] + r.Gt[q] - vtt[q]) / d0;
  }
  // (f + G - v_t)(x, 0) = 0 holds exactly for the equation; the one-sided difference only
  // approximates it.
  for (std::size_t i = 0; i < n; ++i) l[i] = 0.0;
  return invert_columns(state, op, l, dl);
}

std::vector<double> reconstruct_uxx(const ShearState& state, const RelaxationKernel& kernel,
                                    const InversionOperator& op, const DampingFunction& g,
                                    const Forcing& f) {
  require_operator(state, kernel, op);
  const std::size_t n = state.nodes(), L = state.levels();
  const Residuals r = residuals(state, kernel, g, f);
  const auto vt = time_derivative(state.v_data(), n, state.dt(), 1);
  const double d0 = g.derivative(0.0, 1);
  const double h = state.dt();
  std::vector<double> l(n * L, 0.0), dl(n * L);
  const auto v0 = state.v(0);
  for (std::size_t i = 0; i < n; ++i) {
    double integral = 0.0;
    for (std::size_t j = 0; j < L; ++j) {
      const std::size_t q = j * n + i;
      if (j > 0) {
        const std::size_t p = q - n;
        integral += 0.5 * h * (r.f[p] + r.G[p] + r.f[q] + r.G[q]);
      }
      l[q] = (integral - state.v(j)[i] + v0[i]) / d0;
      dl[q] = (r.f[q] + r.G[q] - vt[q]) / d0;
    }
    dl[i] = 0.0;
  }
  return invert_columns(state, op, l, dl);
}

}  // namespace kbkz

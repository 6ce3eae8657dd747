#include "kbkz/diagnostics.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "kbkz/errors.hpp"
#include "kbkz/numeric.hpp"

namespace kbkz {

double agmon_constant(double length) {
  if (!(length > 0.0)) throw UsageError("agmon_constant: length must be positive");
  return std::sqrt(std::max(2.0, 2.0 / length) + 1.0);
}

namespace {

double trap(std::span<const double> f, double h) {
  if (f.size() < 2) return 0.0;
  double s = 0.5 * (f.front() + f.back());
  for (std::size_t i = 1; i + 1 < f.size(); ++i) s += f[i];
  return h * s;
}

}  // namespace

void third_derivative(std::span<const double> f, double h, std::span<double> out) {
  const std::size_t n = f.size();
  if (n < 5) throw UsageError("third_derivative: need at least five samples");
  const double c = 1.0 / (2.0 * h * h * h);
  out[0] = c * (-5.0 * f[0] + 18.0 * f[1] - 24.0 * f[2] + 14.0 * f[3] - 3.0 * f[4]);
  out[1] = c * (-3.0 * f[0] + 10.0 * f[1] - 12.0 * f[2] + 6.0 * f[3] - f[4]);
  for (std::size_t i = 2; i + 2 < n; ++i) {
    out[i] = c * (f[i + 2] - 2.0 * f[i + 1] + 2.0 * f[i - 1] - f[i - 2]);
  }
  out[n - 2] = c * (3.0 * f[n - 1] - 10.0 * f[n - 2] + 12.0 * f[n - 3] - 6.0 * f[n - 4] + f[n - 5]);
  out[n - 1] = c * (5.0 * f[n - 1] - 18.0 * f[n - 2] + 24.0 * f[n - 3] - 14.0 * f[n - 4] + 3.0 * f[n - 5]);
}

namespace {

std::vector<double> sample_forcing(const SpatialGrid& grid, const Forcing& f, double dt,
                                   std::size_t levels) {
  const std::size_t n = grid.nodes();
  std::vector<double> out(n * levels, 0.0);
  if (!f) return out;
  for (std::size_t j = 0; j < levels; ++j) {
    const double t = dt * static_cast<double>(j);
    for (std::size_t i = 0; i < n; ++i) out[j * n + i] = f(grid.x(i), t);
  }
  return out;
}

bool within(double lhs, double rhs, double tol) { return lhs <= rhs * (1.0 + tol) + 1e-300; }

}  // namespace

InitialRates initial_rates(const ShearState& state, const RelaxationKernel& kernel,
                           const DampingFunction& g, const Forcing& f) {
  const std::size_t n = state.nodes();
  const double dx = state.grid().dx();
  const std::size_t levels = std::min<std::size_t>(state.levels(), 4);
  if (levels < 4) throw UsageError("initial_rates: need at least four levels");
  const auto fs = sample_forcing(state.grid(), f, state.dt(), levels);
  const auto ft = time_derivative(fs, n, state.dt(), 1);
  InitialRates r;
  r.vt.assign(fs.begin(), fs.begin() + static_cast<std::ptrdiff_t>(n));
  r.vxt.resize(n);
  grid_derivative(r.vt, dx, 1, r.vxt);
  std::vector<double> v0xx(n);
  grid_derivative(state.v(0), dx, 2, v0xx);
  const double c = -g.slope_at_zero() * kernel.at_zero();
  r.vtt.resize(n);
  for (std::size_t i = 0; i < n; ++i) r.vtt[i] = c * v0xx[i] + ft[i];
  // v is pinned at the ends for all t.
  r.vt.front() = r.vt.back() = r.vtt.front() = r.vtt.back() = 0.0;
  return r;
}

EnergySeries energy(const ShearState& state, const InitialRates* initial) {
  const std::size_t n = state.nodes(), L = state.levels();
  if (L < 4) throw UsageError("energy: need at least four stored levels");
  const double dx = state.grid().dx(), dt = state.dt();
  auto vt = time_derivative(state.v_data(), n, dt, 1);
  auto vtt = time_derivative(state.v_data(), n, dt, 2);
  if (initial) {
    if (initial->vt.size() != n || initial->vtt.size() != n || initial->vxt.size() != n) {
      throw UsageError("energy: initial rates have the wrong size");
    }
    std::copy(initial->vt.begin(), initial->vt.end(), vt.begin());
    std::copy(initial->vtt.begin(), initial->vtt.end(), vtt.begin());
  }

  EnergySeries e;
  e.t.resize(L);
  e.E.resize(L);
  e.E1.resize(L);
  e.nu.resize(L);
  e.sup_ux.resize(L);
  std::vector<double> vx(n), vxx(n), vxt(n), ux(n), uxx(n), uxxx(n), dens(n), dens1(n), full(n),
      full1(n);
  double sup_S = 0.0, sup_S1 = 0.0, int_D = 0.0, int_D1 = 0.0, prev_D = 0.0, prev_D1 = 0.0;
  double sup_point = 0.0, int_vx2 = 0.0, prev_vx2 = 0.0, sup_ux = 0.0;
  for (std::size_t j = 0; j < L; ++j) {
    const auto v = state.v(j), u = state.u(j);
    const std::span<const double> t1(vt.data() + j * n, n), t2(vtt.data() + j * n, n);
    grid_derivative(v, dx, 1, vx);
    grid_derivative(v, dx, 2, vxx);
    if (j == 0 && initial) {
      vxt = initial->vxt;
    } else {
      grid_derivative(t1, dx, 1, vxt);
    }
    grid_derivative(u, dx, 1, ux);
    grid_derivative(u, dx, 2, uxx);
    third_derivative(u, dx, uxxx);
    double point = 0.0, vx2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double base = v[i] * v[i] + vx[i] * vx[i] + t1[i] * t1[i];
      dens1[i] = base + vxt[i] * vxt[i];
      dens[i] = dens1[i] + vxx[i] * vxx[i] + t2[i] * t2[i];
      full1[i] = dens1[i] + t2[i] * t2[i];
      full[i] = dens[i] + u[i] * u[i] + ux[i] * ux[i] + uxx[i] * uxx[i] + uxxx[i] * uxxx[i];
      point = std::max(point, std::sqrt(base));
      vx2 = std::max(vx2, vx[i] * vx[i]);
      sup_ux = std::max(sup_ux, std::fabs(ux[i]));
    }
    const double D = trap(dens, dx), D1 = trap(dens1, dx);
    sup_S = std::max(sup_S, trap(full, dx));
    sup_S1 = std::max(sup_S1, trap(full1, dx));
    if (j > 0) {
      int_D += 0.5 * dt * (prev_D + D);
      int_D1 += 0.5 * dt * (prev_D1 + D1);
      int_vx2 += 0.5 * dt * (prev_vx2 + vx2);
    }
    prev_D = D;
    prev_D1 = D1;
    prev_vx2 = vx2;
    sup_point = std::max(sup_point, point);
    e.t[j] = state.time(j);
    e.E[j] = sup_S + int_D;
    e.E1[j] = sup_S1 + int_D1;
    e.nu[j] = sup_point + std::sqrt(int_vx2);
    e.sup_ux[j] = sup_ux;
  }
  return e;
}

DataMeasures data_measures(const SpatialGrid& grid, std::span<const double> v0, const Forcing& f,
                           double dt, std::size_t levels) {
  grid.validate();
  const std::size_t n = grid.nodes();
  if (v0.size() != n) throw UsageError("data_measures: v0 has the wrong number of nodes");
  if (levels < 4) throw UsageError("data_measures: need at least four levels");
  const double dx = grid.dx();
  DataMeasures m;
  std::vector<double> d1(n), d2(n), dens(n);
  grid_derivative(v0, dx, 1, d1);
  grid_derivative(v0, dx, 2, d2);
  for (std::size_t i = 0; i < n; ++i) dens[i] = v0[i] * v0[i] + d1[i] * d1[i] + d2[i] * d2[i];
  m.V0 = trap(dens, dx);

  m.F.assign(levels, 0.0);
  if (!f) return m;
  const auto fs = sample_forcing(grid, f, dt, levels);
  const auto ft = time_derivative(fs, n, dt, 1);
  const auto ftt = time_derivative(fs, n, dt, 2);
  std::vector<CompensatedSum> If(n), Ifx(n);
  std::vector<double> fx(n), prev_fx(n), sup_dens(n);
  double sup_term = 0.0, integral = 0.0, prev = 0.0;
  for (std::size_t j = 0; j < levels; ++j) {
    const std::span<const double> fj(fs.data() + j * n, n);
    grid_derivative(fj, dx, 1, fx);
    if (j > 0) {
      const std::span<const double> fp(fs.data() + (j - 1) * n, n);
      for (std::size_t i = 0; i < n; ++i) {
        If[i].add(0.5 * dt * (fp[i] + fj[i]));
        Ifx[i].add(0.5 * dt * (prev_fx[i] + fx[i]));
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double a = fj[i] * fj[i] + fx[i] * fx[i] + ft[j * n + i] * ft[j * n + i];
      const double I0 = If[i].value(), I1 = Ifx[i].value();
      sup_dens[i] = a + I0 * I0 + I1 * I1;
      dens[i] = a + ftt[j * n + i] * ftt[j * n + i];
    }
    sup_term = std::max(sup_term, trap(sup_dens, dx));
    const double D = trap(dens, dx);
    if (j > 0) integral += 0.5 * dt * (prev + D);
    prev = D;
    prev_fx = fx;
    m.F[j] = sup_term + integral;
  }
  return m;
}

CertificateFlags check_certificates(const EnergyReport& r, double E0, double theta, double a0,
                                    double slope) {
  CertificateFlags c;
  c.smallness_ok = r.E <= theta * theta / (4.0 * r.C_omega * r.C_omega);
  c.hyperbolicity_ok = r.sup_ux <= 0.5 * theta;
  c.E0_bound_ok = E0 <= 2.0 * (1.0 + a0 * a0 * slope * slope) * (r.F + r.V0) + 1e-6;
  return c;
}

std::string Diagnostics::csv() const {
  std::string s =
      "t,E,E1,nu,sup_ux,F,V0,C_omega,smallness_ok,hyperbolicity_ok,E0_bound_ok,nu_bound_ok,"
      "ux_bound_ok,implication_ok,lemma_i_ratio,lemma_ii_ratio,lemma_iii_ratio,lemma_ok\n";
  for (const auto& r : rows) {
    s += fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},", r.t, r.E,
                     r.E1, r.nu, r.sup_ux, r.F, r.V0, r.C_omega);
    s += fmt::format("{:d},{:d},{:d},{:d},{:d},{:d},{:.17g},{:.17g},{:.17g},{:d}\n",
                     r.flags.smallness_ok, r.flags.hyperbolicity_ok, r.flags.E0_bound_ok,
                     r.nu_bound_ok, r.ux_bound_ok, r.implication_ok, r.lemma_i_ratio,
                     r.lemma_ii_ratio, r.lemma_iii_ratio, r.lemma_ok);
  }
  return s;
}

Diagnostics diagnose(const Solver& solver, const DiagnosticsOptions& options) {
  return diagnose(solver.state(), solver.kernel(), solver.damping(), solver.constants(),
                  solver.forcing(), options);
}

Diagnostics diagnose(const ShearState& state, const RelaxationKernel& kernel,
                     const DampingFunction& g, const DampingConstants& constants, const Forcing& f,
                     const DiagnosticsOptions& options) {
  if (options.every == 0) throw UsageError("diagnose: output stride must be positive");
  const std::size_t n = state.nodes(), L = state.levels();
  const double dt = state.dt();
  Diagnostics d;
  d.C_omega = options.c_omega > 0.0 ? options.c_omega : agmon_constant(state.grid().length);
  d.theta = constants.theta;
  d.K = constants.K_bound();
  const InitialRates init = initial_rates(state, kernel, g, f);
  const EnergySeries es = energy(state, &init);
  std::vector<double> v0(state.v(0).begin(), state.v(0).end());
  d.data = data_measures(state.grid(), v0, f, dt, L);
  d.E0 = es.E[0];

  std::vector<double> lags(L);
  for (std::size_t m = 0; m < L; ++m) lags[m] = dt * static_cast<double>(m);
  const MemoryBound mb = psi_and_abar(kernel, lags);
  d.abar = mb.abar;
  std::optional<RemainderEvaluator> rem;
  if (options.lemma_checks) rem.emplace(state, kernel, g);

  const double a0 = kernel.at_zero(), slope = g.slope_at_zero();
  const double tol = options.rel_tol;
  const Jet j0 = g.jet(0.0);
  bool small_so_far = true;
  for (std::size_t k = 0; k < L; ++k) {
    EnergyReport r;
    r.level = k;
    r.t = es.t[k];
    r.E = es.E[k];
    r.E1 = es.E1[k];
    r.nu = es.nu[k];
    r.sup_ux = es.sup_ux[k];
    r.F = d.data.F[k];
    r.V0 = d.data.V0;
    r.C_omega = d.C_omega;
    r.flags = check_certificates(r, d.E0, d.theta, a0, slope);
    small_so_far = small_so_far && r.flags.smallness_ok;
    r.implication_ok = !small_so_far || r.flags.hyperbolicity_ok;
    const double bound = d.C_omega * std::sqrt(r.E);
    r.nu_bound_ok = within(r.nu, bound, tol);
    r.ux_bound_ok = within(r.sup_ux, bound, tol);
    if (k > 0 && es.E[k] < es.E[k - 1]) d.monotone_ok = false;

    const bool report = k % options.every == 0 || k + 1 == L;
    if (report && rem) {
      const auto& h = rem->history();
      const auto uxk = h.row(h.ux, k);
      // (i), j = 0, 1, over the stored lags s = t_k - t_q.
      double worst = 0.0;
      for (std::size_t q = 0; q < k; ++q) {
        const double s = r.t - es.t[q];
        const double rhs = d.K * std::min(r.nu * std::min(s, std::sqrt(s)), d.theta);
        const auto uxq = h.row(h.ux, q);
        for (std::size_t i = 0; i < n; ++i) {
          const Jet J = g.jet(uxk[i] - uxq[i]);
          const double lhs = std::max(std::fabs(J.g - j0.g), std::fabs(J.d1 - j0.d1));
          if (lhs > 0.0) worst = std::max(worst, lhs / std::max(rhs, 1e-300));
        }
      }
      r.lemma_i_ratio = worst;

      const auto G = rem->G(k), Gt = rem->Gt(k);
      const auto vxx_k = h.row(h.vxx, k);
      double w2 = 0.0, w3 = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        // (|v_xx| * psi)(t_k), trapezoid over the stored levels.
        double conv = 0.0;
        for (std::size_t q = 0; q <= k; ++q) {
          const double wq = (q == 0 || q == k) ? 0.5 : 1.0;
          conv += wq * std::fabs(h.vxx[q * n + i]) * mb.psi[k - q];
        }
        conv *= dt;
        const double rhs2 = d.K * r.nu * conv;
        const double rhs3 = d.K * r.nu * (d.abar * std::fabs(vxx_k[i]) + conv);
        if (std::fabs(G[i]) > 0.0) w2 = std::max(w2, std::fabs(G[i]) / std::max(rhs2, 1e-300));
        if (std::fabs(Gt[i]) > 0.0) w3 = std::max(w3, std::fabs(Gt[i]) / std::max(rhs3, 1e-300));
      }
      r.lemma_ii_ratio = w2;
      r.lemma_iii_ratio = w3;
      r.lemma_ok = r.lemma_i_ratio <= 1.0 + tol && w2 <= 1.0 + tol && w3 <= 1.0 + tol;
    }

    d.E0_bound_ok = d.E0_bound_ok && r.flags.E0_bound_ok;
    d.smallness_ok = d.smallness_ok && r.flags.smallness_ok;
    d.hyperbolicity_ok = d.hyperbolicity_ok && r.flags.hyperbolicity_ok;
    d.implication_ok = d.implication_ok && r.implication_ok;
    d.nu_bound_ok = d.nu_bound_ok && r.nu_bound_ok;
    d.ux_bound_ok = d.ux_bound_ok && r.ux_bound_ok;
    d.lemma_ok = d.lemma_ok && r.lemma_ok;
    if (report) d.rows.push_back(r);
  }
  return d;
}

}  // namespace kbkz

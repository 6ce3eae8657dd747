#include "kbkz/volterra.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>

#include "kbkz/errors.hpp"
#include "kbkz/loops.hpp"
#include "kbkz/numeric.hpp"
#include "kbkz/spectral.hpp"

namespace kbkz {

TimeSignal::TimeSignal(double step, std::vector<double> v) : dt(step), values(std::move(v)) {}

TimeSignal TimeSignal::sample(double step, std::size_t n, const std::function<double(double)>& f) {
  std::vector<double> v(n);
  for (std::size_t k = 0; k < n; ++k) v[k] = f(step * static_cast<double>(k));
  TimeSignal s(step, std::move(v));
  s.validate();
  return s;
}

void TimeSignal::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw UsageError("time signal: step must be positive");
  if (values.size() < 2) throw UsageError("time signal: need at least two samples");
}

namespace {

void require_same_grid(const TimeSignal& a, const TimeSignal& b, const char* what) {
  a.validate();
  b.validate();
  if (std::fabs(a.dt - b.dt) > 1e-12 * std::max(a.dt, b.dt)) {
    throw UsageError(fmt::format("{}: grid steps differ ({:.17g} vs {:.17g})", what, a.dt, b.dt));
  }
}

double trapezoid(std::span<const double> f, double h) {
  if (f.size() < 2) return 0.0;
  CompensatedSum s;
  s.add(0.5 * f.front());
  for (std::size_t k = 1; k + 1 < f.size(); ++k) s.add(f[k]);
  s.add(0.5 * f.back());
  return h * s.value();
}

}  // namespace

TimeSignal convolve(const TimeSignal& b, const TimeSignal& w) {
  require_same_grid(b, w, "convolve");
  if (b.size() < w.size()) throw UsageError("convolve: kernel samples shorter than signal");
  TimeSignal out(w.dt, std::vector<double>(w.size()));
  loops::omp::trapezoid_convolve(b.values, w.values, w.dt, out.values);
  return out;
}

TimeSignal convolve(const RelaxationKernel& b, const TimeSignal& w, int order) {
  w.validate();
  if (b.has_tail()) throw UsageError("convolve: kernel must be truncated");
  const std::size_t n = w.size();
  std::vector<double> c(n), d(n);
  loops::omp::product_weights(b.atoms(), order, w.dt, c, d);
  TimeSignal out(w.dt, std::vector<double>(n));
  loops::omp::product_convolve(c, d, w.values, out.values);
  return out;
}

double qform(const TimeSignal& w, const TimeSignal& b) {
  const TimeSignal bw = convolve(b, w);
  std::vector<double> f(w.size());
  for (std::size_t k = 0; k < w.size(); ++k) f[k] = w[k] * bw[k];
  return trapezoid(f, w.dt);
}

double qform(const TimeSignal& w, const RelaxationKernel& b) {
  const TimeSignal bw = convolve(b, w);
  std::vector<double> f(w.size());
  for (std::size_t k = 0; k < w.size(); ++k) f[k] = w[k] * bw[k];
  return trapezoid(f, w.dt);
}

namespace {

// m_j(z) = int_0^1 theta^j e^{-z theta} dtheta, j = 0..3
std::array<double, 4> exp_moments(double z) {
  std::array<double, 4> m{};
  if (z < 2.0) {
    for (int j = 0; j < 4; ++j) {
      double term = 1.0, s = 0.0;
      for (int i = 0; i < 40; ++i) {
        s += term / (i + j + 1);
        term *= -z / (i + 1);
      }
      m[j] = s;
    }
    return m;
  }
  const double e = std::exp(-z);
  m[0] = -std::expm1(-z) / z;
  for (int j = 1; j < 4; ++j) m[j] = (j * m[j - 1] - e) / z;
  return m;
}

}  // namespace

double qform_exact(const TimeSignal& w, const RelaxationKernel& b) {
  w.validate();
  if (b.has_tail()) throw UsageError("qform_exact: kernel must be truncated");
  // Exact for the piecewise-linear interpolant: on each step, with w = a + b theta,
  // the double integral reduces to the moments m_0, m_1, m_3 of e^{-z theta}.
  const double h = w.dt;
  CompensatedSum q;
  for (const auto& atom : b.atoms()) {
    const double z = atom.rate * h;
    const auto m = exp_moments(z);
    const double decay = std::exp(-z);
    double C = 0.0;  // (e^{-rho .} * w)(t_k)
    CompensatedSum qa;
    for (std::size_t k = 0; k + 1 < w.size(); ++k) {
      const double a = w[k], d = w[k + 1] - w[k];
      const double c0 = a * a + a * d + d * d / 3.0, c1 = -(a * a + a * d + 0.5 * d * d), c3 = d * d / 6.0;
      qa.add(C * h * (a * m[0] + d * m[1]) + h * h * (c0 * m[0] + c1 * m[1] + c3 * m[3]));
      C = decay * C + h * ((a + d) * m[0] - d * m[1]);
    }
    q.add(atom.weight * qa.value());
  }
  return q.value();
}

double qform_field(std::span<const double> field, std::size_t n_x, double dx, double dt,
                   const RelaxationKernel& b) {
  if (n_x < 2 || field.size() % n_x != 0) throw UsageError("qform_field: bad field shape");
  const std::size_t nt = field.size() / n_x;
  if (nt < 2) throw UsageError("qform_field: need at least two time levels");
  // b*w per node, then space integral per time level, then time integral.
  std::vector<double> conv(field.size());
  std::vector<double> col(nt), out(nt), c(nt), d(nt);
  loops::omp::product_weights(b.atoms(), 0, dt, c, d);
  for (std::size_t i = 0; i < n_x; ++i) {
    for (std::size_t k = 0; k < nt; ++k) col[k] = field[k * n_x + i];
    loops::omp::product_convolve(c, d, col, out);
    for (std::size_t k = 0; k < nt; ++k) conv[k * n_x + i] = out[k];
  }
  std::vector<double> per_t(nt), row(n_x);
  for (std::size_t k = 0; k < nt; ++k) {
    for (std::size_t i = 0; i < n_x; ++i) row[i] = field[k * n_x + i] * conv[k * n_x + i];
    per_t[k] = trapezoid(row, dx);
  }
  return trapezoid(per_t, dt);
}

TimeSignal delta_h(const TimeSignal& w, double h) {
  w.validate();
  const double r = h / w.dt;
  const long m = std::lround(r);
  if (!(h > 0.0) || std::fabs(r - static_cast<double>(m)) > 1e-9 * std::max(1.0, r) || m < 1) {
    throw UsageError(fmt::format("delta_h: h={:.17g} is not a positive multiple of dt", h));
  }
  if (static_cast<std::size_t>(m) >= w.size()) throw UsageError("delta_h: h exceeds the horizon");
  const std::size_t n = w.size() - static_cast<std::size_t>(m);
  std::vector<double> v(n);
  for (std::size_t k = 0; k < n; ++k) v[k] = w[k + m] - w[k];
  TimeSignal out(w.dt, std::move(v));
  return out;
}

TimeSignal derivative(const TimeSignal& w) {
  w.validate();
  const std::size_t n = w.size();
  const double h = w.dt;
  std::vector<double> d(n);
  if (n == 2) {
    d[0] = d[1] = (w[1] - w[0]) / h;
  } else {
    d[0] = (-3.0 * w[0] + 4.0 * w[1] - w[2]) / (2.0 * h);
    for (std::size_t k = 1; k + 1 < n; ++k) d[k] = (w[k + 1] - w[k - 1]) / (2.0 * h);
    d[n - 1] = (3.0 * w[n - 1] - 4.0 * w[n - 2] + w[n - 3]) / (2.0 * h);
  }
  return TimeSignal(h, std::move(d));
}

double norm_l1(const TimeSignal& w) {
  std::vector<double> a(w.size());
  for (std::size_t k = 0; k < w.size(); ++k) a[k] = std::fabs(w[k]);
  return trapezoid(a, w.dt);
}

double norm_l2(const TimeSignal& w) {
  std::vector<double> a(w.size());
  for (std::size_t k = 0; k < w.size(); ++k) a[k] = w[k] * w[k];
  return std::sqrt(trapezoid(a, w.dt));
}

double norm_linf(const TimeSignal& w) {
  double m = 0.0;
  for (double x : w.values) m = std::max(m, std::fabs(x));
  return m;
}

InversionResult invert(const InversionOperator& op, const TimeSignal& l, double tol) {
  l.validate();
  return invert(op, l, derivative(l), tol);
}

InversionResult invert(const InversionOperator& op, const TimeSignal& l, const TimeSignal& dl,
                       double tol) {
  l.validate();
  require_same_grid(l, dl, "invert");
  if (!op.kernel) throw UsageError("invert: operator has no kernel");
  if (std::fabs(l.dt - op.dt) > 1e-12 * op.dt) {
    throw UsageError(fmt::format("invert: signal step {:.17g} differs from operator step {:.17g}",
                                 l.dt, op.dt));
  }
  if (l.size() > op.n || dl.size() != l.size()) {
    throw UsageError("invert: signal longer than the operator grid");
  }
  const double scale = std::max(norm_linf(l), 1e-300);
  if (std::fabs(l[0]) > tol * scale && std::fabs(l[0]) > 1e-300) {
    throw DomainError(fmt::format("invert: l(0) = {:.3g} != 0 (support condition)", l[0]));
  }
  const std::size_t n = l.size();
  const double h = l.dt;

  // B1*l' through the atoms of b': iterated exact product convolutions.
  std::vector<double> c(n), d(n);
  loops::omp::product_weights(op.kernel->atoms(), 1, h, c, d);
  std::vector<double> y = dl.values, next(n), b1l(n, 0.0);
  double coef = 1.0 / op.b0;
  for (int k = 1; k <= op.p - 1; ++k) {
    loops::omp::product_convolve(c, d, y, next);
    y.swap(next);
    coef *= -1.0 / op.b0;
    for (std::size_t i = 0; i < n; ++i) b1l[i] += coef * y[i];
  }

  // B2*l: fine trapezoid on the linear interpolant, through the folded lag weights.
  std::vector<double> b2l(n, 0.0);
  for (std::size_t k = 1; k < n; ++k) {
    double s = op.B2_first[k] * l[0] + op.B2_lag[0] * l[k];
    for (std::size_t q = 1; q < k; ++q) s += op.B2_lag[k - q] * l[q];
    b2l[k] = s;
  }

  InversionResult r;
  r.w = TimeSignal(h, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) r.w[i] = dl[i] / op.b0 + b1l[i] + b2l[i];

  const TimeSignal fwd = convolve(*op.kernel, r.w);
  std::vector<double> res(n);
  for (std::size_t i = 0; i < n; ++i) res[i] = fwd[i] - l[i];
  r.forward_residual = norm_l2(TimeSignal(h, res)) / std::max(norm_l2(l), 1e-300);
  return r;
}

}  // namespace kbkz

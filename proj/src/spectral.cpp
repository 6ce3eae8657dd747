#include "kbkz/spectral.hpp"

#include <fftw3.h>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "kbkz/errors.hpp"
#include "kbkz/loops.hpp"
#include "kbkz/numeric.hpp"

namespace kbkz {

using cplx = std::complex<double>;

std::complex<double> fourier_exact(const RelaxationKernel& kernel, double omega, int order) {
  if (kernel.has_tail()) {
    // Only the value at omega = 0 of order 0 has a closed-form tail.
    if (order != 0 || omega != 0.0) throw UsageError("fourier_exact: kernel must be truncated");
    return {kernel.l1_norm(), 0.0};
  }
  cplx out;
  const double om[1] = {omega};
  loops::serial::fourier_samples(kernel.atoms(), order, om, std::span<cplx>(&out, 1));
  return out;
}

std::vector<double> log_symmetric_grid(std::size_t n, double omega_min, double omega_max) {
  if (n < 2 || !(omega_min > 0.0) || !(omega_max > omega_min)) {
    throw UsageError("log_symmetric_grid: need n >= 2 and 0 < omega_min < omega_max");
  }
  std::vector<double> pos(n);
  const double r = std::log(omega_max / omega_min) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) pos[i] = omega_min * std::exp(r * static_cast<double>(i));
  std::vector<double> g;
  g.reserve(2 * n + 1);
  for (std::size_t i = n; i-- > 0;) g.push_back(-pos[i]);
  g.push_back(0.0);
  for (double x : pos) g.push_back(x);
  return g;
}

SpectralProfile spectral_profile(const RelaxationKernel& kernel, std::span<const double> omega) {
  if (kernel.has_tail()) throw UsageError("spectral_profile: kernel must be truncated");
  SpectralProfile p;
  p.omega.assign(omega.begin(), omega.end());
  p.fa.resize(omega.size());
  p.fda.resize(omega.size());
  loops::omp::fourier_samples(kernel.atoms(), 0, omega, p.fa);
  loops::omp::fourier_samples(kernel.atoms(), 1, omega, p.fda);
  p.M1 = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < omega.size(); ++k) {
    p.M1 = std::min(p.M1, (1.0 + omega[k] * omega[k]) * p.fa[k].real());
  }
  return p;
}

PositivityReport check_strong_positivity(const RelaxationKernel& kernel,
                                         std::span<const double> omega) {
  if (kernel.atoms().empty()) throw DomainError("kernel has no atoms");
  if (omega.empty()) throw UsageError("check_strong_positivity: empty frequency grid");
  const SpectralProfile prof = spectral_profile(kernel, omega);
  PositivityReport r;
  r.grid_size = omega.size();
  r.M1 = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < omega.size(); ++k) {
    const double v = (1.0 + omega[k] * omega[k]) * prof.fa[k].real();
    if (v < r.M1) {
      r.M1 = v;
      r.omega_at_min = omega[k];
    }
  }
  r.pass = r.M1 > 0.0;

  // Pair bounds rho_i mu([rho_i, rho_j]) / (rho_j^2 + omega^2).
  const auto atoms = kernel.atoms();
  const std::size_t na = std::min<std::size_t>(64, atoms.size());
  std::vector<std::pair<double, double>> pairs;  // (rho_i mu, rho_j^2)
  for (std::size_t i = 0; i < na; ++i) {
    double mu = 0.0;
    for (std::size_t j = i; j < na; ++j) {
      mu += atoms[j].weight;
      pairs.emplace_back(atoms[i].rate * mu, atoms[j].rate * atoms[j].rate);
    }
  }
  r.M1_constructive = std::numeric_limits<double>::infinity();
  r.constructive_consistent = true;
  for (std::size_t k = 0; k < omega.size(); ++k) {
    const double o2 = omega[k] * omega[k];
    double best = 0.0;
    for (const auto& [num, r2] : pairs) best = std::max(best, num / (r2 + o2));
    r.M1_constructive = std::min(r.M1_constructive, (1.0 + o2) * best);
    if (prof.fa[k].real() < best * (1.0 - 1e-13)) r.constructive_consistent = false;
  }
  return r;
}

int default_power(const RelaxationKernel& kernel, double dt, double tol) {
  if (!(dt > 0.0)) throw UsageError("default_power: dt must be positive");
  const double wn = pi / dt;
  const double fb = std::abs(fourier_exact(kernel, wn, 0));
  const double fdb = std::abs(fourier_exact(kernel, wn, 1));
  const double b0 = kernel.at_zero();
  for (int p = 2; p <= 8; ++p) {
    if (std::pow(fdb / b0, p) / fb < tol) return p;
  }
  return 8;
}

namespace {

// Power series in x = 1/s, truncated to degree D.
using Series = std::vector<double>;

Series mul(const Series& a, const Series& b, std::size_t D) {
  Series c(D + 1, 0.0);
  for (std::size_t i = 0; i <= D && i < a.size(); ++i)
    for (std::size_t j = 0; i + j <= D && j < b.size(); ++j) c[i + j] += a[i] * b[j];
  return c;
}

Series div(const Series& a, const Series& q, std::size_t D) {
  Series c(D + 1, 0.0);
  for (std::size_t n = 0; n <= D; ++n) {
    double s = n < a.size() ? a[n] : 0.0;
    for (std::size_t k = 1; k <= n && k < q.size(); ++k) s -= q[k] * c[n - k];
    c[n] = s / q[0];
  }
  return c;
}

double binom(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

struct Asymptotics {
  double lambda = 0.0;
  std::vector<double> c;  // R(s) ~ sum c_m / (s + lambda)^{m+1}
};

// Expansion of R = (L b')^p / L b at s = inf, with L b(s) = sum w / (rho + s).
Asymptotics asymptotics(const RelaxationKernel& k, int p, int M) {
  const int L = p - 1 + M;
  std::vector<double> mom(L + 2, 0.0);
  for (int n = 0; n <= L + 1; ++n) {
    CompensatedSum s;
    for (const auto& a : k.atoms()) s.add(a.weight * std::pow(a.rate, n));
    mom[n] = s.value();
  }
  const std::size_t D = static_cast<std::size_t>(L);
  Series P(D + 1), Q(D + 1);
  for (std::size_t n = 0; n <= D; ++n) {
    P[n] = ((n % 2 == 0) ? -1.0 : 1.0) * mom[n + 1];
    Q[n] = ((n % 2 == 0) ? 1.0 : -1.0) * mom[n];
  }
  Series Pp = {1.0};
  for (int i = 0; i < p; ++i) Pp = mul(Pp, P, D);
  const Series ratio = div(Pp, Q, D);
  Series r(D + 1, 0.0);  // R = x^{p-1} ratio
  for (std::size_t n = p - 1; n <= D; ++n) r[n] = ratio[n - (p - 1)];

  Asymptotics a;
  a.lambda = 2.0 * k.max_rate();
  a.c.assign(L, 0.0);
  for (int n = 1; n <= L; ++n) {
    double s = r[n];
    for (int m = 0; m < n - 1; ++m) s -= a.c[m] * binom(n - 1, m) * std::pow(-a.lambda, n - 1 - m);
    a.c[n - 1] = s;
  }
  return a;
}

cplx ratio_transform(const RelaxationKernel& k, int p, double omega) {
  const cplx fb = fourier_exact(k, omega, 0);
  const cplx fdb = fourier_exact(k, omega, 1);
  return std::pow(fdb, p) / fb;
}

cplx asymptotic_transform(const Asymptotics& a, double omega) {
  const cplx y = 1.0 / cplx(a.lambda, omega);
  cplx s = 0.0, yp = y;
  for (double c : a.c) {
    s += c * yp;
    yp *= y;
  }
  return s;
}

double asymptotic_time(const Asymptotics& a, double t) {
  double s = 0.0, tm = 1.0, fact = 1.0;
  for (std::size_t m = 0; m < a.c.size(); ++m) {
    if (m > 0) {
      tm *= t;
      fact *= static_cast<double>(m);
    }
    s += a.c[m] * tm / fact;
  }
  return s * std::exp(-a.lambda * t);
}

}  // namespace

InversionOperator build_inversion(const RelaxationKernel& kernel, double dt, std::size_t n,
                                  const InversionOptions& options) {
  if (kernel.has_tail()) throw UsageError("build_inversion: kernel must be truncated");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw UsageError("build_inversion: dt must be positive");
  if (n < 2) throw UsageError("build_inversion: grid needs at least two points");
  InversionOperator op;
  op.b0 = kernel.at_zero();
  if (!(op.b0 != 0.0)) throw IllPosedError("b(0+) = 0");
  op.p = options.power > 0 ? options.power : default_power(kernel, dt, options.tail_tolerance);
  if (op.p < 1) throw UsageError("build_inversion: p must be >= 1");
  op.dt = dt;
  op.n = n;
  op.kernel = std::make_shared<const RelaxationKernel>(kernel);
  op.kernel_fingerprint = kernel.fingerprint();

  const double wn = pi / dt;
  {
    const double fb = std::abs(fourier_exact(kernel, wn, 0));
    const double fdb = std::abs(fourier_exact(kernel, wn, 1));
    op.tail_ratio = std::pow(fdb / std::fabs(op.b0), op.p) / fb;
  }

  // Ill-posedness guard and sup of the ratio transform on a log grid up to the fine Nyquist.
  {
    const std::vector<double> grid =
        log_symmetric_grid(2000, 1e-4 * kernel.min_rate(), wn * options.max_oversampling);
    const PositivityReport pos = check_strong_positivity(kernel, grid);
    op.positivity_floor_margin = std::numeric_limits<double>::infinity();
    for (double om : grid) {
      const cplx fb = fourier_exact(kernel, om, 0);
      const double floor = pos.M1 / (2.0 * (1.0 + om * om));
      op.positivity_floor_margin = std::min(op.positivity_floor_margin, std::abs(fb) / (2.0 * floor));
      if (!(std::abs(fb) >= floor)) {
        throw IllPosedError(fmt::format("|F b({:.6g})| = {:.3g} below the positivity floor {:.3g}",
                                        om, std::abs(fb), floor));
      }
      if (op.p >= 1) op.ratio_sup = std::max(op.ratio_sup, std::abs(ratio_transform(kernel, op.p, om)));
    }
  }

  // B1 samples: sum_{k=1}^{p-1} (-1)^k (b')^{*k} / b0^{k+1}.
  std::vector<double> c(n), d(n);
  loops::omp::product_weights(kernel.atoms(), 1, dt, c, d);
  std::vector<double> bp(n), cur(n), next(n);
  for (std::size_t k = 0; k < n; ++k) bp[k] = kernel.eval(dt * static_cast<double>(k), 1);
  op.B1.assign(n, 0.0);
  cur = bp;
  double coef = 1.0 / op.b0;
  for (int k = 1; k <= op.p - 1; ++k) {
    if (k > 1) {
      loops::omp::product_convolve(c, d, cur, next);
      cur.swap(next);
    }
    coef *= -1.0 / op.b0;
    for (std::size_t i = 0; i < n; ++i) op.B1[i] += coef * cur[i];
  }

  // B2 = (-1)^p / b0^p F^{-1}[R], R = (F b')^p / F b, with the asymptotic part in closed form.
  const Asymptotics as = asymptotics(kernel, op.p, options.asymptotic_terms);
  const double scale = std::pow(std::fabs(op.b0), op.p);
  int m = std::max(1, options.min_oversampling);
  while (m < options.max_oversampling) {
    const double w = pi * m / dt;
    const double rem = std::abs(ratio_transform(kernel, op.p, w) - asymptotic_transform(as, w));
    if (rem < options.tail_tolerance * scale) break;
    m *= 2;
  }
  op.oversampling = m;
  const double hf = dt / m;
  const double t_end = dt * static_cast<double>(n - 1);
  const double period_min = t_end + 50.0 / kernel.min_rate();
  std::size_t N = 16;
  while (static_cast<double>(N) * hf < period_min) N *= 2;
  const double T = static_cast<double>(N) * hf;

  std::vector<cplx> spec(N / 2 + 1);
  for (std::size_t k = 0; k <= N / 2; ++k) {
    const double w = 2.0 * pi * static_cast<double>(k) / T;
    spec[k] = ratio_transform(kernel, op.p, w) - asymptotic_transform(as, w);
  }
  spec[N / 2] = spec[N / 2].real();
  std::vector<double> rem(N);
  {
    fftw_plan plan = fftw_plan_dft_c2r_1d(static_cast<int>(N),
                                          reinterpret_cast<fftw_complex*>(spec.data()),
                                          rem.data(), FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
  }
  const double sign = (op.p % 2 == 0) ? 1.0 : -1.0;
  const std::size_t nf = (n - 1) * m + 1;
  op.B2_fine.resize(nf);
  for (std::size_t j = 0; j < nf; ++j) {
    const double t = hf * static_cast<double>(j);
    op.B2_fine[j] = sign / scale * (rem[j] / T + asymptotic_time(as, t));
  }
  op.B2.resize(n);
  for (std::size_t k = 0; k < n; ++k) op.B2[k] = op.B2_fine[k * m];

  auto l1 = [](const std::vector<double>& f, double h) {
    CompensatedSum s;
    for (std::size_t k = 0; k < f.size(); ++k) {
      const double wgt = (k == 0 || k + 1 == f.size()) ? 0.5 : 1.0;
      s.add(wgt * std::fabs(f[k]));
    }
    return h * s.value();
  };
  op.B1_l1 = l1(op.B1, dt);
  op.B2_l1 = l1(op.B2_fine, hf);

  // Lag weights of the fine trapezoid applied to the linear interpolant of l.
  op.B2_lag.assign(n, 0.0);
  op.B2_first.assign(n, 0.0);
  for (std::size_t q = 0; q < n; ++q) {
    const std::size_t c = q * m;
    double lag = 0.0, first = 0.0;
    for (int r = 1; r < m; ++r) {
      const double hat = 1.0 - static_cast<double>(r) / m;
      if (q > 0) {
        lag += hat * (op.B2_fine[c - r] + (c + r < nf ? op.B2_fine[c + r] : 0.0));
        first += hat * op.B2_fine[c - r];
      } else {
        lag += hat * op.B2_fine[r];
      }
    }
    op.B2_lag[q] = hf * (q > 0 ? lag + op.B2_fine[c] : lag + 0.5 * op.B2_fine[0]);
    op.B2_first[q] = hf * (first + 0.5 * op.B2_fine[c]);
  }
  return op;
}

namespace {

// (1 - e^{-z}) / z and (1 - e^{-z} - z e^{-z}) / z^2 for complex z.
cplx phi0c(cplx z) {
  if (std::abs(z) < 0.5) {
    cplx term = 1.0, s = 1.0;
    for (int n = 1; n < 20; ++n) {
      term *= -z / static_cast<double>(n + 1);
      s += term;
    }
    return s;
  }
  return (1.0 - std::exp(-z)) / z;
}

cplx phi1c(cplx z) {
  if (std::abs(z) < 0.5) {
    cplx f = 0.5, s = 0.5;
    for (int n = 1; n < 20; ++n) {
      f *= -z / static_cast<double>(n + 2);
      s += f * static_cast<double>(n + 1);
    }
    return s;
  }
  const cplx e = std::exp(-z);
  return (1.0 - e - z * e) / (z * z);
}

// F of the zero-extended piecewise-linear interpolant of w.
cplx fourier_piecewise_linear(const TimeSignal& w, double tau) {
  const double h = w.dt;
  const cplx z(0.0, tau * h);
  const cplx p0 = phi0c(z), p1 = phi1c(z);
  const cplx step = std::exp(-z);
  cplx phase = 1.0, s = 0.0;
  for (std::size_t k = 0; k + 1 < w.size(); ++k) {
    const double slope = w[k + 1] - w[k];  // times h already folded below
    s += phase * (w[k] * h * p0 + slope * h * p1);
    phase *= step;
  }
  return s;
}

}  // namespace

double parseval_qform(const TimeSignal& w, const RelaxationKernel& kernel, double rel_tol) {
  w.validate();
  if (kernel.has_tail()) throw UsageError("parseval_qform: kernel must be truncated");
  std::vector<double> x, wt;
  gauss_legendre(16, x, wt);
  const double width = 2.0 * pi / w.t_end();  // one oscillation period of |Fw|^2 per panel
  auto panel = [&](double a) {
    double s = 0.0;
    for (std::size_t g = 0; g < x.size(); ++g) {
      const double tau = a + 0.5 * width * (x[g] + 1.0);
      const double re = fourier_exact(kernel, tau, 0).real();
      s += 0.5 * width * wt[g] * re * std::norm(fourier_piecewise_linear(w, tau));
    }
    return s;
  };
  // The integrand is even in tau: Q = (1/pi) int_0^inf.
  CompensatedSum total;
  std::size_t next = 0, block = 8;
  for (int it = 0; it < 40; ++it) {
    CompensatedSum b;
    for (std::size_t j = 0; j < block; ++j) b.add(panel(width * static_cast<double>(next + j)));
    next += block;
    total.add(b.value());
    if (std::fabs(b.value()) <= rel_tol * std::fabs(total.value()) || total.value() == 0.0) break;
    block *= 2;
  }
  return total.value() / pi;
}

double garding_ratio(const TimeSignal& w, const RelaxationKernel& kernel, double M1) {
  if (!(M1 > 0.0)) throw UsageError("garding_ratio: M1 must be positive");
  const TimeSignal wt = derivative(w);
  std::vector<double> sq(w.size());
  for (std::size_t k = 0; k < w.size(); ++k) sq[k] = w[k] * w[k];
  const double l2 = norm_l2(w);
  const double num = sq.back() + l2 * l2;
  const double den = qform_exact(w, kernel) / M1 + qform_exact(wt, kernel) / M1 + sq.front();
  return num / den;
}

std::string inversion_csv(const InversionOperator& op) {
  std::string out = "t,B1,B2\n";
  for (std::size_t k = 0; k < op.n; ++k) {
    out += fmt::format("{:.17g},{:.17g},{:.17g}\n", op.dt * static_cast<double>(k), op.B1[k],
                       op.B2[k]);
  }
  return out;
}

}  // namespace kbkz

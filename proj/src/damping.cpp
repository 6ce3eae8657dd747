#include <fmt/format.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "kbkz/damping.hpp"
#include "kbkz/errors.hpp"
#include "kbkz/numeric.hpp"

namespace kbkz {

namespace {

double clenshaw(const std::vector<double>& c, double x) {
  double b1 = 0.0, b2 = 0.0;
  for (std::size_t k = c.size(); k-- > 1;) {
    const double b0 = 2.0 * x * b1 - b2 + c[k];
    b2 = b1;
    b1 = b0;
  }
  return x * b1 - b2 + c[0];
}

// Coefficients of d/dx of a Chebyshev series on [-1, 1].
std::vector<double> cheb_derivative(const std::vector<double>& c) {
  const std::size_t n = c.size();
  if (n <= 1) return {0.0};
  std::vector<double> d(n, 0.0);
  for (std::size_t k = n - 1; k-- > 0;) {
    d[k] = (k + 2 < n ? d[k + 2] : 0.0) + 2.0 * (k + 1) * c[k + 1];
  }
  d[0] *= 0.5;
  d.pop_back();
  return d;
}

double poly_derivative(const std::vector<double>& c, double y, int order) {
  // Horner on sum_k k!/(k-order)! c_k y^(k-order).
  double s = 0.0;
  for (std::size_t k = c.size(); k-- > static_cast<std::size_t>(order);) {
    double f = 1.0;
    for (int j = 0; j < order; ++j) f *= static_cast<double>(k - j);
    s = s * y + f * c[k];
  }
  return s;
}

}  // namespace

DampingFunction DampingFunction::linear(double slope) {
  DampingFunction g;
  g.kind_ = Kind::linear;
  g.name_ = "linear";
  g.half_width_ = std::numeric_limits<double>::infinity();
  g.poly_ = {0.0, slope};
  return g;
}

DampingFunction DampingFunction::polynomial(std::vector<double> coefficients) {
  if (coefficients.empty()) throw UsageError("polynomial damping needs coefficients");
  for (double c : coefficients) {
    if (!std::isfinite(c)) throw DomainError("polynomial coefficient is not finite");
  }
  DampingFunction g;
  g.kind_ = Kind::polynomial;
  g.name_ = "polynomial";
  g.half_width_ = std::numeric_limits<double>::infinity();
  g.poly_ = std::move(coefficients);
  return g;
}

DampingFunction DampingFunction::doi_edwards(const GdeOptions& options, double half_width,
                                             int chebyshev_nodes) {
  if (!(half_width > 0.0) || chebyshev_nodes < 8) throw UsageError("bad Chebyshev setup");
  const SphereRule fine(options.n_polar, options.n_azimuth);
  const SphereRule coarse(std::max(2, options.n_polar / 2), std::max(3, options.n_azimuth / 2));
  const int n = chebyshev_nodes;
  std::array<std::vector<double>, 4> f;
  for (auto& v : f) v.resize(n);
  for (int j = 0; j < n; ++j) {
    const double x = std::cos(pi * (j + 0.5) / n);
    const Jet a = g_de_jet(half_width * x, fine);
    const Jet b = g_de_jet(half_width * x, coarse);
    double err = 0.0;
    for (int d = 0; d < 4; ++d) {
      f[d][j] = a[d];
      err = std::max(err, std::fabs(a[d] - b[d]));
    }
    if (!(err <= options.tolerance)) {
      throw AccuracyError(fmt::format("g_DE quadrature at y={:.17g}: estimate {:.3g} > {:.3g}",
                                      half_width * x, err, options.tolerance),
                          err, options.tolerance);
    }
  }
  DampingFunction g;
  g.kind_ = Kind::doi_edwards;
  g.name_ = "doi-edwards";
  g.half_width_ = half_width;
  g.gde_ = std::make_shared<const GdeOptions>(options);
  for (int d = 0; d < 4; ++d) {
    auto& c = g.cheb_[d];
    c.assign(n, 0.0);
    for (int k = 0; k < n; ++k) {
      CompensatedSum s;
      for (int j = 0; j < n; ++j) s.add(f[d][j] * std::cos(pi * k * (j + 0.5) / n));
      c[k] = 2.0 * s.value() / n;
    }
    c[0] *= 0.5;
    // g and g'' are odd, g' and g''' even: drop the rounding-level coefficients of the wrong
    // parity so that g(0) = 0 exactly.
    for (int k = d % 2; k < n; k += 2) c[k] = 0.0;
  }
  return g;
}

DampingFunction DampingFunction::tabulated(std::span<const double> y, std::span<const double> v,
                                           int degree) {
  if (y.size() != v.size()) throw UsageError("tabulated damping: column length mismatch");
  if (degree < 3 || static_cast<std::size_t>(degree) >= y.size()) {
    throw UsageError("tabulated damping: need 3 <= degree < number of samples");
  }
  double H = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!std::isfinite(y[i]) || !std::isfinite(v[i])) {
      throw DomainError("tabulated damping: non-finite sample");
    }
    H = std::max(H, std::fabs(y[i]));
  }
  if (!(H > 0.0)) throw DomainError("tabulated damping: samples must span a non-trivial range");
  Eigen::MatrixXd A(y.size(), degree + 1);
  Eigen::VectorXd b(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double x = y[i] / H;
    double t0 = 1.0, t1 = x;
    A(i, 0) = 1.0;
    A(i, 1) = x;
    for (int k = 2; k <= degree; ++k) {
      const double t2 = 2.0 * x * t1 - t0;
      A(i, k) = t2;
      t0 = t1;
      t1 = t2;
    }
    b(i) = v[i];
  }
  const Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);
  DampingFunction g;
  g.kind_ = Kind::tabulated;
  g.name_ = "tabulated";
  g.half_width_ = H;
  g.cheb_[0].assign(c.data(), c.data() + c.size());
  for (int d = 1; d < 4; ++d) {
    g.cheb_[d] = cheb_derivative(g.cheb_[d - 1]);
    for (double& x : g.cheb_[d]) x /= H;
  }
  return g;
}

DampingFunction DampingFunction::clamped(double radius) const {
  if (!(radius > 0.0)) throw UsageError("clamp radius must be positive");
  DampingFunction g = *this;
  g.clamp_ = radius;
  g.name_ += fmt::format(" clamped at {:.6g}", radius);
  return g;
}

double DampingFunction::derivative(double y, int order) const {
  if (order < 0 || order > 3) throw DomainError("damping derivative order must be in 0..3");
  y = std::clamp(y, -clamp_, clamp_);
  if (is_polynomial()) return poly_derivative(poly_, y, order);
  if (kind_ == Kind::doi_edwards && !in_domain(y)) return eval_g_de(y, *gde_).jet[order];
  return clenshaw(cheb_[order], y / half_width_);
}

Jet DampingFunction::jet(double y) const {
  y = std::clamp(y, -clamp_, clamp_);
  if (kind_ == Kind::doi_edwards && !in_domain(y)) return eval_g_de(y, *gde_).jet;
  return {derivative(y, 0), derivative(y, 1), derivative(y, 2), derivative(y, 3)};
}

DampingConstants estimate_damping_constants(const DampingFunction& g, double step, double limit) {
  if (!(step > 0.0) || !(limit > 0.0)) throw UsageError("scan step and limit must be positive");
  limit = std::min({limit, 1.0, g.domain_half_width()});
  const Jet z = g.jet(0.0);
  if (!(z.d1 < 0.0)) {
    throw HypothesisViolation(
        fmt::format("g'(0) = {:.17g} >= 0: the model is not hyperbolic at rest", z.d1));
  }
  const double scale = std::max(1.0, std::fabs(z.d1));
  if (std::fabs(z.g) > 1e-9 * scale || std::fabs(z.d2) > 1e-7 * scale) {
    throw HypothesisViolation(
        fmt::format("g(0) = {:.3g}, g''(0) = {:.3g}; both must vanish", z.g, z.d2));
  }

  if (g.kind() == DampingFunction::Kind::linear) {
    // g' is constant: every window is hyperbolic and the remainder vanishes.
    DampingConstants c;
    c.theta = INFINITY;
    c.K_lipschitz = std::fabs(z.d1);
    c.gamma = -z.d1;
    c.slope_at_zero = z.d1;
    return c;
  }
  const int n = static_cast<int>(std::floor(limit / step + 1e-9));
  // Largest radius with g' < 0 on the scan, per side.
  double theta = limit;
  for (double side : {1.0, -1.0}) {
    double prev = 0.0;
    for (int i = 1; i <= n + 1; ++i) {
      const double y = std::min(i * step, limit);
      if (g.derivative(side * y, 1) >= 0.0) {
        double lo = prev, hi = y;
        for (int it = 0; it < 60; ++it) {
          const double mid = 0.5 * (lo + hi);
          (g.derivative(side * mid, 1) < 0.0 ? lo : hi) = mid;
        }
        theta = std::min(theta, lo);
        break;
      }
      prev = y;
      if (y >= limit) break;
    }
  }

  DampingConstants c;
  c.theta = theta;
  c.slope_at_zero = z.d1;
  double max_d1 = z.d1;
  for (int i = -n - 1; i <= n + 1; ++i) {
    double y = i * step;
    if (std::fabs(y) > theta) y = std::copysign(theta, y);
    const Jet j = g.jet(y);
    max_d1 = std::max(max_d1, j.d1);
    if (y == 0.0) continue;
    const double ay = std::fabs(y);
    c.K = std::max({c.K, std::fabs(j.d1 - z.d1) / (y * y), std::fabs(j.d3 - z.d3) / ay});
    for (int d = 0; d < 4; ++d) c.K_lipschitz = std::max(c.K_lipschitz, std::fabs(j[d] - z[d]) / ay);
  }
  // Limits of the quotients as y -> 0, which the grid never samples.
  c.K = std::max(c.K, 0.5 * std::fabs(z.d3));
  for (int d = 0; d < 3; ++d) c.K_lipschitz = std::max(c.K_lipschitz, std::fabs(z[d + 1]));
  c.gamma = -max_d1;
  return c;
}

}  // namespace kbkz

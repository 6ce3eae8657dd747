#include <fmt/format.h>

#include <cmath>

#include "kbkz/damping.hpp"
#include "kbkz/errors.hpp"
#include "kbkz/numeric.hpp"

namespace kbkz {

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n < 1) throw UsageError("gauss_legendre: n must be >= 1");
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-16) break;
    }
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    weights[i] = w;
    weights[n - 1 - i] = w;
  }
}

SphereRule::SphereRule(int n_polar, int n_azimuth) : n_polar_(n_polar), n_azimuth_(n_azimuth) {
  if (n_polar < 2 || n_azimuth < 3) throw UsageError("sphere rule too coarse");
  std::vector<double> z, wz;
  gauss_legendre(n_polar, z, wz);
  const std::size_t n = static_cast<std::size_t>(n_polar) * n_azimuth;
  u1_.reserve(n);
  u2_.reserve(n);
  u3_.reserve(n);
  w_.reserve(n);
  const double dphi = 2.0 * pi / n_azimuth;
  for (int i = 0; i < n_polar; ++i) {
    const double s = std::sqrt(std::max(0.0, 1.0 - z[i] * z[i]));
    for (int j = 0; j < n_azimuth; ++j) {
      // Half-step offset keeps the node set symmetric under u1 -> -u1 and u2 -> -u2.
      const double phi = (j + 0.5) * dphi;
      u1_.push_back(s * std::cos(phi));
      u2_.push_back(s * std::sin(phi));
      u3_.push_back(z[i]);
      w_.push_back(wz[i] * dphi);
    }
  }
}

Jet g_de_jet(double y, const SphereRule& rule) {
  // D = |(u1 - y u2, u2, u3)|^2 = 1 - 2 y q + y^2 r with q = u1 u2, r = u2^2.
  const auto u1 = rule.u1(), u2 = rule.u2(), w = rule.weights();
  CompensatedSum s0, s1, s2, s3;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double q = u1[i] * u2[i];
    const double r = u2[i] * u2[i];
    const double D = 1.0 - 2.0 * y * q + y * y * r;
    const double D1 = -2.0 * q + 2.0 * y * r;
    const double D2 = 2.0 * r;
    const double inv = 1.0 / D;
    const double m32 = inv * std::sqrt(inv);  // D^{-3/2}
    const double m52 = m32 * inv;
    const double m72 = m52 * inv;
    const double m92 = m72 * inv;
    const double wq = w[i] * q;
    s0.add(-wq * m32);
    s1.add(1.5 * wq * D1 * m52);
    s2.add(1.5 * wq * (D2 * m52 - 2.5 * D1 * D1 * m72));
    s3.add(1.5 * wq * (-7.5 * D1 * D2 * m72 + 8.75 * D1 * D1 * D1 * m92));
  }
  return {s0.value(), s1.value(), s2.value(), s3.value()};
}

GdeValue eval_g_de(double y, const GdeOptions& options) {
  if (!std::isfinite(y)) throw DomainError("g_DE evaluated at a non-finite argument");
  const SphereRule fine(options.n_polar, options.n_azimuth);
  const SphereRule coarse(std::max(2, options.n_polar / 2), std::max(3, options.n_azimuth / 2));
  GdeValue out;
  out.jet = g_de_jet(y, fine);
  const Jet c = g_de_jet(y, coarse);
  for (int j = 0; j < 4; ++j) {
    out.error_estimate = std::max(out.error_estimate, std::fabs(out.jet[j] - c[j]));
  }
  if (!(out.error_estimate <= options.tolerance)) {
    throw AccuracyError(fmt::format("g_DE quadrature at y={:.17g}: estimate {:.3g} > {:.3g}", y,
                                    out.error_estimate, options.tolerance),
                        out.error_estimate, options.tolerance);
  }
  return out;
}

}  // namespace kbkz

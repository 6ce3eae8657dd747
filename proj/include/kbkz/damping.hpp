#pragma once

#include <array>
#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace kbkz {

/// g and its first three derivatives at one point.
struct Jet {
  double g = 0.0, d1 = 0.0, d2 = 0.0, d3 = 0.0;
  double operator[](int j) const { return j == 0 ? g : j == 1 ? d1 : j == 2 ? d2 : d3; }
};

// ---- sphere quadrature -------------------------------------------------------------------

/// Gauss-Legendre nodes/weights on [-1, 1] (Newton on the three-term recurrence).
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

/// Product rule on S^2: Gauss-Legendre in u3 = cos(polar) times uniform trapezoid in azimuth.
/// Exact for spherical polynomials up to degree min(2 n_polar - 1, n_azimuth - 1).
class SphereRule {
 public:
  SphereRule(int n_polar = 128, int n_azimuth = 256);
  int n_polar() const { return n_polar_; }
  int n_azimuth() const { return n_azimuth_; }
  std::size_t size() const { return w_.size(); }
  std::span<const double> u1() const { return u1_; }
  std::span<const double> u2() const { return u2_; }
  std::span<const double> u3() const { return u3_; }
  std::span<const double> weights() const { return w_; }

 private:
  int n_polar_, n_azimuth_;
  std::vector<double> u1_, u2_, u3_, w_;
};

struct GdeOptions {
  int n_polar = 128;
  int n_azimuth = 256;
  double tolerance = 1e-9;  // absolute, on all four derivatives
};

struct GdeValue {
  Jet jet;
  double error_estimate = 0.0;  // max |fine - half-resolution| over the jet
};

/// g_DE(y) = -int_{S^2} u1 u2 [(u1 - u2 y)^2 + u2^2 + u3^2]^{-3/2} dS, with analytic
/// y-derivatives.
/// Throws AccuracyError when the half-resolution comparison exceeds the tolerance.
GdeValue eval_g_de(double y, const GdeOptions& options = {});

/// Same rule applied to a caller-held SphereRule (no accuracy check).
Jet g_de_jet(double y, const SphereRule& rule);

// ---- damping function --------------------------------------------------------------------

/// The nonlinearity g with derivatives up to order 3.
///
/// Polynomials are evaluated exactly on all of R. The Doi-Edwards function and tabulated data
/// are Chebyshev expansions on [-H, H]; g_DE falls back to direct quadrature outside.
class DampingFunction {
 public:
  enum class Kind { linear, polynomial, doi_edwards, tabulated };

  static DampingFunction linear(double slope);
  /// Coefficients in ascending powers: c0 + c1 y + c2 y^2 + ...
  static DampingFunction polynomial(std::vector<double> coefficients);
  static DampingFunction doi_edwards(const GdeOptions& options = {}, double half_width = 1.0,
                                     int chebyshev_nodes = 65);
  /// Least-squares Chebyshev fit of the given samples (degree < #samples).
  static DampingFunction tabulated(std::span<const double> y, std::span<const double> g,
                                   int degree = 12);

  double operator()(double y) const { return derivative(y, 0); }
  double derivative(double y, int order) const;
  Jet jet(double y) const;

  Kind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  /// Half-width of the interval where the representation is certified; inf for polynomials.
  double domain_half_width() const { return half_width_; }
  bool in_domain(double y) const { return std::abs(y) <= half_width_; }
  bool is_polynomial() const { return kind_ == Kind::linear || kind_ == Kind::polynomial; }
  std::span<const double> coefficients() const { return poly_; }
  double slope_at_zero() const { return derivative(0.0, 1); }
  /// Copy whose arguments are clamped to [-radius, radius] (breach recovery, non-conforming).
  DampingFunction clamped(double radius) const;
  bool is_clamped() const { return std::isfinite(clamp_); }

 private:
  DampingFunction() = default;

  Kind kind_ = Kind::linear;
  std::string name_;
  double half_width_ = 0.0;
  std::vector<double> poly_;
  std::array<std::vector<double>, 4> cheb_;  // coefficients of g, g', g'', g''' on [-H, H]
  std::shared_ptr<const GdeOptions> gde_;    // set for the Doi-Edwards fallback
  double clamp_ = INFINITY;
};

/// Hyperbolicity radius and constants of a damping function.
struct DampingConstants {
  double theta = 0.0;        // g' < 0 on [-theta, theta]
  double gamma = 0.0;        // -max g' on [-theta, theta]
  double K = 0.0;            // max |g'(y)-g'(0)|/y^2, |g'''(y)-g'''(0)|/|y|
  double K_lipschitz = 0.0;  // max_j |g^(j)(y)-g^(j)(0)|/|y|, j = 0..3
  double slope_at_zero = 0.0;
  double K_bound() const { return K > K_lipschitz ? K : K_lipschitz; }
};

/// Sign scan of g' on a grid of step `step` over [-limit, limit] (limit <= 1 and within the
/// certified domain) refined by bisection. Throws HypothesisViolation if g'(0) >= 0 or if
/// g(0), g''(0) are not zero to rounding. Linear g: theta = inf, K = 0.
DampingConstants estimate_damping_constants(const DampingFunction& g, double step = 1e-3,
                                            double limit = 1.0);

}  // namespace kbkz

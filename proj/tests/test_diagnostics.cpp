#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>

#include "kbkz/diagnostics.hpp"
#include "kbkz/errors.hpp"

using namespace kbkz;
using std::numbers::pi;

TEST_CASE("Agmon constant") {
  CHECK(agmon_constant(1.0) == doctest::Approx(std::sqrt(3.0)));
  CHECK(agmon_constant(0.5) == doctest::Approx(std::sqrt(5.0)));
  CHECK(agmon_constant(4.0) == doctest::Approx(std::sqrt(3.0)));
  CHECK_THROWS_AS(agmon_constant(0.0), UsageError);
}

TEST_CASE("five-point third derivative is exact on quartics") {
  const double h = 0.1;
  std::vector<double> f(12), d(12);
  auto p = [](double x) { return 2.0 * x * x * x * x - x * x * x + 0.5 * x - 1.0; };
  for (int i = 0; i < 12; ++i) f[i] = p(i * h);
  third_derivative(f, h, d);
  for (int i = 0; i < 12; ++i) CHECK(d[i] == doctest::Approx(48.0 * i * h - 6.0).epsilon(1e-9));
  std::vector<double> small(4), out(4);
  CHECK_THROWS_AS(third_derivative(small, h, out), UsageError);
}

TEST_CASE("data measures against closed forms") {
  const SpatialGrid grid{1.0, 255};
  std::vector<double> v0(grid.nodes());
  for (std::size_t i = 0; i < v0.size(); ++i) v0[i] = std::sin(pi * grid.x(i));
  v0.front() = v0.back() = 0.0;

  // f = sin(pi x) phi(t), phi = t e^{-t}: every spatial integral is 1/2 or pi^2/2.
  Forcing f = [](double x, double t) { return std::sin(pi * x) * t * std::exp(-t); };
  const double dt = 1e-3, T = 2.0;
  const auto levels = static_cast<std::size_t>(std::lround(T / dt)) + 1;
  const auto d = data_measures(grid, v0, f, dt, levels);

  CHECK(d.V0 == doctest::Approx((1.0 + pi * pi + pi * pi * pi * pi) / 2.0).epsilon(1e-4));

  auto phi = [](double t) { return t * std::exp(-t); };
  auto dphi = [](double t) { return (1.0 - t) * std::exp(-t); };
  auto ddphi = [](double t) { return (t - 2.0) * std::exp(-t); };
  auto Phi = [](double t) { return 1.0 - (1.0 + t) * std::exp(-t); };
  const double c = (1.0 + pi * pi) / 2.0;
  auto pointwise = [&](double s) { return c * (phi(s) * phi(s) + Phi(s) * Phi(s)) + 0.5 * dphi(s) * dphi(s); };
  using boost::math::quadrature::gauss_kronrod;
  const double integral = gauss_kronrod<double, 61>::integrate(
      [&](double s) { return c * phi(s) * phi(s) + 0.5 * dphi(s) * dphi(s) + 0.5 * ddphi(s) * ddphi(s); },
      0.0, T, 10, 1e-14);
  double sup = 0.0;
  for (int i = 0; i <= 20000; ++i) sup = std::max(sup, pointwise(T * i / 20000.0));
  CHECK(d.F_total() == doctest::Approx(sup + integral).epsilon(1e-3));
  CHECK(d.F.size() == levels);
  for (std::size_t j = 1; j < levels; ++j) CHECK(d.F[j] >= d.F[j - 1]);
}

TEST_CASE("energy of a resting fluid is zero") {
  Solver s({1.0, 15}, RelaxationKernel::doi_edwards(100.0), DampingFunction::linear(-1.0),
           [](double) { return 0.0; }, {});
  s.run(0.3);
  const auto e = energy(s.state());
  for (double x : e.E) CHECK(x == 0.0);
  for (double x : e.nu) CHECK(x == 0.0);
  const auto d = diagnose(s);
  CHECK(d.E0 == 0.0);
  CHECK(d.E0_bound_ok);
  CHECK(d.monotone_ok);
  CHECK(d.lemma_ok);
}

TEST_CASE("certificate logic") {
  EnergyReport r;
  r.E = 0.01;
  r.sup_ux = 0.1;
  r.C_omega = std::sqrt(3.0);
  r.F = 0.0;
  r.V0 = 1.0;
  // E <= theta^2 / (4 C^2) = 1/12 and |u_x| <= theta/2
  auto f = check_certificates(r, 2.0, 1.0, 1.0, -1.0);
  CHECK(f.smallness_ok);
  CHECK(f.hyperbolicity_ok);
  CHECK(f.E0_bound_ok);  // 2 <= 2 (1 + 1) (0 + 1)
  f = check_certificates(r, 4.5, 1.0, 1.0, -1.0);
  CHECK_FALSE(f.E0_bound_ok);
  r.E = 0.1;
  r.sup_ux = 0.6;
  f = check_certificates(r, 0.0, 1.0, 1.0, -1.0);
  CHECK_FALSE(f.smallness_ok);
  CHECK_FALSE(f.hyperbolicity_ok);
}

TEST_CASE("a small linear run passes every certificate") {
  Solver s({1.0, 31}, RelaxationKernel::exponential(), DampingFunction::linear(-1.0),
           [](double x) { return 0.01 * std::sin(pi * x); }, {});
  s.run(1.0);
  DiagnosticsOptions o;
  o.every = 5;
  const auto d = diagnose(s, o);
  CHECK(d.rows.front().level == 0);
  CHECK(d.rows.back().level == s.state().level());
  CHECK(d.E0_bound_ok);
  CHECK(d.nu_bound_ok);
  CHECK(d.ux_bound_ok);
  CHECK(d.monotone_ok);
  CHECK(d.hyperbolicity_ok);
  CHECK(d.implication_ok);
  CHECK(d.C_omega == doctest::Approx(std::sqrt(3.0)));
  // E(0) is the H^2 norm of v0 plus the initial rates; it dominates V0
  CHECK(d.E0 >= d.data.V0);
  const std::string csv = d.csv();
  CHECK(csv.rfind("t,E,E1,nu,sup_ux,F,V0,C_omega,smallness_ok,", 0) == 0);
  CHECK(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) == d.rows.size() + 1);
}

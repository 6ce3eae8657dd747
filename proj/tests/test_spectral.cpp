#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <random>

#include "kbkz/errors.hpp"
#include "kbkz/spectral.hpp"

using namespace kbkz;

TEST_CASE("Fourier transform of the kernel") {
  const auto e = RelaxationKernel::exponential();
  const auto f = fourier_exact(e, 2.0);
  CHECK(f.real() == doctest::Approx(1.0 / 5.0));
  CHECK(f.imag() == doctest::Approx(-2.0 / 5.0));

  // direct quadrature of int_0^inf a(t) e^{-i omega t} dt
  const auto a = RelaxationKernel::doi_edwards(100.0);
  const double om = 3.0;
  using boost::math::quadrature::gauss_kronrod;
  const double re = gauss_kronrod<double, 61>::integrate(
      [&](double t) { return a.eval(t) * std::cos(om * t); }, 0.0, INFINITY, 15, 1e-14);
  const double im = gauss_kronrod<double, 61>::integrate(
      [&](double t) { return -a.eval(t) * std::sin(om * t); }, 0.0, INFINITY, 15, 1e-14);
  CHECK(fourier_exact(a, om).real() == doctest::Approx(re).epsilon(1e-10));
  CHECK(fourier_exact(a, om).imag() == doctest::Approx(im).epsilon(1e-10));
  // F a' = i omega F a - a(0)
  const auto fd = fourier_exact(a, om, 1);
  const auto want = std::complex<double>(0.0, om) * fourier_exact(a, om) - a.at_zero();
  CHECK(std::abs(fd - want) <= 1e-13);

  // at omega = 0 the untruncated kernel has the closed form
  const auto full = RelaxationKernel::doi_edwards(INFINITY);
  CHECK(fourier_exact(full, 0.0).real() == doctest::Approx(std::pow(M_PI, 4) / 96.0 - 1.0).epsilon(1e-13));
  CHECK_THROWS_AS(fourier_exact(full, 1.0), UsageError);
}

TEST_CASE("frequency grid") {
  const auto g = log_symmetric_grid(10, 1e-2, 1e2);
  CHECK(g.size() == 21);
  CHECK(g[10] == 0.0);
  CHECK(g[11] == doctest::Approx(1e-2));
  CHECK(g[20] == doctest::Approx(1e2));
  for (std::size_t i = 0; i < 10; ++i) CHECK(g[i] == -g[20 - i]);
  CHECK_THROWS_AS(log_symmetric_grid(1, 1.0, 2.0), UsageError);
}

TEST_CASE("strong positivity of the Doi-Edwards kernel") {
  const auto omega = log_symmetric_grid(5000, 1e-3, 1e6);
  for (double n : {100.0, 1e4}) {
    const auto a = RelaxationKernel::doi_edwards(n);
    const auto rep = check_strong_positivity(a, omega);
    CHECK(rep.pass);
    CHECK(rep.M1 >= 1.0 / 81.0 - 1e-12);
    CHECK(rep.constructive_consistent);
  }
  // one atom: (1 + omega^2) Re 1/(1 + i omega) = 1 exactly
  const auto rep = check_strong_positivity(RelaxationKernel::exponential(), omega);
  CHECK(rep.M1 == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("Parseval form agrees with the time-domain Q") {
  const auto a = RelaxationKernel::doi_edwards(400.0);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int s = 0; s < 5; ++s) {
    double c[4];
    for (double& x : c) x = U(rng);
    const auto w = TimeSignal::sample(1e-2, 201, [&](double t) {
      return c[0] + c[1] * std::sin(3 * t) + c[2] * std::cos(7 * t) + c[3] * t;
    });
    const double q = qform_exact(w, a);
    CHECK(parseval_qform(w, a) == doctest::Approx(q).epsilon(1e-6));
  }
}

TEST_CASE("inversion operator data") {
  const auto a = RelaxationKernel::doi_edwards(100.0);
  const int p = default_power(a, 1e-2);
  CHECK(p >= 2);
  CHECK(p <= 8);
  InversionOptions o;
  o.power = 2;
  const auto op = build_inversion(a, 1e-2, 101, o);
  CHECK(op.p == 2);
  CHECK(op.b0 == doctest::Approx(a.at_zero()));
  CHECK(op.B1.size() == 101);
  CHECK(op.B2_lag.size() >= 101);
  CHECK(op.B1_l1 > 0.0);
  CHECK(op.positivity_floor_margin > 0.5);
  const std::string csv = inversion_csv(op);
  CHECK(csv.rfind("t,B1,B2\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 102);
}

TEST_CASE("Garding ratio is bounded on smooth signals") {
  const auto a = RelaxationKernel::exponential();
  const auto w = TimeSignal::sample(1e-2, 301, [](double t) { return std::sin(2 * t) + 0.5; });
  const double r = garding_ratio(w, a, 1.0);
  CHECK(std::isfinite(r));
  CHECK(r > 0.0);
  CHECK(r < 10.0);
}

#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <numbers>

#include "kbkz/errors.hpp"
#include "kbkz/measure.hpp"
#include "kbkz/relaxation_kernel.hpp"

using namespace kbkz;
using std::numbers::pi;

namespace {

// Plain partial sum of the Doi-Edwards series for rates below n.
double de_sum(double t, int order, double n) {
  double s = 0.0;
  for (long k = 1;; ++k) {
    const double r = static_cast<double>((2 * k + 1) * (2 * k + 1));
    if (r >= n) break;
    s += std::pow(-r, order) * std::exp(-r * t) / r;
  }
  return s;
}

}  // namespace

TEST_CASE("truncated Doi-Edwards kernel equals its partial sums") {
  const auto a = RelaxationKernel::doi_edwards(100.0);
  CHECK(a.atoms().size() == 4);  // rates 9, 25, 49, 81
  CHECK(a.truncated());
  for (double t : {0.0, 0.01, 0.3, 2.0}) {
    for (int order = 0; order <= 3; ++order) {
      const double want = de_sum(t, order, 100.0);
      CHECK(a.eval(t, order) == doctest::Approx(want).epsilon(1e-14));
    }
  }
  CHECK(a.at_zero() == doctest::Approx(de_sum(0.0, 0, 100.0)).epsilon(1e-15));
}

TEST_CASE("untruncated Doi-Edwards constants") {
  const auto a = RelaxationKernel::doi_edwards(INFINITY);
  CHECK(a.has_tail());
  CHECK(std::fabs(a.eval(0.0) - (pi * pi / 8.0 - 1.0)) <= 1e-12);
  CHECK(std::fabs(a.l1_norm() - (std::pow(pi, 4) / 96.0 - 1.0)) <= 1e-12);
  // A long direct sum converges fast once t > 0.
  CHECK(a.eval(0.05) == doctest::Approx(de_sum(0.05, 0, 1e8)).epsilon(1e-11));
  CHECK_THROWS_AS(a.eval(-1.0), DomainError);
}

TEST_CASE("kernel derivatives match finite differences") {
  const auto a = RelaxationKernel::doi_edwards(1e4);
  const double t = 0.2, h = 1e-5;
  for (int order = 0; order < 3; ++order) {
    const double fd = (a.eval(t + h, order) - a.eval(t - h, order)) / (2.0 * h);
    CHECK(a.eval(t, order + 1) == doctest::Approx(fd).epsilon(1e-7));
  }
}

TEST_CASE("kernel scaling and fingerprints") {
  const auto a = RelaxationKernel::exponential(2.0, 3.0);
  CHECK(a.eval(0.5) == doctest::Approx(3.0 * std::exp(-1.0)));
  const auto b = a.scaled(2.0);
  CHECK(b.eval(0.5) == doctest::Approx(6.0 * std::exp(-1.0)));
  CHECK(a.fingerprint() != b.fingerprint());
  CHECK(a.fingerprint() == RelaxationKernel::exponential(2.0, 3.0).fingerprint());
}

TEST_CASE("measure hypotheses") {
  const auto de = check_measure_hypotheses(MeasureSpec::doi_edwards(), 0.25);
  CHECK(de.pass());
  // sum (2k+1)^{-2} (2k+1)^{2 gamma} diverges for gamma >= 1/2.
  const auto de_half = check_measure_hypotheses(MeasureSpec::doi_edwards(), 0.5);
  CHECK(de_half.inv_rho2_finite);
  CHECK_FALSE(de_half.rho_gamma_finite);

  const auto atoms = MeasureSpec::from_atoms({{1.0, 1.0}, {4.0, 0.5}});
  const auto r = check_measure_hypotheses(atoms, 0.5);
  CHECK(r.pass());
  CHECK(r.sum_inv_rho2 == doctest::Approx(1.0 + 0.5 / 16.0));
  CHECK(r.sum_rho_gamma == doctest::Approx(1.0 + 0.5 * 2.0));

  CHECK_THROWS_AS(MeasureSpec::from_atoms({{1.0, -1.0}}).validate(), DomainError);
  CHECK_THROWS_AS(MeasureSpec::from_atoms({}).validate(), DomainError);
}

TEST_CASE("abar and psi for one atom") {
  const auto a = RelaxationKernel::exponential(1.0, 1.0);
  // int_0^inf e^{-s} min(s, sqrt s) ds = (1 - 2/e) + Gamma(3/2, 1).
  const double gamma_32_1 = 0.5 * std::sqrt(pi) * boost::math::erfc(1.0) + std::exp(-1.0);
  const double abar = 1.0 - 2.0 * std::exp(-1.0) + gamma_32_1;
  const std::vector<double> t{0.0, 0.5, 2.0};
  const MemoryBound mb = psi_and_abar(a, t);
  CHECK(mb.abar == doctest::Approx(abar).epsilon(1e-12));

  auto r0 = [](double s) { return std::min(s, std::sqrt(s)); };
  auto f = [&](double s) { return std::exp(-s) * r0(s); };
  using boost::math::quadrature::gauss_kronrod;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double tail = gauss_kronrod<double, 61>::integrate(f, t[i], INFINITY, 15, 1e-14);
    CHECK(mb.psi[i] == doctest::Approx(f(t[i]) + 2.0 * tail).epsilon(1e-10));
  }
  // int psi = abar + 2 int s e^{-s} r0(s) ds
  const double second =
      gauss_kronrod<double, 61>::integrate([&](double s) { return s * f(s); }, 0.0, INFINITY, 15, 1e-14);
  CHECK(mb.psi_l1 == doctest::Approx(abar + 2.0 * second).epsilon(1e-10));
}

TEST_CASE("kernel CSV export") {
  const auto a = RelaxationKernel::exponential();
  const std::string csv = kernel_csv(a, 1.0, 3);
  CHECK(csv.rfind("t,a,a_t,a_tt\n0,1,-1,1\n", 0) == 0);
  CHECK_THROWS_AS(kernel_csv(RelaxationKernel::doi_edwards(INFINITY), 1.0, 3), UsageError);
}

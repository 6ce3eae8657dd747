#include <doctest.h>

#include <cmath>
#include <random>

#include "kbkz/errors.hpp"
#include "kbkz/spectral.hpp"
#include "kbkz/volterra.hpp"

using namespace kbkz;

TEST_CASE("time signals") {
  const auto w = TimeSignal::sample(0.5, 5, [](double t) { return t * t; });
  CHECK(w.t_end() == 2.0);
  CHECK(w[4] == 4.0);
  CHECK_THROWS_AS(TimeSignal(0.1, {1.0}).validate(), UsageError);
  CHECK_THROWS_AS(TimeSignal(0.0, {1.0, 2.0}).validate(), UsageError);

  // three-point derivative is exact on quadratics, ends included
  const auto d = derivative(w);
  for (std::size_t k = 0; k < d.size(); ++k) CHECK(d[k] == doctest::Approx(2.0 * w.t(k)));

  const auto dh = delta_h(w, 1.0);
  CHECK(dh.size() == 3);
  CHECK(dh[1] == doctest::Approx(2.25 - 0.25));
  CHECK_THROWS(delta_h(w, 0.3));

  const TimeSignal c(1.0, {1.0, -2.0, 2.0});
  CHECK(norm_linf(c) == 2.0);
  CHECK(norm_l1(c) == doctest::Approx(0.5 + 2.0 + 1.0));
  CHECK(norm_l2(c) == doctest::Approx(std::sqrt(0.5 + 4.0 + 2.0)));
}

TEST_CASE("convolutions against closed forms") {
  const double dt = 1e-2;
  const auto a = RelaxationKernel::exponential(2.0, 1.0);
  const auto one = TimeSignal::sample(dt, 201, [](double) { return 1.0; });
  // (e^{-2t} * 1)(t) = (1 - e^{-2t}) / 2, exact for piecewise-linear data
  const auto ex = convolve(a, one);
  for (std::size_t k = 0; k < ex.size(); k += 40) {
    CHECK(ex[k] == doctest::Approx(0.5 * (1.0 - std::exp(-2.0 * ex.t(k)))).epsilon(1e-13));
  }
  // (e^{-2t} * t)(t) = t/2 - (1 - e^{-2t})/4, also exact
  const auto ramp = TimeSignal::sample(dt, 201, [](double t) { return t; });
  const auto er = convolve(a, ramp);
  CHECK(er[200] == doctest::Approx(1.0 - 0.25 * (1.0 - std::exp(-4.0))).epsilon(1e-13));
  // derivative kernel: (a' * 1) = a(t) - a(0) = e^{-2t} - 1
  const auto ed = convolve(a, one, 1);
  CHECK(ed[100] == doctest::Approx(std::exp(-2.0) - 1.0).epsilon(1e-13));

  // trapezoid version, second order
  double prev = 0.0;
  for (int r = 0; r < 3; ++r) {
    const double h = 0.02 / (1 << r);
    const auto n = static_cast<std::size_t>(std::lround(1.0 / h)) + 1;
    const auto b = TimeSignal::sample(h, n, [](double t) { return std::exp(-2.0 * t); });
    const auto w = TimeSignal::sample(h, n, [](double t) { return std::cos(t); });
    // int_0^1 e^{-2(1-s)} cos s ds
    const double exact = (2.0 * std::cos(1.0) + std::sin(1.0) - 2.0 * std::exp(-2.0)) / 5.0;
    const double err = std::fabs(convolve(b, w).values.back() - exact);
    if (r > 0) CHECK(prev / err == doctest::Approx(4.0).epsilon(0.05));
    prev = err;
  }
}

TEST_CASE("Q-forms") {
  const auto a = RelaxationKernel::exponential();
  const auto one = TimeSignal::sample(1e-3, 1001, [](double) { return 1.0; });
  // int_0^1 (1 - e^{-s}) ds = e^{-1}
  CHECK(qform_exact(one, a) == doctest::Approx(std::exp(-1.0)).epsilon(1e-13));
  CHECK(qform(one, a) == doctest::Approx(std::exp(-1.0)).epsilon(1e-6));

  // a field that is the same signal at every node integrates to |Omega| Q
  const std::size_t nx = 5;
  std::vector<double> field(one.size() * nx, 1.0);
  CHECK(qform_field(field, nx, 0.25, 1e-3, a) == doctest::Approx(qform(one, a)).epsilon(1e-12));

  // positivity on random signals for the Doi-Edwards kernel
  const auto de = RelaxationKernel::doi_edwards(1e4);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> N;
  for (int s = 0; s < 10; ++s) {
    TimeSignal w(1e-2, std::vector<double>(200));
    for (auto& x : w.values) x = N(rng);
    CHECK(qform_exact(w, de) >= -1e-12);
  }
}

TEST_CASE("inversion of the exponential kernel reproduces w = l' + l") {
  const auto a = RelaxationKernel::exponential();
  const double dt = 1e-3;
  const std::size_t n = 1001;
  const auto op = build_inversion(a, dt, n);
  CHECK(op.b0 == 1.0);
  // w = 1 + t: l = b*w = t
  const auto l = TimeSignal::sample(dt, n, [](double t) { return t; });
  const auto r = invert(op, l);
  for (std::size_t k = 0; k < n; k += 100) CHECK(r.w[k] == doctest::Approx(1.0 + l.t(k)).epsilon(1e-6));
  CHECK(r.forward_residual < 1e-6);

  CHECK_THROWS_AS(invert(op, TimeSignal::sample(dt, n, [](double t) { return 1.0 + t; })), DomainError);
  CHECK_THROWS_AS(invert(op, TimeSignal::sample(2 * dt, 10, [](double t) { return t; })), UsageError);
  CHECK_THROWS_AS(build_inversion(a, dt, 1), UsageError);
}

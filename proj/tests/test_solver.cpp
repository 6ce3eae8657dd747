#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "kbkz/errors.hpp"
#include "kbkz/loops.hpp"
#include "kbkz/solver.hpp"
#include "kbkz/spectral.hpp"

using namespace kbkz;
using std::numbers::pi;

namespace {

// Single mode v = V(t) sin(pi x), exponential kernel, g(y) = -y:
// V' = -pi^2 z, z' = V - z (z is the fading strain), by classical RK4 on a fine step.
double mode_oracle(double amplitude, double t_end) {
  const double k2 = pi * pi;
  double V = amplitude, z = 0.0;
  const int n = 20000;
  const double h = t_end / n;
  auto fV = [&](double, double zz) { return -k2 * zz; };
  auto fz = [&](double vv, double zz) { return vv - zz; };
  for (int i = 0; i < n; ++i) {
    const double a1 = fV(V, z), b1 = fz(V, z);
    const double a2 = fV(V + 0.5 * h * a1, z + 0.5 * h * b1), b2 = fz(V + 0.5 * h * a1, z + 0.5 * h * b1);
    const double a3 = fV(V + 0.5 * h * a2, z + 0.5 * h * b2), b3 = fz(V + 0.5 * h * a2, z + 0.5 * h * b2);
    const double a4 = fV(V + h * a3, z + h * b3), b4 = fz(V + h * a3, z + h * b3);
    V += h / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4);
    z += h / 6.0 * (b1 + 2 * b2 + 2 * b3 + b4);
  }
  return V;
}

double mode_error(int N, double dt) {
  const double A = 0.01, T = 1.0;
  SolverOptions o;
  o.dt = dt;
  Solver s({1.0, N}, RelaxationKernel::exponential(), DampingFunction::linear(-1.0),
           [A](double x) { return A * std::sin(pi * x); }, {}, o);
  const auto r = s.run(T);
  REQUIRE(r.termination == Termination::completed);
  REQUIRE(std::fabs(s.state().time() - T) < 1e-12);
  const double V = mode_oracle(A, T);
  double err = 0.0, ref = 0.0;
  for (std::size_t i = 0; i < s.state().nodes(); ++i) {
    const double want = V * std::sin(pi * s.grid().x(i));
    err = std::max(err, std::fabs(s.state().v(s.state().level())[i] - want));
    ref = std::max(ref, std::fabs(want));
  }
  return err / ref;
}

}  // namespace

TEST_CASE("grid and state") {
  const SpatialGrid g{2.0, 9};
  CHECK(g.dx() == doctest::Approx(0.2));
  CHECK(g.nodes() == 11);
  CHECK_THROWS_AS((SpatialGrid{1.0, 4}.validate()), UsageError);

  std::vector<double> v0(g.nodes(), 0.0);
  v0[3] = 1.0;
  ShearState st(g, 0.1, v0);
  CHECK(st.levels() == 1);
  CHECK(st.mids() == 10);
  for (double x : st.u(0)) CHECK(x == 0.0);
  v0[0] = 1.0;
  CHECK_THROWS_AS(ShearState(g, 0.1, v0), DomainError);

  std::vector<double> u{0.0, 0.1, 0.4, 0.9}, U(3);
  midpoint_strain(u, 0.5, U);
  CHECK(U[0] == doctest::Approx(0.2));
  CHECK(U[2] == doctest::Approx(1.0));
}

TEST_CASE("memory weights match the hat-function integrals of a'") {
  const double h = 0.05;
  const auto a = RelaxationKernel::exponential();
  MemoryWeights W(a, h);
  W.ensure(10);
  const double hat = (std::exp(h) + std::exp(-h) - 2.0) / h;
  for (int m = 1; m < 10; ++m) CHECK(W.interior()[m] == doctest::Approx(-std::exp(-m * h) * hat).epsilon(1e-13));
  for (int k = 1; k < 10; ++k) {
    const double want = -std::exp(-(k - 1) * h) * (1.0 - std::exp(-h) - h * std::exp(-h)) / h;
    CHECK(W.endpoint(k) == doctest::Approx(want).epsilon(1e-13));
  }
  CHECK(W.endpoint(0) == 0.0);
}

TEST_CASE("grid derivatives are exact on quadratics, ends included") {
  std::vector<double> f(9), d1(9), d2(9);
  const double h = 0.25;
  for (int i = 0; i < 9; ++i) f[i] = 3.0 * (i * h) * (i * h) - (i * h) + 2.0;
  grid_derivative(f, h, 1, d1);
  grid_derivative(f, h, 2, d2);
  for (int i = 0; i < 9; ++i) {
    CHECK(d1[i] == doctest::Approx(6.0 * i * h - 1.0));
    CHECK(d2[i] == doctest::Approx(6.0));
  }
  std::vector<double> field(4 * 2);
  for (int j = 0; j < 4; ++j) field[j * 2] = field[j * 2 + 1] = std::pow(0.1 * j, 2);
  const auto ft = time_derivative(field, 2, 0.1, 1);
  for (int j = 0; j < 4; ++j) CHECK(ft[j * 2] == doctest::Approx(0.2 * j));
}

TEST_CASE("stable step and zero data") {
  const auto a = RelaxationKernel::doi_edwards(100.0);
  const auto g = DampingFunction::linear(-2.0);
  const SpatialGrid grid{1.0, 31};
  CHECK(stable_dt(grid, a, g, 0.5) == doctest::Approx(0.5 / 32.0 / std::sqrt(2.0 * a.at_zero())));

  Solver s(grid, a, DampingFunction::doi_edwards(), [](double) { return 0.0; }, {});
  const auto r = s.run(0.5);
  CHECK(r.termination == Termination::completed);
  for (double x : s.state().v_data()) CHECK(x == 0.0);
  for (double x : s.state().u_data()) CHECK(x == 0.0);
  for (double x : compute_stress(s.state(), s.kernel(), s.damping(), s.state().level())) CHECK(x == 0.0);
}

TEST_CASE("linear single mode follows the scalar oracle with second-order convergence") {
  const double e1 = mode_error(32, 0.01);
  const double e2 = mode_error(64, 0.005);
  CHECK(e1 < 1e-3);
  CHECK(e2 < 1e-3);
  CHECK(std::log2(e1 / e2) > 1.7);
}

TEST_CASE("constant forcing drives the velocity linearly at first") {
  SolverOptions o;
  o.dt = 1e-3;
  Solver s({1.0, 31}, RelaxationKernel::exponential(), DampingFunction::linear(-1.0),
           [](double) { return 0.0; }, [](double x, double t) { return std::sin(pi * x) * t; }, o);
  s.run(0.01);
  const auto& st = s.state();
  // v = t^2/2 sin(pi x) + O(t^4): the memory term only enters at third order.
  const double mid = st.v(st.level())[16];
  CHECK(mid == doctest::Approx(0.5 * 0.01 * 0.01 * std::sin(pi * 16.0 / 32.0)).epsilon(1e-3));
}

TEST_CASE("fast path reproduces the direct memory sum") {
  const auto a = RelaxationKernel::doi_edwards(100.0);
  const auto g = DampingFunction::polynomial({0.0, -1.0, 0.0, 0.5});
  auto v0 = [](double x) { return 0.05 * std::sin(pi * x) + 0.02 * std::sin(3 * pi * x); };
  SolverOptions direct, fast;
  direct.dt = fast.dt = 5e-3;
  fast.fast_path = true;
  Solver s1({1.0, 31}, a, g, v0, {}, direct), s2({1.0, 31}, a, g, v0, {}, fast);
  s1.run(0.5);
  s2.run(0.5);
  REQUIRE(s1.state().levels() == s2.state().levels());
  double diff = 0.0, ref = 0.0;
  for (std::size_t i = 0; i < s1.state().v_data().size(); ++i) {
    diff = std::max(diff, std::fabs(s1.state().v_data()[i] - s2.state().v_data()[i]));
    ref = std::max(ref, std::fabs(s1.state().v_data()[i]));
  }
  CHECK(diff <= 1e-13 * ref);
  // memory_rhs of the solver and the free function agree
  const auto m1 = s1.memory_rhs();
  const auto m2 = memory_rhs(s1.state(), s1.kernel(), s1.damping());
  for (std::size_t i = 0; i < m1.size(); ++i) CHECK(m1[i] == doctest::Approx(m2[i]).epsilon(1e-12));
}

TEST_CASE("hyperbolicity breach: abort and clamp policies") {
  const auto a = RelaxationKernel::doi_edwards(100.0);
  auto v0 = [](double x) { return 1.0 * std::sin(pi * x); };
  Solver s({1.0, 31}, a, DampingFunction::doi_edwards(), v0, {});
  const auto r = s.run(3.0);
  CHECK(r.termination == Termination::breach);
  CHECK(r.breach_x.has_value());
  CHECK(r.t_final < 3.0);
  CHECK(r.t_final == doctest::Approx(s.state().time()));

  SolverOptions o;
  o.breach = BreachPolicy::clamp;
  Solver c({1.0, 31}, a, DampingFunction::doi_edwards(), v0, {}, o);
  const auto rc = c.run(1.0);
  CHECK(rc.termination == Termination::completed);
  CHECK_FALSE(rc.conforming);
  CHECK(rc.breach_t.has_value());
  CHECK(c.damping().is_clamped());
}

TEST_CASE("oversized steps are reported as divergence") {
  SolverOptions o;
  o.dt = 0.3;
  Solver s({1.0, 31}, RelaxationKernel::doi_edwards(100.0), DampingFunction::linear(-1.0),
           [](double x) { return 0.01 * std::sin(pi * x); }, {}, o);
  const auto r = s.run(10.0);
  CHECK(r.termination == Termination::divergence);
  CHECK(r.t_final < 8.0);
  for (double x : s.state().v_data()) CHECK(std::isfinite(x));
}

TEST_CASE("remainder vanishes for linear g and is cubic for cubic g") {
  const auto a = RelaxationKernel::doi_edwards(100.0);
  SolverOptions o;
  o.dt = 5e-3;
  auto run = [&](const DampingFunction& g, double A) {
    Solver s({1.0, 31}, a, g, [A](double x) { return A * std::sin(pi * x); }, {}, o);
    s.run(0.2);
    return s;
  };
  const auto lin = run(DampingFunction::linear(-1.0), 0.1);
  RemainderEvaluator R(lin.state(), lin.kernel(), lin.damping());
  CHECK(R.vanishes());
  for (double x : R.G(lin.state().level())) CHECK(x == 0.0);

  // g = -y + y^3/2 with a tiny amplitude stays in the linear regime, where G ~ A^3.
  const auto g = DampingFunction::polynomial({0.0, -1.0, 0.0, 0.5});
  const auto s1 = run(g, 1e-3), s2 = run(g, 2e-3);
  const std::size_t k = s1.state().level();
  const auto G1 = remainder_G(s1.state(), s1.kernel(), s1.damping(), k);
  const auto G2 = remainder_G(s2.state(), s2.kernel(), s2.damping(), k);
  const auto Gt1 = remainder_Gt(s1.state(), s1.kernel(), s1.damping(), k);
  const auto Gt2 = remainder_Gt(s2.state(), s2.kernel(), s2.damping(), k);
  double num = 0, den = 0, numt = 0, dent = 0;
  for (std::size_t i = 0; i < G1.size(); ++i) {
    num += G2[i] * G1[i];
    den += G1[i] * G1[i];
    numt += Gt2[i] * Gt1[i];
    dent += Gt1[i] * Gt1[i];
  }
  REQUIRE(den > 0.0);
  CHECK(num / den == doctest::Approx(8.0).epsilon(1e-3));
  CHECK(numt / dent == doctest::Approx(8.0).epsilon(1e-3));
}

TEST_CASE("reconstructed v_xx matches finite differences on a linear run") {
  const auto a = RelaxationKernel::doi_edwards(100.0);
  const auto g = DampingFunction::linear(-1.0);
  auto v0 = [](double x) { return 0.1 * std::sin(pi * x); };
  Forcing f = [](double x, double t) { return std::sin(pi * x) * t * std::exp(-t); };
  SolverOptions o;
  o.dt = 4e-3;
  Solver s({1.0, 31}, a, g, v0, f, o);
  s.run(0.5);
  const auto& st = s.state();
  InversionOptions io;
  io.power = 2;
  const auto op = build_inversion(a, st.dt(), st.levels(), io);
  const auto vxx = reconstruct_vxx(st, a, op, g, f);
  const auto hist = nodal_history(st);
  double num = 0.0, den = 0.0;
  for (std::size_t j = 1; j < st.levels(); ++j) {
    for (std::size_t i = 1; i + 1 < st.nodes(); ++i) {
      const double d = vxx[j * st.nodes() + i] - hist.vxx[j * st.nodes() + i];
      num += d * d;
      den += hist.vxx[j * st.nodes() + i] * hist.vxx[j * st.nodes() + i];
    }
  }
  CHECK(std::sqrt(num / den) < 1e-2);

  // the operator must belong to this kernel and step
  const auto other = build_inversion(RelaxationKernel::exponential(), st.dt(), st.levels());
  CHECK_THROWS_AS(reconstruct_vxx(st, a, other, g, f), UsageError);
}

TEST_CASE("serial and OpenMP loops are bit-identical") {
  loops::set_threads(4);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(-0.3, 0.3);
  const std::size_t rows = 50, n = 37;
  std::vector<double> hist(rows * n), hist2(rows * n), cur(n), cur2(n), W(rows + 1);
  for (auto& x : hist) x = U(rng);
  for (auto& x : hist2) x = U(rng);
  for (auto& x : cur) x = U(rng);
  for (auto& x : cur2) x = U(rng);
  for (auto& x : W) x = U(rng);
  const loops::HistoryView view{hist.data(), rows, n}, view2{hist2.data(), rows, n};
  const auto g = DampingFunction::doi_edwards();
  std::vector<double> a(n), b(n);
  loops::serial::memory_sum(view, cur, W, 0.3, 0.7, g, a);
  loops::omp::memory_sum(view, cur, W, 0.3, 0.7, g, b);
  CHECK(a == b);
  loops::serial::remainder_sum(view, cur, view2, cur2, W, 0.3, 0.7, g, a);
  loops::omp::remainder_sum(view, cur, view2, cur2, W, 0.3, 0.7, g, b);
  CHECK(a == b);
  loops::serial::max_increment(view, cur, a);
  loops::omp::max_increment(view, cur, b);
  CHECK(a == b);

  const auto k = RelaxationKernel::doi_edwards(1e4);
  std::vector<double> c1(300), d1(300), c2(300), d2(300);
  loops::serial::product_weights(k.atoms(), 1, 1e-2, c1, d1);
  loops::omp::product_weights(k.atoms(), 1, 1e-2, c2, d2);
  CHECK(c1 == c2);
  CHECK(d1 == d2);
  std::vector<double> w(300), o1(300), o2(300);
  for (auto& x : w) x = U(rng);
  loops::serial::product_convolve(c1, d1, w, o1);
  loops::omp::product_convolve(c1, d1, w, o2);
  CHECK(o1 == o2);
  loops::serial::trapezoid_convolve(c1, w, 1e-2, o1);
  loops::omp::trapezoid_convolve(c1, w, 1e-2, o2);
  CHECK(o1 == o2);
  const auto om = log_symmetric_grid(100, 1e-2, 1e3);
  std::vector<std::complex<double>> f1(om.size()), f2(om.size());
  loops::serial::fourier_samples(k.atoms(), 0, om, f1);
  loops::omp::fourier_samples(k.atoms(), 0, om, f2);
  CHECK(f1 == f2);
  loops::set_threads(0);
}

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "kbkz/config.hpp"
#include "kbkz/errors.hpp"
#include "kbkz/io.hpp"

using namespace kbkz;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "kbkz_test_config" / name;
  fs::create_directories(p.parent_path());
  return p;
}

int error_line(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

std::string error_field(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "";
}

}  // namespace

TEST_CASE("number formatting round-trips") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(-0.0) == "0");
  CHECK(std::stod(format_double(M_PI)) == M_PI);
  const double r[] = {1.0, 0.5};
  CHECK(csv_row(r) == "1,0.5");
}

TEST_CASE("defaults and comments") {
  const auto c = parse_config("# comment\n; another\n[grid]\nnodes = 32 \n");
  CHECK(c.nodes == 32);
  CHECK(c.length == 1.0);
  CHECK(c.kernel.family == "doi-edwards");
  CHECK(c.dt == 0.0);
  CHECK(parse_config("[time]\ndt = auto\n").dt == 0.0);
}

TEST_CASE("canonical text round-trips") {
  const auto c = parse_config(
      "[run]\nname = rt\nseed = 42\n[kernel]\nfamily = atoms\nrates = 1, 4.5\nweights = 0.25, 3\n"
      "[damping]\nkind = polynomial\ncoefficients = 0, -1, 0, 0.5\n[grid]\nlength = 2\nnodes = 40\n"
      "[time]\nt_end = 0.7\ndt = 1e-3\n[initial]\nkind = gaussian-bump\namplitude = 0.1\n"
      "[output]\nprobes = 0.3, 1.7\nsnapshots = 0.1\n[solver]\nbreach_policy = clamp\n");
  const std::string text = to_ini(c);
  const auto back = parse_config(text);
  CHECK(back == c);
  CHECK(to_ini(back) == text);
  CHECK(back.kernel.rates == std::vector<double>{1.0, 4.5});
  CHECK(back.probes == std::vector<double>{0.3, 1.7});
  CHECK(config_hash(back) == config_hash(c));
  auto d = c;
  d.t_end = 0.8;
  CHECK(config_hash(d) != config_hash(c));
}

TEST_CASE("errors name the field and line") {
  CHECK(error_line("[grid]\nnodes = 32\nfoo = 1\n") == 3);
  CHECK(error_field("[grid]\nnodes = 32\nfoo = 1\n") == "grid.foo");
  CHECK(error_field("[nonsense]\na = 1\n") == "nonsense");
  CHECK(error_line("[kernel]\nfamily = atoms\nrates = 1, 2\nweights = 1, -1\n") == 4);
  CHECK(error_field("[kernel]\nfamily = atoms\nrates = 1\nweights = 0\n") == "kernel.weights");
  CHECK(error_field("[kernel]\nfamily = atoms\nrates = 1, 2\nweights = 1\n") == "kernel.weights");
  CHECK(error_field("[grid]\nlength = -1\n") == "grid.length");
  CHECK(error_field("[grid]\nnodes = 3.5\n") == "grid.nodes");
  CHECK(error_field("[time]\nt_end = abc\n") == "time.t_end");
  CHECK(error_field("[output]\nprobes = 0.5, 1.2\n") == "output.probes");
  CHECK(error_field("[solver]\nfast_path = maybe\n") == "solver.fast_path");
  CHECK(error_field("[damping]\nkind = linear\nslope = 1\n") == "damping.slope");
  CHECK(error_field("[inversion]\nresolutions = 1\n") == "inversion.resolutions");
  CHECK(error_line("[grid]\nnodes = 32\nnodes = 33\n") == 3);  // duplicate key
  CHECK(error_line("[grid\nnodes = 32\n") == 1);
  CHECK_THROWS_AS(load_config("/nonexistent/run.ini"), ConfigError);
}

TEST_CASE("builders") {
  const auto c = parse_config(
      "[kernel]\nfamily = atoms\nrates = 1, 9\nweights = 1, 0.5\n[damping]\nkind = linear\nslope = -2\n"
      "[grid]\nlength = 2\nnodes = 19\n[initial]\nkind = single-mode\namplitude = 0.5\nmode = 2\n"
      "[forcing]\nkind = single-mode\namplitude = 3\ndecay = 2\n[time]\ndt = 0.01\n");
  const auto k = make_kernel(c);
  CHECK(k.atoms().size() == 2);
  CHECK(k.eval(0.0) == doctest::Approx(1.5));
  CHECK(make_damping(c).slope_at_zero() == -2.0);
  const auto v0 = make_initial(c);
  CHECK(v0(0.5) == doctest::Approx(0.5 * std::sin(std::numbers::pi * 0.5)));
  const auto f = make_forcing(c);
  CHECK(f(0.5, 0.0) == 0.0);
  CHECK(f(0.5, 1.0) == doctest::Approx(3.0 * std::sin(std::numbers::pi * 0.25) * std::exp(-2.0)));
  CHECK(make_grid(c).dx() == doctest::Approx(0.1));
  CHECK(make_solver_options(c).dt == 0.01);
  CHECK_FALSE(make_forcing(parse_config("")));

  const auto bump = make_initial(parse_config("[initial]\nkind = gaussian-bump\namplitude = 2\ncenter = 0.3\nwidth = 0.1\n"));
  CHECK(bump(0.3) == doctest::Approx(2.0 * std::sin(std::numbers::pi * 0.3)));
  CHECK(bump(0.0) == 0.0);
}

TEST_CASE("tabulated inputs") {
  {
    std::ofstream(scratch("v0.csv")) << "x,v\n0,0\n0.5,1\n1,0\n";
    std::ofstream(scratch("f.csv")) << "# x,t,value on a full grid\n0,0,0\n1,0,0\n0,1,1\n1,1,3\n";
    std::ofstream(scratch("g.csv")) << "y,g\n";
    std::ofstream g(scratch("g.csv"), std::ios::app);
    for (int i = 0; i <= 20; ++i) {
      const double y = -1.0 + 0.1 * i;
      g << y << "," << -y << "\n";
    }
  }
  const auto c = parse_config(
      "[initial]\nkind = table\ntable = v0.csv\n[forcing]\nkind = table\ntable = f.csv\n"
      "[damping]\nkind = table\ntable = g.csv\ndegree = 3\n",
      scratch("").parent_path());
  const auto v0 = make_initial(c);
  CHECK(v0(0.25) == doctest::Approx(0.5));
  CHECK(v0(2.0) == 0.0);
  const auto f = make_forcing(c);
  CHECK(f(0.5, 0.5) == doctest::Approx(0.25 * (0.0 + 0.0 + 1.0 + 3.0)));  // bilinear
  CHECK(f(1.0, 5.0) == doctest::Approx(3.0));                            // clamped in t
  const auto g = make_damping(c);
  CHECK(g.slope_at_zero() == doctest::Approx(-1.0).epsilon(1e-10));

  std::ofstream(scratch("bad.csv")) << "x,v\n0,0\n0.5,abc\n";
  const auto bad = parse_config("[initial]\nkind = table\ntable = bad.csv\n", scratch("").parent_path());
  CHECK_THROWS_AS(make_initial(bad), ConfigError);
  std::ofstream(scratch("holes.csv")) << "0,0,0\n1,0,0\n0,1,1\n";
  const auto holes = parse_config("[forcing]\nkind = table\ntable = holes.csv\n", scratch("").parent_path());
  CHECK_THROWS_AS(make_forcing(holes), ConfigError);
}

TEST_CASE("every shipped config parses") {
  int n = 0;
  for (const auto& e : fs::recursive_directory_iterator(fs::path(KBKZ_SOURCE_DIR) / "configs")) {
    if (e.path().extension() != ".ini") continue;
    CAPTURE(e.path().string());
    if (e.path().filename() == "negative_weight.ini") {
      CHECK_THROWS_AS(load_config(e.path()), ConfigError);
    } else {
      const auto c = load_config(e.path());
      CHECK(parse_config(to_ini(c), c.base_dir) == c);
    }
    ++n;
  }
  CHECK(n >= 12);
}

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "kbkz/app.hpp"
#include "kbkz/io.hpp"

using namespace kbkz;
namespace fs = std::filesystem;

namespace {

const fs::path configs = fs::path(KBKZ_SOURCE_DIR) / "configs";

fs::path fresh(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "kbkz_test_app" / name;
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run(const std::string& cmd, const fs::path& config, const fs::path& out) {
  std::ostringstream log;
  return run_command(cmd, config, out, 0, log);
}

}  // namespace

TEST_CASE("simulate writes a self-contained run directory") {
  const auto out = fresh("linear");
  REQUIRE(run("simulate", configs / "simulate/linear_mode.ini", out) == exit_ok);
  const auto m = nlohmann::json::parse(slurp(out / "manifest.json"));
  CHECK(m["termination"] == "completed");
  CHECK(m["certificates"]["E0_bound_ok"] == true);
  for (const auto& f : m["files"]) CHECK(fs::exists(out / f.get<std::string>()));
  CHECK(fs::exists(out / "timing.json"));

  // the manifest alone is enough to re-run the scenario bit for bit
  const auto again = fresh("linear_rerun");
  fs::create_directories(again);
  write_text_file(again / "from_manifest.ini", m["config"].get<std::string>());
  REQUIRE(run("simulate", again / "from_manifest.ini", again) == exit_ok);
  for (const auto& f : m["files"]) {
    CHECK(slurp(out / f.get<std::string>()) == slurp(again / f.get<std::string>()));
  }
}

TEST_CASE("zero data gives all-zero fields") {
  const auto out = fresh("zero");
  REQUIRE(run("simulate", configs / "simulate/zero.ini", out) == exit_ok);
  std::istringstream probes(slurp(out / "probes.csv"));
  std::string line;
  std::getline(probes, line);
  CHECK(line == "t,v@0.25,u_x@0.25,sigma@0.25,v@0.5,u_x@0.5,sigma@0.5");
  int rows = 0;
  while (std::getline(probes, line)) {
    CHECK(line.substr(line.find(',')) == ",0,0,0,0,0,0");
    ++rows;
  }
  CHECK(rows > 2);
  CHECK(fs::exists(out / "snapshot_000.csv"));
  CHECK(fs::exists(out / "snapshot_001.csv"));
}

TEST_CASE("exit codes") {
  CHECK(run("simulate", configs / "simulate/large_strain.ini", fresh("breach")) == exit_breach);
  CHECK(run("simulate", configs / "simulate/huge_dt.ini", fresh("diverge")) == exit_divergence);
  CHECK(run("kernel-check", configs / "kernel-check/negative_weight.ini", fresh("neg")) == exit_config);
  CHECK(run("invert-demo", configs / "invert-demo/degenerate.ini", fresh("degenerate")) == exit_config);
  CHECK(run("simulate", configs / "missing.ini", fresh("missing")) == exit_config);
  CHECK(run("simulate", configs / "simulate/zero.ini", "") == exit_config);  // no output directory
  CHECK(run("frobnicate", configs / "simulate/zero.ini", fresh("unknown")) == exit_config);
  // a failed hypothesis of the damping function is a config-level failure
  const auto bad = fresh("bad_slope");
  fs::create_directories(bad);
  write_text_file(bad / "c.ini", "[damping]\nkind = polynomial\ncoefficients = 0, 1\n");
  CHECK(run("simulate", bad / "c.ini", bad) == exit_config);
}

TEST_CASE("kernel-check and invert-demo reports") {
  const auto kc = fresh("kc");
  REQUIRE(run("kernel-check", configs / "kernel-check/single_atom.ini", kc) == exit_ok);
  const auto r = nlohmann::json::parse(slurp(kc / "positivity.json"));
  CHECK(r["positivity"]["M1"].get<double>() == doctest::Approx(1.0));
  CHECK(r["pass"] == true);
  for (const char* f : {"kernel.csv", "psi.csv", "monotonicity.csv", "spectrum.csv", "inversion.csv"}) {
    CHECK(fs::exists(kc / f));
  }

  const auto inv = fresh("inv");
  REQUIRE(run("invert-demo", configs / "invert-demo/exponential.ini", inv) == exit_ok);
  const auto d = nlohmann::json::parse(slurp(inv / "report.json"));
  CHECK(d["observed_order"].get<double>() > 1.9);
  CHECK(d["runs"].size() == 3);

  // an impossible threshold turns the same run into a failed check
  const auto strict = fresh("inv_strict");
  fs::create_directories(strict);
  write_text_file(strict / "c.ini",
                  "[kernel]\nfamily = atoms\nrates = 1\nweights = 1\n[inversion]\norder_threshold = 3\n");
  CHECK(run("invert-demo", strict / "c.ini", strict) == exit_check_failed);
}

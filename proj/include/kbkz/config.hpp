#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "kbkz/damping.hpp"
#include "kbkz/relaxation_kernel.hpp"
#include "kbkz/solver.hpp"

namespace kbkz {

struct KernelConfig {
  std::string family = "doi-edwards";  // doi-edwards | atoms
  double truncation = 1e4;
  double gamma = 0.25;
  std::vector<double> rates, weights;
  double tail_tolerance = 1e-12;
  bool operator==(const KernelConfig&) const = default;
};

struct DampingConfig {
  std::string kind = "doi-edwards";  // doi-edwards | linear | polynomial | table
  double slope = -1.0;
  std::vector<double> coefficients;  // ascending powers
  std::string table;                 // CSV y,g
  int degree = 12;
  int n_polar = 128, n_azimuth = 256;
  double tolerance = 1e-9;
  bool operator==(const DampingConfig&) const = default;
};

/// Built-in profiles for v0(x) and f(x, t):
///   zero; single-mode: A sin(m pi x / L); gaussian-bump: A exp(-(x-c)^2 / (2 w^2)) sin(pi x / L);
///   table: CSV x,value (v0) or x,t,value on a full rectangular grid (f).
/// Forcing profiles are multiplied by t exp(-decay t), so f(., 0) = 0.
struct FieldConfig {
  std::string kind = "zero";
  double amplitude = 0.0;
  int mode = 1;
  double center = 0.5;
  double width = 0.1;
  double decay = 1.0;
  std::string table;
  bool operator==(const FieldConfig&) const = default;
};

struct RunConfig {
  std::string name = "run";
  std::uint64_t seed = 0;
  KernelConfig kernel;
  DampingConfig damping;
  // [grid]
  double length = 1.0;
  int nodes = 64;
  // [time]
  double t_end = 1.0;
  double dt = 0.0;  // 0 = auto
  double c_safety = 0.5;
  // [initial], [forcing]
  FieldConfig initial, forcing;
  // [output]
  std::vector<double> probes{0.5};
  std::vector<double> snapshots;
  int every = 1;
  std::string directory;
  // [solver]
  std::string breach_policy = "abort";  // abort | clamp
  bool fast_path = false;
  double growth_factor = 100.0;
  double overflow_factor = 1e6;
  // [diagnostics]
  double c_omega = 0.0;  // 0 = sqrt(max(2, 2/L) + 1)
  bool lemma_checks = true;
  double rel_tol = 1e-9;
  // [kernel_check]
  int omega_points = 10000;
  double omega_min = 1e-3, omega_max = 1e6;
  double sample_t_end = 5.0;
  int samples = 200;
  double check_dt = 1e-2;
  int check_steps = 200;
  // [inversion]
  double inversion_dt = 4e-3;
  double inversion_t_end = 1.0;
  int resolutions = 3;
  int power = 0;  // 0 = automatic
  double order_threshold = 1.7;

  /// Directory that relative table paths are resolved against (not serialized).
  std::filesystem::path base_dir;

  bool operator==(const RunConfig& o) const;
};

/// Parses INI text ("[section]" headers, "key = value", ';' or '#' comments).
/// Throws ConfigError naming the field and its line.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// Canonical INI text; parse_config(to_ini(c)) == c.
std::string to_ini(const RunConfig& config);

/// FNV-1a of the canonical text.
std::uint64_t config_hash(const RunConfig& config);

// ---- builders -----------------------------------------------------------------------------

RelaxationKernel make_kernel(const RunConfig& config);
DampingFunction make_damping(const RunConfig& config);
InitialData make_initial(const RunConfig& config);
Forcing make_forcing(const RunConfig& config);  // empty function for kind = zero
SolverOptions make_solver_options(const RunConfig& config);
SpatialGrid make_grid(const RunConfig& config);

}  // namespace kbkz

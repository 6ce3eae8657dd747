#include "kbkz/config.hpp"

#include <fmt/format.h>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "kbkz/errors.hpp"
#include "kbkz/io.hpp"
#include "kbkz/numeric.hpp"

namespace kbkz {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s{
      {"run", {"name", "seed"}},
      {"kernel", {"family", "truncation", "gamma", "rates", "weights", "tail_tolerance"}},
      {"damping",
       {"kind", "slope", "coefficients", "table", "degree", "n_polar", "n_azimuth", "tolerance"}},
      {"grid", {"length", "nodes"}},
      {"time", {"t_end", "dt", "c_safety"}},
      {"initial", {"kind", "amplitude", "mode", "center", "width", "decay", "table"}},
      {"forcing", {"kind", "amplitude", "mode", "center", "width", "decay", "table"}},
      {"output", {"probes", "snapshots", "every", "directory"}},
      {"solver", {"breach_policy", "fast_path", "growth_factor", "overflow_factor"}},
      {"diagnostics", {"c_omega", "lemma_checks", "rel_tol"}},
      {"kernel_check",
       {"omega_points", "omega_min", "omega_max", "sample_t_end", "samples", "dt", "steps"}},
      {"inversion", {"dt", "t_end", "resolutions", "power", "order_threshold"}},
  };
  return s;
}

// "section.key" -> 1-based line, from a light scan of the text (the parser itself is boost's).
std::map<std::string, int> key_lines(const std::string& text) {
  std::map<std::string, int> lines;
  std::istringstream in(text);
  std::string line, section;
  for (int no = 1; std::getline(in, line); ++no) {
    boost::trim(line);
    if (line.empty() || line[0] == ';' || line[0] == '#') continue;
    if (line.front() == '[' && line.back() == ']') {
      section = boost::trim_copy(line.substr(1, line.size() - 2));
      lines.emplace(section, no);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    lines.emplace(section + "." + boost::trim_copy(line.substr(0, eq)), no);
  }
  return lines;
}

class Reader {
 public:
  Reader(const pt::ptree& tree, std::map<std::string, int> lines)
      : tree_(tree), lines_(std::move(lines)) {}

  int line(const std::string& field) const {
    const auto it = lines_.find(field);
    return it == lines_.end() ? 0 : it->second;
  }
  [[noreturn]] void fail(const std::string& field, const std::string& what) const {
    throw ConfigError(field, line(field), what);
  }

  std::optional<std::string> raw(const std::string& field) const {
    const auto v = tree_.get_optional<std::string>(pt::ptree::path_type(field, '.'));
    if (!v) return std::nullopt;
    return boost::trim_copy(*v);
  }

  void get(const std::string& field, std::string& out) const {
    if (auto v = raw(field)) out = *v;
  }
  void get(const std::string& field, double& out) const {
    if (auto v = raw(field)) out = number(field, *v);
  }
  void get(const std::string& field, int& out) const {
    if (auto v = raw(field)) {
      const double d = number(field, *v);
      if (d != std::floor(d) || std::fabs(d) > 2e9) fail(field, fmt::format("'{}' is not an integer", *v));
      out = static_cast<int>(d);
    }
  }
  void get(const std::string& field, std::uint64_t& out) const {
    if (auto v = raw(field)) {
      try {
        std::size_t pos = 0;
        out = std::stoull(*v, &pos);
        if (pos != v->size()) throw std::invalid_argument(*v);
      } catch (const std::exception&) {
        fail(field, fmt::format("'{}' is not a non-negative integer", *v));
      }
    }
  }
  void get(const std::string& field, bool& out) const {
    if (auto v = raw(field)) {
      const std::string s = boost::to_lower_copy(*v);
      if (s == "true" || s == "1" || s == "yes") {
        out = true;
      } else if (s == "false" || s == "0" || s == "no") {
        out = false;
      } else {
        fail(field, fmt::format("'{}' is not a boolean", *v));
      }
    }
  }
  void get(const std::string& field, std::vector<double>& out) const {
    if (auto v = raw(field)) {
      out.clear();
      if (v->empty()) return;
      std::vector<std::string> parts;
      boost::split(parts, *v, boost::is_any_of(","));
      for (auto& p : parts) out.push_back(number(field, boost::trim_copy(p)));
    }
  }

  double number(const std::string& field, const std::string& s) const {
    if (s == "auto") return 0.0;
    try {
      std::size_t pos = 0;
      const double d = std::stod(s, &pos);
      if (pos != s.size() || !std::isfinite(d)) throw std::invalid_argument(s);
      return d;
    } catch (const std::exception&) {
      fail(field, fmt::format("'{}' is not a number", s));
    }
  }

 private:
  const pt::ptree& tree_;
  std::map<std::string, int> lines_;
};

void read_field(const Reader& r, const std::string& sec, FieldConfig& f) {
  r.get(sec + ".kind", f.kind);
  r.get(sec + ".amplitude", f.amplitude);
  r.get(sec + ".mode", f.mode);
  r.get(sec + ".center", f.center);
  r.get(sec + ".width", f.width);
  r.get(sec + ".decay", f.decay);
  r.get(sec + ".table", f.table);
}

void validate(const RunConfig& c, const Reader& r) {
  auto require = [&](bool ok, const std::string& field, const std::string& what) {
    if (!ok) r.fail(field, what);
  };
  require(c.kernel.family == "doi-edwards" || c.kernel.family == "atoms", "kernel.family",
          "must be doi-edwards or atoms");
  require(c.kernel.truncation > 0.0, "kernel.truncation", "must be positive");
  require(c.kernel.gamma > 0.0 && c.kernel.gamma < 1.0, "kernel.gamma", "must lie in (0, 1)");
  require(c.kernel.tail_tolerance > 0.0, "kernel.tail_tolerance", "must be positive");
  if (c.kernel.family == "atoms") {
    require(!c.kernel.rates.empty(), "kernel.rates", "atoms need at least one rate");
    require(c.kernel.rates.size() == c.kernel.weights.size(), "kernel.weights",
            "rates and weights differ in length");
    for (double x : c.kernel.rates) require(x > 0.0, "kernel.rates", "rates must be positive");
    for (double x : c.kernel.weights) {
      require(x > 0.0, "kernel.weights", fmt::format("weight {:.17g} is not positive", x));
    }
  }
  const auto& d = c.damping;
  require(d.kind == "doi-edwards" || d.kind == "linear" || d.kind == "polynomial" ||
              d.kind == "table",
          "damping.kind", "must be doi-edwards, linear, polynomial or table");
  if (d.kind == "linear") require(d.slope < 0.0, "damping.slope", "g'(0) must be negative");
  if (d.kind == "polynomial") require(!d.coefficients.empty(), "damping.coefficients", "empty");
  if (d.kind == "table") require(!d.table.empty(), "damping.table", "missing table path");
  require(d.degree >= 1, "damping.degree", "must be >= 1");
  require(d.n_polar >= 8 && d.n_azimuth >= 8, "damping.n_polar", "sphere rule too small");
  require(d.tolerance > 0.0, "damping.tolerance", "must be positive");
  require(c.length > 0.0, "grid.length", "must be positive");
  require(c.nodes >= 8, "grid.nodes", "need at least 8 interior nodes");
  require(c.t_end > 0.0, "time.t_end", "must be positive");
  require(c.dt >= 0.0, "time.dt", "must be positive (or auto)");
  require(c.c_safety > 0.0, "time.c_safety", "must be positive");
  for (const auto* sec : {"initial", "forcing"}) {
    const FieldConfig& f = std::string(sec) == "initial" ? c.initial : c.forcing;
    const std::string s(sec);
    require(f.kind == "zero" || f.kind == "single-mode" || f.kind == "gaussian-bump" ||
                f.kind == "table",
            s + ".kind", "must be zero, single-mode, gaussian-bump or table");
    require(f.mode >= 1, s + ".mode", "must be >= 1");
    require(f.width > 0.0, s + ".width", "must be positive");
    require(f.decay > 0.0, s + ".decay", "must be positive");
    if (f.kind == "table") require(!f.table.empty(), s + ".table", "missing table path");
  }
  for (double p : c.probes) {
    require(p > 0.0 && p < c.length, "output.probes", fmt::format("probe {:.17g} is outside (0, L)", p));
  }
  for (double t : c.snapshots) require(t >= 0.0, "output.snapshots", "times must be >= 0");
  require(c.every >= 1, "output.every", "must be >= 1");
  require(c.breach_policy == "abort" || c.breach_policy == "clamp", "solver.breach_policy",
          "must be abort or clamp");
  require(c.growth_factor > 1.0, "solver.growth_factor", "must exceed 1");
  require(c.overflow_factor > 1.0, "solver.overflow_factor", "must exceed 1");
  require(c.c_omega >= 0.0, "diagnostics.c_omega", "must be positive (or auto)");
  require(c.rel_tol >= 0.0, "diagnostics.rel_tol", "must be >= 0");
  require(c.omega_points >= 2, "kernel_check.omega_points", "need at least 2");
  require(c.omega_min > 0.0 && c.omega_max > c.omega_min, "kernel_check.omega_max",
          "need 0 < omega_min < omega_max");
  require(c.sample_t_end > 0.0, "kernel_check.sample_t_end", "must be positive");
  require(c.samples >= 2, "kernel_check.samples", "need at least 2");
  require(c.check_dt > 0.0, "kernel_check.dt", "must be positive");
  require(c.check_steps >= 2, "kernel_check.steps", "need at least 2");
  require(c.inversion_dt > 0.0, "inversion.dt", "must be positive");
  require(c.inversion_t_end > 0.0, "inversion.t_end", "must be positive");
  require(c.resolutions >= 2, "inversion.resolutions", "need at least 2 to measure an order");
  require(c.power == 0 || c.power >= 2, "inversion.power", "must be 0 (auto) or >= 2");
}

std::string list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_double(v[i]);
  return s;
}

}  // namespace

bool RunConfig::operator==(const RunConfig& o) const {
  return to_ini(*this) == to_ini(o);
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("", static_cast<int>(e.line()), e.message());
  }
  const Reader r(tree, key_lines(text));
  for (const auto& [section, body] : tree) {
    const auto it = schema().find(section);
    if (it == schema().end() || body.empty()) {
      r.fail(section, body.empty() ? "key outside any section" : "unknown section");
    }
    for (const auto& [key, value] : body) {
      if (!it->second.count(key)) r.fail(section + "." + key, "unknown key");
    }
  }

  RunConfig c;
  c.base_dir = base_dir;
  r.get("run.name", c.name);
  r.get("run.seed", c.seed);
  r.get("kernel.family", c.kernel.family);
  r.get("kernel.truncation", c.kernel.truncation);
  r.get("kernel.gamma", c.kernel.gamma);
  r.get("kernel.rates", c.kernel.rates);
  r.get("kernel.weights", c.kernel.weights);
  r.get("kernel.tail_tolerance", c.kernel.tail_tolerance);
  r.get("damping.kind", c.damping.kind);
  r.get("damping.slope", c.damping.slope);
  r.get("damping.coefficients", c.damping.coefficients);
  r.get("damping.table", c.damping.table);
  r.get("damping.degree", c.damping.degree);
  r.get("damping.n_polar", c.damping.n_polar);
  r.get("damping.n_azimuth", c.damping.n_azimuth);
  r.get("damping.tolerance", c.damping.tolerance);
  r.get("grid.length", c.length);
  r.get("grid.nodes", c.nodes);
  r.get("time.t_end", c.t_end);
  r.get("time.dt", c.dt);
  r.get("time.c_safety", c.c_safety);
  read_field(r, "initial", c.initial);
  read_field(r, "forcing", c.forcing);
  r.get("output.probes", c.probes);
  r.get("output.snapshots", c.snapshots);
  r.get("output.every", c.every);
  r.get("output.directory", c.directory);
  r.get("solver.breach_policy", c.breach_policy);
  r.get("solver.fast_path", c.fast_path);
  r.get("solver.growth_factor", c.growth_factor);
  r.get("solver.overflow_factor", c.overflow_factor);
  r.get("diagnostics.c_omega", c.c_omega);
  r.get("diagnostics.lemma_checks", c.lemma_checks);
  r.get("diagnostics.rel_tol", c.rel_tol);
  r.get("kernel_check.omega_points", c.omega_points);
  r.get("kernel_check.omega_min", c.omega_min);
  r.get("kernel_check.omega_max", c.omega_max);
  r.get("kernel_check.sample_t_end", c.sample_t_end);
  r.get("kernel_check.samples", c.samples);
  r.get("kernel_check.dt", c.check_dt);
  r.get("kernel_check.steps", c.check_steps);
  r.get("inversion.dt", c.inversion_dt);
  r.get("inversion.t_end", c.inversion_t_end);
  r.get("inversion.resolutions", c.resolutions);
  r.get("inversion.power", c.power);
  r.get("inversion.order_threshold", c.order_threshold);
  validate(c, r);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("", 0, fmt::format("cannot open config '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

std::string to_ini(const RunConfig& c) {
  const auto d = format_double;
  std::string s;
  auto section = [&](const char* name) { s += fmt::format("{}[{}]\n", s.empty() ? "" : "\n", name); };
  auto kv = [&](const char* key, const std::string& value) { s += fmt::format("{} = {}\n", key, value); };
  auto field = [&](const char* name, const FieldConfig& f) {
    section(name);
    kv("kind", f.kind);
    kv("amplitude", d(f.amplitude));
    kv("mode", std::to_string(f.mode));
    kv("center", d(f.center));
    kv("width", d(f.width));
    kv("decay", d(f.decay));
    kv("table", f.table);
  };
  section("run");
  kv("name", c.name);
  kv("seed", std::to_string(c.seed));
  section("kernel");
  kv("family", c.kernel.family);
  kv("truncation", d(c.kernel.truncation));
  kv("gamma", d(c.kernel.gamma));
  kv("rates", list(c.kernel.rates));
  kv("weights", list(c.kernel.weights));
  kv("tail_tolerance", d(c.kernel.tail_tolerance));
  section("damping");
  kv("kind", c.damping.kind);
  kv("slope", d(c.damping.slope));
  kv("coefficients", list(c.damping.coefficients));
  kv("table", c.damping.table);
  kv("degree", std::to_string(c.damping.degree));
  kv("n_polar", std::to_string(c.damping.n_polar));
  kv("n_azimuth", std::to_string(c.damping.n_azimuth));
  kv("tolerance", d(c.damping.tolerance));
  section("grid");
  kv("length", d(c.length));
  kv("nodes", std::to_string(c.nodes));
  section("time");
  kv("t_end", d(c.t_end));
  kv("dt", c.dt == 0.0 ? "auto" : d(c.dt));
  kv("c_safety", d(c.c_safety));
  field("initial", c.initial);
  field("forcing", c.forcing);
  section("output");
  kv("probes", list(c.probes));
  kv("snapshots", list(c.snapshots));
  kv("every", std::to_string(c.every));
  kv("directory", c.directory);
  section("solver");
  kv("breach_policy", c.breach_policy);
  kv("fast_path", c.fast_path ? "true" : "false");
  kv("growth_factor", d(c.growth_factor));
  kv("overflow_factor", d(c.overflow_factor));
  section("diagnostics");
  kv("c_omega", c.c_omega == 0.0 ? "auto" : d(c.c_omega));
  kv("lemma_checks", c.lemma_checks ? "true" : "false");
  kv("rel_tol", d(c.rel_tol));
  section("kernel_check");
  kv("omega_points", std::to_string(c.omega_points));
  kv("omega_min", d(c.omega_min));
  kv("omega_max", d(c.omega_max));
  kv("sample_t_end", d(c.sample_t_end));
  kv("samples", std::to_string(c.samples));
  kv("dt", d(c.check_dt));
  kv("steps", std::to_string(c.check_steps));
  section("inversion");
  kv("dt", d(c.inversion_dt));
  kv("t_end", d(c.inversion_t_end));
  kv("resolutions", std::to_string(c.resolutions));
  kv("power", std::to_string(c.power));
  kv("order_threshold", d(c.order_threshold));
  return s;
}

std::uint64_t config_hash(const RunConfig& config) {
  Fnv1a h;
  h.text(to_ini(config));
  return h.value();
}

// ---- builders -----------------------------------------------------------------------------

namespace {

std::filesystem::path resolve(const RunConfig& c, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || c.base_dir.empty() ? path : c.base_dir / path;
}

double interp(const std::vector<double>& x, const std::vector<double>& y, double q) {
  if (q <= x.front()) return y.front();
  if (q >= x.back()) return y.back();
  const auto it = std::upper_bound(x.begin(), x.end(), q);
  const std::size_t i = static_cast<std::size_t>(it - x.begin()) - 1;
  const double f = (q - x[i]) / (x[i + 1] - x[i]);
  return (1.0 - f) * y[i] + f * y[i + 1];
}

void require_increasing(const std::vector<double>& x, const std::string& field) {
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (!(x[i] > x[i - 1])) throw ConfigError(field, 0, "table abscissae must increase strictly");
  }
}

}  // namespace

RelaxationKernel make_kernel(const RunConfig& c) {
  KernelOptions o;
  o.truncation = c.kernel.truncation;
  o.tail_tolerance = c.kernel.tail_tolerance;
  if (c.kernel.family == "doi-edwards") {
    return RelaxationKernel(MeasureSpec::doi_edwards(c.kernel.gamma), o);
  }
  std::vector<Atom> atoms;
  for (std::size_t i = 0; i < c.kernel.rates.size(); ++i) {
    atoms.push_back({c.kernel.rates[i], c.kernel.weights[i]});
  }
  return RelaxationKernel(MeasureSpec::from_atoms(atoms, c.kernel.gamma), o);
}

DampingFunction make_damping(const RunConfig& c) {
  const auto& d = c.damping;
  if (d.kind == "linear") return DampingFunction::linear(d.slope);
  if (d.kind == "polynomial") return DampingFunction::polynomial(d.coefficients);
  if (d.kind == "table") {
    const auto rows = read_csv_table(resolve(c, d.table), 2);
    std::vector<double> y, g;
    for (const auto& r : rows) {
      y.push_back(r[0]);
      g.push_back(r[1]);
    }
    require_increasing(y, "damping.table");
    return DampingFunction::tabulated(y, g, d.degree);
  }
  GdeOptions o;
  o.n_polar = d.n_polar;
  o.n_azimuth = d.n_azimuth;
  o.tolerance = d.tolerance;
  return DampingFunction::doi_edwards(o);
}

InitialData make_initial(const RunConfig& c) {
  const FieldConfig& f = c.initial;
  const double L = c.length;
  if (f.kind == "zero") return [](double) { return 0.0; };
  if (f.kind == "single-mode") {
    return [A = f.amplitude, k = f.mode * pi / L](double x) { return A * std::sin(k * x); };
  }
  if (f.kind == "gaussian-bump") {
    return [A = f.amplitude, c0 = f.center, w = f.width, L](double x) {
      return A * std::exp(-(x - c0) * (x - c0) / (2.0 * w * w)) * std::sin(pi * x / L);
    };
  }
  const auto rows = read_csv_table(resolve(c, f.table), 2);
  std::vector<double> x, v;
  for (const auto& r : rows) {
    x.push_back(r[0]);
    v.push_back(r[1]);
  }
  require_increasing(x, "initial.table");
  return [x, v](double q) { return interp(x, v, q); };
}

Forcing make_forcing(const RunConfig& c) {
  const FieldConfig& f = c.forcing;
  const double L = c.length;
  if (f.kind == "zero") return {};
  const double decay = f.decay;
  if (f.kind == "single-mode") {
    return [A = f.amplitude, k = f.mode * pi / L, decay](double x, double t) {
      return A * std::sin(k * x) * t * std::exp(-decay * t);
    };
  }
  if (f.kind == "gaussian-bump") {
    return [A = f.amplitude, c0 = f.center, w = f.width, L, decay](double x, double t) {
      return A * std::exp(-(x - c0) * (x - c0) / (2.0 * w * w)) * std::sin(pi * x / L) * t *
             std::exp(-decay * t);
    };
  }
  // x,t,value on a full rectangular grid; bilinear, clamped at the edges.
  const auto rows = read_csv_table(resolve(c, f.table), 3);
  std::set<double> xs_set, ts_set;
  for (const auto& r : rows) {
    xs_set.insert(r[0]);
    ts_set.insert(r[1]);
  }
  std::vector<double> xs(xs_set.begin(), xs_set.end()), ts(ts_set.begin(), ts_set.end());
  if (xs.size() < 2 || ts.size() < 2 || xs.size() * ts.size() != rows.size()) {
    throw ConfigError("forcing.table", 0, "need a full rectangular (x, t) grid with >= 2 x 2 points");
  }
  std::vector<double> val(rows.size(), NAN);
  for (const auto& r : rows) {
    const auto i = static_cast<std::size_t>(std::lower_bound(xs.begin(), xs.end(), r[0]) - xs.begin());
    const auto j = static_cast<std::size_t>(std::lower_bound(ts.begin(), ts.end(), r[1]) - ts.begin());
    val[j * xs.size() + i] = r[2];
  }
  for (double v : val) {
    if (std::isnan(v)) throw ConfigError("forcing.table", 0, "duplicate (x, t) rows");
  }
  return [xs, ts, val](double x, double t) {
    const std::size_t nx = xs.size();
    std::vector<double> col(ts.size());
    std::vector<double> row(nx);
    const double tq = std::clamp(t, ts.front(), ts.back());
    const auto it = std::upper_bound(ts.begin(), ts.end(), tq);
    const std::size_t j = std::min<std::size_t>(static_cast<std::size_t>(it - ts.begin()), ts.size() - 1) - 1;
    const double f = (tq - ts[j]) / (ts[j + 1] - ts[j]);
    for (std::size_t i = 0; i < nx; ++i) row[i] = (1.0 - f) * val[j * nx + i] + f * val[(j + 1) * nx + i];
    return interp(xs, row, x);
  };
}

SolverOptions make_solver_options(const RunConfig& c) {
  SolverOptions o;
  o.dt = c.dt;
  o.c_safety = c.c_safety;
  o.breach = c.breach_policy == "clamp" ? BreachPolicy::clamp : BreachPolicy::abort;
  o.fast_path = c.fast_path;
  o.growth_factor = c.growth_factor;
  o.overflow_factor = c.overflow_factor;
  return o;
}

SpatialGrid make_grid(const RunConfig& c) { return {c.length, c.nodes}; }

}  // namespace kbkz

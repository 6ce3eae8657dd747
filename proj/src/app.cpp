#include "kbkz/app.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <ctime>
#include <json.hpp>
#include <ostream>

#include "kbkz/diagnostics.hpp"
#include "kbkz/errors.hpp"
#include "kbkz/io.hpp"
#include "kbkz/loops.hpp"
#include "kbkz/spectral.hpp"
#include "kbkz/volterra.hpp"

namespace kbkz {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

// JSON has no inf/nan; those go out as strings.
json num(double x) {
  if (std::isfinite(x)) return x == 0.0 ? 0.0 : x;
  return format_double(x);
}

std::string hex(std::uint64_t h) { return fmt::format("{:016x}", h); }

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json kernel_json(const RelaxationKernel& k) {
  return {{"description", k.describe()},
          {"atoms", k.atoms().size()},
          {"a0", num(k.at_zero())},
          {"l1_norm", num(k.l1_norm())},
          {"fingerprint", hex(k.fingerprint())}};
}

std::string utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_timing(const fs::path& out, const std::string& command, double seconds) {
  json t{{"command", command},
         {"started_utc", utc_now()},
         {"wall_seconds", seconds},
         {"threads", loops::threads()}};
  write_text_file(out / "timing.json", dump(t));
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Output levels: 0, every, 2 every, ..., and the last one.
std::vector<std::size_t> output_levels(std::size_t levels, std::size_t every) {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < levels; j += every) out.push_back(j);
  if (!out.empty() && out.back() != levels - 1) out.push_back(levels - 1);
  return out;
}

double interp_nodes(std::span<const double> f, double dx, double x) {
  const double s = x / dx;
  const auto i = std::min(static_cast<std::size_t>(s), f.size() - 2);
  const double a = s - static_cast<double>(i);
  return (1.0 - a) * f[i] + a * f[i + 1];
}

}  // namespace

// ---- simulate -----------------------------------------------------------------------------

int cmd_simulate(const RunConfig& c, const fs::path& out, std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  const SpatialGrid grid = make_grid(c);
  const RelaxationKernel a = make_kernel(c);
  const DampingFunction damping = make_damping(c);
  SolverOptions options = make_solver_options(c);
  if (options.dt == 0.0 && c.t_end > 0.0) {
    // auto step: the largest stable step that lands exactly on t_end
    const double h = stable_dt(grid, a, damping, options.c_safety);
    options.dt = c.t_end / std::ceil(c.t_end / h - 1e-9);
  }
  Solver solver(grid, a, damping, make_initial(c), make_forcing(c), options);
  log << fmt::format("simulate '{}': N={} dt={:.6g} t_end={:.6g}\n", c.name, grid.interior,
                     solver.dt(), c.t_end);
  const RunResult res = solver.run(c.t_end);
  const ShearState& st = solver.state();
  const RelaxationKernel& kernel = solver.kernel();
  const DampingFunction& g = solver.damping();
  const double dx = grid.dx();
  fs::create_directories(out);

  json files = json::array();
  auto emit = [&](const std::string& name, const std::string& text) {
    write_text_file(out / name, text);
    files.push_back(name);
  };
  emit("config.ini", to_ini(c));

  const auto rows = output_levels(st.levels(), static_cast<std::size_t>(c.every));
  const NodalHistory hist = nodal_history(st);

  std::string probes = "t";
  for (double p : c.probes) {
    const std::string at = format_double(p);
    probes += fmt::format(",v@{0},u_x@{0},sigma@{0}", at);
  }
  probes += '\n';
  for (std::size_t k : rows) {
    const auto sigma = compute_stress(st, kernel, g, k);
    std::vector<double> r{st.time(k)};
    for (double p : c.probes) {
      r.push_back(interp_nodes(st.v(k), dx, p));
      r.push_back(interp_nodes(hist.row(hist.ux, k), dx, p));
      r.push_back(interp_nodes(sigma, dx, p));
    }
    probes += csv_row(r) + '\n';
  }
  emit("probes.csv", probes);

  json snapshots = json::array();
  for (std::size_t s = 0; s < c.snapshots.size(); ++s) {
    const double ts = c.snapshots[s];
    const auto k = static_cast<std::size_t>(std::llround(ts / st.dt()));
    json entry{{"requested_t", num(ts)}};
    if (k >= st.levels()) {
      entry["file"] = nullptr;
      entry["reason"] = "beyond the last stored level";
      snapshots.push_back(entry);
      continue;
    }
    const auto sigma = compute_stress(st, kernel, g, k);
    std::string text = "x,t,v,u,u_x,sigma\n";
    for (std::size_t i = 0; i < st.nodes(); ++i) {
      const double r[] = {grid.x(i), st.time(k), st.v(k)[i], st.u(k)[i], hist.row(hist.ux, k)[i],
                          sigma[i]};
      text += csv_row(r) + '\n';
    }
    const std::string name = fmt::format("snapshot_{:03d}.csv", s);
    emit(name, text);
    entry["t"] = num(st.time(k));
    entry["file"] = name;
    snapshots.push_back(entry);
  }

  json certificates = nullptr;
  if (st.levels() >= 4) {
    DiagnosticsOptions dopt;
    dopt.c_omega = c.c_omega;
    dopt.every = static_cast<std::size_t>(c.every);
    dopt.lemma_checks = c.lemma_checks;
    dopt.rel_tol = c.rel_tol;
    const Diagnostics d = diagnose(solver, dopt);
    emit("energy.csv", d.csv());
    certificates = {{"C_omega", num(d.C_omega)},
                    {"theta", num(d.theta)},
                    {"K", num(d.K)},
                    {"abar", num(d.abar)},
                    {"E0", num(d.E0)},
                    {"F", num(d.data.F_total())},
                    {"V0", num(d.data.V0)},
                    {"E_final", num(d.rows.back().E)},
                    {"E0_bound_ok", d.E0_bound_ok},
                    {"smallness_ok", d.smallness_ok},
                    {"hyperbolicity_ok", d.hyperbolicity_ok},
                    {"implication_ok", d.implication_ok},
                    {"nu_bound_ok", d.nu_bound_ok},
                    {"ux_bound_ok", d.ux_bound_ok},
                    {"monotone_ok", d.monotone_ok},
                    {"lemma_ok", d.lemma_ok}};
  } else {
    log << "fewer than four stored levels: certificates skipped\n";
  }

  const DampingConstants& dc = solver.constants();
  json manifest{
      {"command", "simulate"},
      {"name", c.name},
      {"seed", c.seed},
      {"config_hash", hex(config_hash(c))},
      {"config", to_ini(c)},
      {"rerun", "kbkz simulate --config config.ini --out <dir>"},
      {"grid", {{"length", num(grid.length)}, {"interior_nodes", grid.interior}, {"dx", num(dx)}}},
      {"time", {{"dt", num(solver.dt())}, {"t_end", num(c.t_end)}, {"levels", st.levels()}}},
      {"kernel", kernel_json(kernel)},
      {"damping",
       {{"name", g.name()},
        {"slope_at_zero", num(dc.slope_at_zero)},
        {"theta", num(dc.theta)},
        {"gamma", num(dc.gamma)},
        {"K", num(dc.K_bound())}}},
      {"termination", to_string(res.termination)},
      {"t_final", num(res.t_final)},
      {"message", res.message},
      {"conforming", res.conforming},
      {"breach", res.breach_x ? json{{"x", num(*res.breach_x)},
                                     {"t", num(*res.breach_t)},
                                     {"value", num(*res.breach_value)}}
                              : json(nullptr)},
      {"certificates", certificates},
      {"snapshots", snapshots},
      {"timing_file", "timing.json"},
  };
  files.push_back("manifest.json");
  manifest["files"] = files;
  write_text_file(out / "manifest.json", dump(manifest));
  write_timing(out, "simulate", seconds_since(t0));

  log << fmt::format("termination: {} at t={:.6g}{}\n", to_string(res.termination), res.t_final,
                     res.message.empty() ? "" : " (" + res.message + ")");
  switch (res.termination) {
    case Termination::completed:
      return res.conforming ? exit_ok : exit_breach;
    case Termination::breach:
      return exit_breach;
    case Termination::divergence:
      return exit_divergence;
  }
  return exit_ok;
}

// ---- kernel-check -------------------------------------------------------------------------

int cmd_kernel_check(const RunConfig& c, const fs::path& out, std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  const RelaxationKernel kernel = make_kernel(c);
  fs::create_directories(out);

  const MeasureReport measure = check_measure_hypotheses(kernel.measure(), c.kernel.gamma);

  const auto omega = log_symmetric_grid(static_cast<std::size_t>(c.omega_points / 2),
                                        c.omega_min, c.omega_max);
  const PositivityReport pos = check_strong_positivity(kernel, omega);
  const SpectralProfile prof = spectral_profile(kernel, omega);
  std::string spectrum = "omega,re_Fa,im_Fa,weighted_re_Fa\n";
  for (std::size_t i = 0; i < omega.size(); ++i) {
    const double r[] = {omega[i], prof.fa[i].real(), prof.fa[i].imag(),
                        (1.0 + omega[i] * omega[i]) * prof.fa[i].real()};
    spectrum += csv_row(r) + '\n';
  }
  write_text_file(out / "spectrum.csv", spectrum);

  write_text_file(out / "kernel.csv", kernel_csv(kernel, c.sample_t_end, c.samples));

  // (-1)^k a^(k) >= 0 for k = 0..3 on the sample grid.
  bool monotone = true;
  double worst = INFINITY;
  std::string mono = "t,a,minus_a_t,a_tt,minus_a_ttt\n";
  std::vector<double> ts(static_cast<std::size_t>(c.samples));
  for (int i = 0; i < c.samples; ++i) {
    const double t = c.sample_t_end * i / (c.samples - 1);
    ts[static_cast<std::size_t>(i)] = t;
    const double r[] = {t, kernel.eval(t, 0), -kernel.eval(t, 1), kernel.eval(t, 2),
                        -kernel.eval(t, 3)};
    for (int k = 1; k < 5; ++k) {
      worst = std::min(worst, r[k]);
      monotone = monotone && r[k] >= 0.0;
    }
    mono += csv_row(r) + '\n';
  }
  write_text_file(out / "monotonicity.csv", mono);

  const MemoryBound mb = psi_and_abar(kernel, ts);
  std::string psi = "t,psi\n";
  bool psi_ok = std::isfinite(mb.abar) && std::isfinite(mb.psi_l1);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double r[] = {ts[i], mb.psi[i]};
    psi_ok = psi_ok && std::isfinite(mb.psi[i]) && mb.psi[i] >= 0.0;
    psi += csv_row(r) + '\n';
  }
  write_text_file(out / "psi.csv", psi);

  json inversion;
  bool inversion_ok = true;
  try {
    InversionOptions io;
    io.power = c.power;
    const InversionOperator op =
        build_inversion(kernel, c.check_dt, static_cast<std::size_t>(c.check_steps), io);
    write_text_file(out / "inversion.csv", inversion_csv(op));
    inversion = {{"dt", num(op.dt)},
                 {"n", op.n},
                 {"p", op.p},
                 {"B1_l1", num(op.B1_l1)},
                 {"B2_l1", num(op.B2_l1)},
                 {"ratio_sup", num(op.ratio_sup)},
                 {"tail_ratio", num(op.tail_ratio)},
                 {"positivity_floor_margin", num(op.positivity_floor_margin)}};
  } catch (const IllPosedError& e) {
    inversion_ok = false;
    inversion = {{"error", e.what()}};
  }

  const bool pass = measure.pass() && pos.pass && monotone && psi_ok && inversion_ok;
  json report{
      {"command", "kernel-check"},
      {"name", c.name},
      {"config_hash", hex(config_hash(c))},
      {"config", to_ini(c)},
      {"kernel", kernel_json(kernel)},
      {"measure",
       {{"gamma", num(measure.gamma)},
        {"sum_inv_rho2", num(measure.sum_inv_rho2)},
        {"sum_rho_gamma", num(measure.sum_rho_gamma)},
        {"inv_rho2_finite", measure.inv_rho2_finite},
        {"rho_gamma_finite", measure.rho_gamma_finite},
        {"ill_conditioned", measure.ill_conditioned},
        {"note", measure.note},
        {"pass", measure.pass()}}},
      {"positivity",
       {{"M1", num(pos.M1)},
        {"omega_at_min", num(pos.omega_at_min)},
        {"M1_constructive", num(pos.M1_constructive)},
        {"constructive_consistent", pos.constructive_consistent},
        {"grid_size", pos.grid_size},
        {"omega_min", num(c.omega_min)},
        {"omega_max", num(c.omega_max)},
        {"pass", pos.pass}}},
      {"monotonicity", {{"samples", c.samples}, {"min_signed_derivative", num(worst)}, {"pass", monotone}}},
      {"memory_bound", {{"abar", num(mb.abar)}, {"psi_l1", num(mb.psi_l1)}, {"pass", psi_ok}}},
      {"inversion", inversion},
      {"pass", pass},
      {"timing_file", "timing.json"},
      {"files",
       {"positivity.json", "spectrum.csv", "kernel.csv", "monotonicity.csv", "psi.csv",
        "inversion.csv"}},
  };
  write_text_file(out / "positivity.json", dump(report));
  write_timing(out, "kernel-check", seconds_since(t0));
  log << fmt::format("kernel-check '{}': M1={:.6g} abar={:.6g} -> {}\n", c.name, pos.M1, mb.abar,
                     pass ? "pass" : "FAIL");
  return pass ? exit_ok : exit_check_failed;
}

// ---- invert-demo --------------------------------------------------------------------------

namespace {

// int_0^t e^{-rho (t-s)} (cos 3s + s^2) ds in closed form.
double atom_response(double rho, double t) {
  const double e = std::exp(-rho * t);
  const double cos_part = (rho * std::cos(3.0 * t) + 3.0 * std::sin(3.0 * t) - rho * e) / (rho * rho + 9.0);
  const double poly_part =
      t * t / rho - 2.0 * t / (rho * rho) + 2.0 * (1.0 - e) / (rho * rho * rho);
  return cos_part + poly_part;
}

}  // namespace

int cmd_invert_demo(const RunConfig& c, const fs::path& out, std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  const RelaxationKernel kernel = make_kernel(c);
  if (kernel.has_tail()) throw UsageError("invert-demo needs a truncated kernel");
  fs::create_directories(out);

  auto w0 = [](double t) { return std::cos(3.0 * t) + t * t; };
  std::string table = "dt,n,rel_l2_error,forward_residual,order\n";
  std::vector<double> dts, errs;
  json runs = json::array();
  std::string operator_csv;
  for (int r = 0; r < c.resolutions; ++r) {
    const double dt = c.inversion_dt / std::ldexp(1.0, r);
    const auto n = static_cast<std::size_t>(std::floor(c.inversion_t_end / dt + 1e-9)) + 1;
    if (n < 2) {
      throw UsageError(fmt::format("inversion grid has a single point (dt={:.17g} > t_end={:.17g})",
                                   dt, c.inversion_t_end));
    }
    InversionOptions io;
    io.power = c.power;
    const InversionOperator op = build_inversion(kernel, dt, n, io);
    TimeSignal l = TimeSignal::sample(dt, n, [&](double t) {
      double s = 0.0;
      for (const Atom& a : kernel.atoms()) s += a.weight * atom_response(a.rate, t);
      return s;
    });
    l[0] = 0.0;
    const InversionResult res = invert(op, l);
    const TimeSignal exact = TimeSignal::sample(dt, n, w0);
    double num2 = 0.0, den2 = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double wk = k == 0 || k + 1 == n ? 0.5 : 1.0;
      num2 += wk * (res.w[k] - exact[k]) * (res.w[k] - exact[k]);
      den2 += wk * exact[k] * exact[k];
    }
    const double err = std::sqrt(num2 / den2);
    std::string order = "";
    if (!errs.empty()) order = format_double(std::log2(errs.back() / err) / std::log2(dts.back() / dt));
    table += fmt::format("{},{},{},{},{}\n", format_double(dt), n, format_double(err),
                         format_double(res.forward_residual), order);
    dts.push_back(dt);
    errs.push_back(err);
    runs.push_back({{"dt", num(dt)},
                    {"n", n},
                    {"p", op.p},
                    {"oversampling", op.oversampling},
                    {"rel_l2_error", num(err)},
                    {"forward_residual", num(res.forward_residual)}});
    operator_csv = inversion_csv(op);  // keep the finest
  }
  double order = INFINITY;
  for (std::size_t r = 1; r < errs.size(); ++r) {
    order = std::min(order, std::log2(errs[r - 1] / errs[r]) / std::log2(dts[r - 1] / dts[r]));
  }
  const bool pass = order >= c.order_threshold;
  write_text_file(out / "errors.csv", table);
  write_text_file(out / "operator.csv", operator_csv);
  json report{{"command", "invert-demo"},
              {"name", c.name},
              {"config_hash", hex(config_hash(c))},
              {"config", to_ini(c)},
              {"kernel", kernel_json(kernel)},
              {"signal", "w(t) = cos(3t) + t^2, l = b*w in closed form per atom"},
              {"runs", runs},
              {"observed_order", num(order)},
              {"order_threshold", num(c.order_threshold)},
              {"pass", pass},
              {"timing_file", "timing.json"},
              {"files", {"report.json", "errors.csv", "operator.csv"}}};
  write_text_file(out / "report.json", dump(report));
  write_timing(out, "invert-demo", seconds_since(t0));
  log << fmt::format("invert-demo '{}': finest error {:.3g}, order {:.3f} -> {}\n", c.name,
                     errs.back(), order, pass ? "pass" : "FAIL");
  return pass ? exit_ok : exit_check_failed;
}

// ---- dispatch -----------------------------------------------------------------------------

int run_command(const std::string& command, const fs::path& config_path, const fs::path& out,
                int threads, std::ostream& log) {
  try {
    if (threads > 0) loops::set_threads(threads);
    const RunConfig c = load_config(config_path);
    const fs::path dir = out.empty() ? fs::path(c.directory) : out;
    if (dir.empty()) throw UsageError("no output directory: pass --out or set [output] directory");
    if (command == "simulate") return cmd_simulate(c, dir, log);
    if (command == "kernel-check") return cmd_kernel_check(c, dir, log);
    if (command == "invert-demo") return cmd_invert_demo(c, dir, log);
    log << "unknown command '" << command << "'\n";
    return exit_config;
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return exit_config;
  } catch (const HyperbolicityBreach& e) {
    log << "hyperbolicity breach: " << e.what() << '\n';
    return exit_breach;
  } catch (const DivergenceError& e) {
    log << "divergence: " << e.what() << '\n';
    return exit_divergence;
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    return exit_config;
  } catch (const std::filesystem::filesystem_error& e) {
    log << "i/o error: " << e.what() << '\n';
    return exit_config;
  }
}

}  // namespace kbkz

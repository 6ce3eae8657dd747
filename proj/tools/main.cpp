#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>
#include <utility>

#include "kbkz/app.hpp"

namespace {

const char* footer = R"(Exit codes: 0 ok, 1 config/usage error, 2 hyperbolicity breach, 3 divergence,
4 kernel-check or invert-demo ran but a check failed.

Outputs (CSV numbers with 17 significant digits; JSON numbers round-trip exactly):
  simulate      manifest.json, config.ini, timing.json (wall time; the only non-deterministic file)
                probes.csv       t, then v@p, u_x@p, sigma@p for each probe p
                energy.csv       t, E, E1, nu, sup_ux, F, V0, C_omega, smallness_ok,
                                 hyperbolicity_ok, E0_bound_ok, nu_bound_ok, ux_bound_ok,
                                 implication_ok, lemma_i_ratio, lemma_ii_ratio, lemma_iii_ratio,
                                 lemma_ok
                snapshot_NNN.csv x, t, v, u, u_x, sigma
  kernel-check  positivity.json, timing.json
                kernel.csv       t, a, a_t, a_tt
                monotonicity.csv t, a, minus_a_t, a_tt, minus_a_ttt
                psi.csv          t, psi
                spectrum.csv     omega, re_Fa, im_Fa, weighted_re_Fa
                inversion.csv    t, B1, B2
  invert-demo   report.json, timing.json
                errors.csv       dt, n, rel_l2_error, forward_residual, order
                operator.csv     t, B1, B2 (finest grid)

Environment: KBKZ_THREADS sets the default thread count.)";

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shear-flow lab for K-BKZ fluids with Doi-Edwards memory"};
  app.footer(footer);
  app.require_subcommand(1);

  std::string config, out;
  int threads = 0;
  if (const char* env = std::getenv("KBKZ_THREADS")) threads = std::atoi(env);

  const std::pair<const char*, const char*> commands[] = {
      {"simulate", "integrate the shear-flow problem and its energy certificates"},
      {"kernel-check", "check a memory kernel: measure hypotheses, positivity, monotonicity, inversion"},
      {"invert-demo", "round-trip a known signal through the Volterra inversion at several resolutions"}};
  for (const auto& [name, description] : commands) {
    auto* sub = app.add_subcommand(name, description);
    sub->add_option("--config", config, "INI run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory (default: [output] directory)");
    sub->add_option("--threads", threads, "worker threads (default: $KBKZ_THREADS or OpenMP default)")
        ->check(CLI::NonNegativeNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kbkz::exit_config;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  return kbkz::run_command(command, config, out, threads, std::cerr);
}

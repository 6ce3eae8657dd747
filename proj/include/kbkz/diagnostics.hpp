#pragma once

#include <optional>
#include <string>
#include <vector>

#include "kbkz/damping.hpp"
#include "kbkz/relaxation_kernel.hpp"
#include "kbkz/solver.hpp"

namespace kbkz {

/// sqrt(max(2, 2/L) + 1), the constant of ||w||_inf^2 <= C^2 (||w||^2 + ||w'||^2) on (0, L).
double agmon_constant(double length);

/// Third derivative, second order: five-point centered inside, one-sided five-point stencils
/// at the two nodes next to each end. Exact on quartics.
void third_derivative(std::span<const double> f, double h, std::span<double> out);

/// v_t, v_xt, v_tt at t = 0 from the equation: f(0), f_x(0) and -g'(0) a(0) v0'' + f_t(0).
/// Differencing the stored history there would resolve the fastest relaxation atoms poorly.
struct InitialRates {
  std::vector<double> vt, vxt, vtt;
};
InitialRates initial_rates(const ShearState& state, const RelaxationKernel& kernel,
                           const DampingFunction& g, const Forcing& f);

/// Per stored level j (t_j = j dt):
///   E  = sup_{s<=t} int (v^2+v_x^2+v_t^2+v_xx^2+v_xt^2+v_tt^2+u^2+u_x^2+u_xx^2+u_xxx^2)
///        + int_0^t int (v^2+v_x^2+v_t^2+v_xx^2+v_xt^2+v_tt^2),
///   E1 = sup int (v^2+v_x^2+v_t^2+v_xt^2+v_tt^2) + int int (v^2+v_x^2+v_t^2+v_xt^2),
///   nu = sup_{x,s<=t} sqrt(v^2+v_x^2+v_t^2) + sqrt(int_0^t sup_x v_x^2),
///   sup_ux = sup_{x,s<=t} |u_x|.
/// Second-order differences, trapezoid in x and t. Needs at least four levels.
struct EnergySeries {
  std::vector<double> t, E, E1, nu, sup_ux;
};
EnergySeries energy(const ShearState& state, const InitialRates* initial = nullptr);

/// F(f) so far at each level and V0 = ||v0||_{H^2}^2, by difference quotients:
///   F(t) = sup_{s<=t} int [f^2+f_x^2+f_t^2+(int_0^s f)^2+(int_0^s f_x)^2]
///          + int_0^t int (f^2+f_x^2+f_t^2+f_tt^2).
struct DataMeasures {
  std::vector<double> F;  // per level; F.back() is the horizon value
  double V0 = 0.0;
  double F_total() const { return F.empty() ? 0.0 : F.back(); }
};
DataMeasures data_measures(const SpatialGrid& grid, std::span<const double> v0, const Forcing& f,
                           double dt, std::size_t levels);

struct CertificateFlags {
  bool smallness_ok = false;       // E <= theta^2 / (4 C^2)
  bool hyperbolicity_ok = false;   // sup |u_x| <= theta / 2
  bool E0_bound_ok = false;        // E(0) <= 2 [1 + a(0)^2 g'(0)^2] (F + V0)
};

/// One output row.
struct EnergyReport {
  std::size_t level = 0;
  double t = 0.0, E = 0.0, E1 = 0.0, nu = 0.0, sup_ux = 0.0, F = 0.0, V0 = 0.0, C_omega = 0.0;
  CertificateFlags flags;
  bool nu_bound_ok = false;    // nu <= C sqrt(E)
  bool ux_bound_ok = false;    // sup |u_x| <= C sqrt(E)
  bool implication_ok = true;  // smallness up to t  =>  hyperbolicity at t
  // Lemma 4.2 (i) j = 0, 1; (ii); (iii): worst ratio lhs / rhs over the grid (<= 1 passes).
  double lemma_i_ratio = 0.0, lemma_ii_ratio = 0.0, lemma_iii_ratio = 0.0;
  bool lemma_ok = true;
};

CertificateFlags check_certificates(const EnergyReport& report, double E0, double theta,
                                    double a0, double slope);

struct DiagnosticsOptions {
  double c_omega = 0.0;       // 0 = agmon_constant(L)
  std::size_t every = 1;      // output stride in levels (the last level is always reported)
  bool lemma_checks = true;
  double rel_tol = 1e-9;      // slack on the sampled inequalities
};

struct Diagnostics {
  std::vector<EnergyReport> rows;
  DataMeasures data;
  double C_omega = 0.0, theta = 0.0, K = 0.0, abar = 0.0, E0 = 0.0;
  // Conjunctions over all rows.
  bool E0_bound_ok = true, smallness_ok = true, hyperbolicity_ok = true, implication_ok = true;
  bool nu_bound_ok = true, ux_bound_ok = true, monotone_ok = true, lemma_ok = true;

  std::string csv() const;
};

/// Full certificate pass over a finished (or stopped) run.
Diagnostics diagnose(const Solver& solver, const DiagnosticsOptions& options = {});
Diagnostics diagnose(const ShearState& state, const RelaxationKernel& kernel,
                     const DampingFunction& g, const DampingConstants& constants, const Forcing& f,
                     const DiagnosticsOptions& options = {});

}  // namespace kbkz

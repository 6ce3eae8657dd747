#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "kbkz/relaxation_kernel.hpp"
#include "kbkz/volterra.hpp"

namespace kbkz {

/// sum weight (-rate)^order / (rate + i omega): the transform of a^(order) on (0, inf).
std::complex<double> fourier_exact(const RelaxationKernel& kernel, double omega, int order = 0);

/// n points per sign, geometric between omega_min and omega_max, mirrored, plus omega = 0.
std::vector<double> log_symmetric_grid(std::size_t n, double omega_min, double omega_max);

struct SpectralProfile {
  std::vector<double> omega;
  std::vector<std::complex<double>> fa;   // F a
  std::vector<std::complex<double>> fda;  // F a'
  double M1 = 0.0;
};

SpectralProfile spectral_profile(const RelaxationKernel& kernel, std::span<const double> omega);

struct PositivityReport {
  bool pass = false;
  double M1 = 0.0;              // min over the grid of (1 + omega^2) Re F a
  double omega_at_min = 0.0;
  double M1_constructive = 0.0;  // min over the grid of the best pair bound (see below)
  bool constructive_consistent = false;  // Re F a >= constructive bound everywhere on the grid
  std::size_t grid_size = 0;
};

/// (1 + omega^2) Re F a >= M1 on the grid, cross-checked against the bound
/// Re F a >= rho_i mu([rho_i, rho_j]) / (rho_j^2 + omega^2) over pairs of the lowest 64 atoms.
PositivityReport check_strong_positivity(const RelaxationKernel& kernel,
                                         std::span<const double> omega);

struct InversionOptions {
  int power = 0;                 // 0 = smallest p >= 2 meeting the frequency tail test
  double tail_tolerance = 1e-10;  // for the default p and the oversampling choice
  int min_oversampling = 4;
  int max_oversampling = 256;
  int asymptotic_terms = 4;
};

/// Data of the explicit inverse of w -> b*w on a uniform grid.
struct InversionOperator {
  double b0 = 0.0;  // b(0+)
  int p = 0;
  double dt = 0.0;
  std::size_t n = 0;     // grid points t_k = k dt, k < n
  int oversampling = 1;  // B2 fine grid step dt / oversampling
  std::vector<double> B1;       // on the dt grid
  std::vector<double> B2;       // on the dt grid
  std::vector<double> B2_fine;  // on the fine grid, length (n-1)*oversampling + 1
  // Fine trapezoid against linearly interpolated data, folded into lag weights:
  // (B2*l)(t_k) = B2_first[k] l_0 + sum_{0<q<k} B2_lag[k-q] l_q + B2_lag[0] l_k  (k >= 1).
  std::vector<double> B2_lag;
  std::vector<double> B2_first;
  double B1_l1 = 0.0;
  double B2_l1 = 0.0;
  double ratio_sup = 0.0;         // sup over the frequency grid of |(F b')^p / F b|
  double tail_ratio = 0.0;        // |F b'|^p / |F b| / |b0|^p at omega = pi/dt
  double positivity_floor_margin = 0.0;  // min |F b| (1+omega^2) / M1
  std::uint64_t kernel_fingerprint = 0;
  std::shared_ptr<const RelaxationKernel> kernel;
};

/// Smallest p in [2, 8] with |F b'|^p / |F b| / |b0|^p < tol at omega = pi/dt (8 if none).
int default_power(const RelaxationKernel& kernel, double dt, double tol = 1e-10);

/// Requires a truncated kernel, dt > 0, n >= 2. Throws IllPosedError when |F b| falls below
/// M1 / (2 (1 + omega^2)) on the check grid.
InversionOperator build_inversion(const RelaxationKernel& kernel, double dt, std::size_t n,
                                  const InversionOptions& options = {});

/// (1/2pi) int Re F a |F w~|^2 for the zero-extended piecewise-linear interpolant of w.
double parseval_qform(const TimeSignal& w, const RelaxationKernel& kernel, double rel_tol = 1e-12);

/// Ratio [int_0^t w^2(t) + int int w^2] / [Q(w)/M1 + Q(w_t)/M1 + w^2(0)] for one signal.
double garding_ratio(const TimeSignal& w, const RelaxationKernel& kernel, double M1);

std::string inversion_csv(const InversionOperator& op);

}  // namespace kbkz

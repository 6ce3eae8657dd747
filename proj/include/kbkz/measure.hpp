#pragma once

#include <string>
#include <vector>

namespace kbkz {

/// One Dirac mass of the relaxation measure: weight * delta_rate.
struct Atom {
  double rate;    // 1/time, > 0
  double weight;  // > 0
};

enum class MeasureFamily {
  explicit_atoms,
  doi_edwards,  // weight 1/(2k+1)^2 at rate (2k+1)^2, k >= 1
};

/// Positive finite measure on (0, inf) generating a totally monotone kernel.
struct MeasureSpec {
  MeasureFamily family = MeasureFamily::explicit_atoms;
  std::vector<Atom> atoms;  // used by explicit_atoms only
  double gamma = 0.25;      // exponent for the rho^gamma moment

  static MeasureSpec doi_edwards(double gamma = 0.25);
  static MeasureSpec from_atoms(std::vector<Atom> atoms, double gamma = 0.5);

  /// Throws DomainError on non-positive rates/weights, an empty atom list or gamma outside (0,1).
  void validate() const;
  std::string describe() const;
};

/// Outcome of the two moment conditions: sum w/rho^2 < inf and sum w*rho^gamma < inf.
struct MeasureReport {
  double gamma = 0.0;
  double sum_inv_rho2 = 0.0;
  double sum_rho_gamma = 0.0;
  bool inv_rho2_finite = false;
  bool rho_gamma_finite = false;
  bool ill_conditioned = false;
  std::string note;

  bool pass() const { return inv_rho2_finite && rho_gamma_finite; }
};

/// For explicit atoms both sums are finite; a huge sum w/rho^2 is flagged as ill-conditioned.
/// For the Doi-Edwards family convergence is decided analytically (p-series comparison) and
/// the sums are evaluated through the Hurwitz-type identity sum_{k>=1} (2k+1)^-s = (1-2^-s) zeta(s) - 1.
MeasureReport check_measure_hypotheses(const MeasureSpec& measure, double gamma,
                                       double ill_conditioned_threshold = 1e12);

}  // namespace kbkz

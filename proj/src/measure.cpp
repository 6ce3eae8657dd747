#include "kbkz/measure.hpp"

#include <boost/math/special_functions/zeta.hpp>
#include <cmath>
#include <sstream>

#include "kbkz/errors.hpp"

namespace kbkz {

MeasureSpec MeasureSpec::doi_edwards(double gamma) {
  MeasureSpec m;
  m.family = MeasureFamily::doi_edwards;
  m.gamma = gamma;
  return m;
}

MeasureSpec MeasureSpec::from_atoms(std::vector<Atom> atoms, double gamma) {
  MeasureSpec m;
  m.family = MeasureFamily::explicit_atoms;
  m.atoms = std::move(atoms);
  m.gamma = gamma;
  return m;
}

void MeasureSpec::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw DomainError("measure exponent gamma must lie in (0,1)");
  }
  if (family == MeasureFamily::doi_edwards) return;
  if (atoms.empty()) throw DomainError("measure has no atoms");
  for (const auto& a : atoms) {
    if (!(a.rate > 0.0) || !std::isfinite(a.rate)) {
      throw DomainError("atom rate must be finite and strictly positive");
    }
    if (!(a.weight > 0.0) || !std::isfinite(a.weight)) {
      throw DomainError("atom weight must be finite and strictly positive");
    }
  }
}

std::string MeasureSpec::describe() const {
  std::ostringstream os;
  os.precision(17);
  if (family == MeasureFamily::doi_edwards) {
    os << "doi-edwards(gamma=" << gamma << ")";
  } else {
    os << "atoms[" << atoms.size() << "](gamma=" << gamma << ")";
  }
  return os.str();
}

namespace {

// sum_{k>=1} (2k+1)^{-s} for s > 1.
double odd_zeta_tail(double s) {
  return (1.0 - std::pow(2.0, -s)) * boost::math::zeta(s) - 1.0;
}

}  // namespace

MeasureReport check_measure_hypotheses(const MeasureSpec& measure, double gamma,
                                       double ill_conditioned_threshold) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("gamma must lie in (0,1)");
  MeasureReport r;
  r.gamma = gamma;

  if (measure.family == MeasureFamily::doi_edwards) {
    // w * rho^beta = (2k+1)^{2 beta - 2}; converges iff 2 - 2 beta > 1.
    r.sum_inv_rho2 = odd_zeta_tail(6.0);
    r.inv_rho2_finite = true;
    const double s = 2.0 - 2.0 * gamma;
    if (s > 1.0) {
      r.sum_rho_gamma = odd_zeta_tail(s);
      r.rho_gamma_finite = true;
      r.note = "generated family: both moment series converge (p-series comparison)";
    } else {
      r.sum_rho_gamma = std::numeric_limits<double>::infinity();
      r.rho_gamma_finite = false;
      std::ostringstream os;
      os << "generated family: sum (2k+1)^(" << -s << ") diverges; need gamma < 1/2";
      r.note = os.str();
    }
    return r;
  }

  measure.validate();
  double s2 = 0.0, sg = 0.0;
  for (const auto& a : measure.atoms) {
    s2 += a.weight / (a.rate * a.rate);
    sg += a.weight * std::pow(a.rate, gamma);
  }
  r.sum_inv_rho2 = s2;
  r.sum_rho_gamma = sg;
  r.inv_rho2_finite = std::isfinite(s2);
  r.rho_gamma_finite = std::isfinite(sg);
  r.ill_conditioned = s2 > ill_conditioned_threshold;
  r.note = r.ill_conditioned ? "finite atomic measure; sum w/rho^2 is very large (slow atoms)"
                             : "finite atomic measure";
  return r;
}

}  // namespace kbkz

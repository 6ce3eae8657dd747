#include "kbkz/relaxation_kernel.hpp"

#include <fmt/format.h>

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>

#include "kbkz/errors.hpp"
#include "kbkz/numeric.hpp"

namespace kbkz {

namespace {

// (1/2) int_Y^inf y^-2 exp(-t y^2) dy: the midpoint-rule model of sum over odd y of y^-2 e^{-t y^2}
// (spacing 2) whose first node is Y+1.
double odd_tail_integral(double Y, double t) {
  if (!std::isfinite(Y)) return 0.0;
  if (t == 0.0) return 0.5 / Y;
  const double z = std::sqrt(t) * Y;
  if (z > 27.0) return 0.0;  // both terms below 1e-300
  return 0.5 * (std::exp(-z * z) / Y - std::sqrt(pi * t) * std::erfc(z));
}

}  // namespace

RelaxationKernel::RelaxationKernel(const MeasureSpec& measure, KernelOptions options)
    : measure_(measure), options_(options) {
  measure_.validate();
  if (!(options_.truncation > 0.0)) throw DomainError("truncation level must be positive");

  if (measure_.family == MeasureFamily::explicit_atoms) {
    for (const auto& a : measure_.atoms) {
      if (a.rate < options_.truncation) atoms_.push_back(a);
    }
    if (atoms_.empty()) throw DomainError("truncation removes every atom");
    std::stable_sort(atoms_.begin(), atoms_.end(),
                     [](const Atom& x, const Atom& y) { return x.rate < y.rate; });
  } else {
    // rate y^2, weight y^-2 for odd y >= 3.
    const double y_rate = std::isfinite(options_.truncation)
                              ? std::sqrt(options_.truncation)
                              : std::numeric_limits<double>::infinity();
    const double y_weight = 1.0 / std::sqrt(options_.weight_cutoff);
    double y = 3.0;
    while (y * y < options_.truncation && y <= y_weight) {
      atoms_.push_back({y * y, 1.0 / (y * y)});
      y += 2.0;
    }
    if (atoms_.empty()) throw DomainError("truncation removes every atom");
    if (y * y < options_.truncation) {
      has_tail_ = true;
      tail_first_odd_ = y;
      // Last retained odd number below sqrt(n); infinite when untruncated.
      double last = std::numeric_limits<double>::infinity();
      if (std::isfinite(y_rate)) {
        last = 2.0 * std::ceil((y_rate - 1.0) / 2.0) - 1.0;
        if (last * last >= options_.truncation) last -= 2.0;
      }
      tail_last_odd_ = last;
    }
  }
  finalize();
}

void RelaxationKernel::finalize() {
  suffix_max_weight_.assign(atoms_.size(), 0.0);
  double m = 0.0;
  for (std::size_t i = atoms_.size(); i-- > 0;) {
    m = std::max(m, atoms_[i].weight);
    suffix_max_weight_[i] = m;
  }
  CompensatedSum a0, l1;
  for (const auto& a : atoms_) {
    a0.add(a.weight);
    l1.add(a.weight / a.rate);
  }
  if (has_tail_) {
    a0.add(tail_value(0.0));
    const double lo = tail_first_odd_ - 1.0;
    const double hi = tail_last_odd_ + 1.0;
    l1.add(tail_scale_ * (1.0 / (6.0 * lo * lo * lo) -
                          (std::isfinite(hi) ? 1.0 / (6.0 * hi * hi * hi) : 0.0)));
  }
  a0_ = a0.value();
  l1_ = l1.value();

  Fnv1a h;
  for (const auto& a : atoms_) {
    h.real(a.rate);
    h.real(a.weight);
  }
  h.real(has_tail_ ? tail_first_odd_ : 0.0);
  h.real(has_tail_ ? tail_last_odd_ : 0.0);
  h.real(tail_scale_);
  fingerprint_ = h.value();
}

double RelaxationKernel::tail_value(double t) const {
  if (!has_tail_) return 0.0;
  return tail_scale_ * (odd_tail_integral(tail_first_odd_ - 1.0, t) -
                        odd_tail_integral(tail_last_odd_ + 1.0, t));
}

RelaxationKernel RelaxationKernel::exponential(double rate, double weight) {
  return RelaxationKernel(MeasureSpec::from_atoms({{rate, weight}}));
}

RelaxationKernel RelaxationKernel::doi_edwards(double truncation, double gamma) {
  KernelOptions o;
  o.truncation = truncation;
  return RelaxationKernel(MeasureSpec::doi_edwards(gamma), o);
}

double RelaxationKernel::tail_bound(double t, int order) const {
  if (!has_tail_) return 0.0;
  const double y0 = tail_first_odd_;
  if (order == 0) {
    // Midpoint-rule defect of a convex decreasing summand, bounded by its first derivative.
    return tail_scale_ * (1.0 / (3.0 * (y0 - 1.0) * (y0 - 1.0) * (y0 - 1.0)));
  }
  // Summand phi(y) = y^{2m-2} exp(-t y^2) decreases for y >= y0 iff 2 t y0^2 > 2m - 2.
  const double p = 2.0 * order - 2.0;
  const double c = 2.0 * t * y0 - p / y0;
  if (!(c > 0.0)) return std::numeric_limits<double>::infinity();
  const double phi = std::exp(p * std::log(y0) - t * y0 * y0);
  return tail_scale_ * (phi + 0.5 * phi / c);
}

double RelaxationKernel::eval(double t, int order) const {
  if (!(t >= 0.0)) throw DomainError(fmt::format("kernel evaluated at t={:.17g} < 0", t));
  if (order < 0 || order > 3) throw DomainError("derivative order must be in 0..3");

  double tail = 0.0;
  if (has_tail_) {
    if (order == 0) {
      tail = tail_value(t);
    } else {
      const double b = tail_bound(t, order);
      if (!(b <= options_.tail_tolerance)) {
        throw DomainError(fmt::format(
            "untruncated kernel: tail of derivative order {} at t={:.17g} is not below {:.3g}",
            order, t, options_.tail_tolerance));
      }
    }
  }

  const double sign = (order % 2 == 0) ? 1.0 : -1.0;
  CompensatedSum s;
  const std::size_t n = atoms_.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double r = atoms_[i].rate;
    const double e = std::exp(-r * t);
    double rp = 1.0;
    for (int k = 0; k < order; ++k) rp *= r;
    s.add(atoms_[i].weight * rp * e);
    // r^order e^{-r t} decreases for r > order/t, so the rest is bounded by count * max weight * term.
    if (t > 0.0 && r * t > order && (i & 63) == 63) {
      const double bound =
          static_cast<double>(n - i) * suffix_max_weight_[i] * rp * e;
      if (bound < 1e-18 * std::fabs(s.value()) || bound == 0.0) break;
    }
  }
  return sign * s.value() + tail;
}

void RelaxationKernel::eval_many(std::span<const double> t, int order,
                                 std::span<double> out) const {
  if (t.size() != out.size()) throw UsageError("eval_many: size mismatch");
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = eval(t[i], order);
}

RelaxationKernel RelaxationKernel::scaled(double c) const {
  if (!(c > 0.0)) throw DomainError("kernel scale must be positive");
  RelaxationKernel k = *this;
  for (auto& a : k.atoms_) a.weight *= c;
  k.tail_scale_ *= c;
  if (k.measure_.family == MeasureFamily::explicit_atoms) {
    for (auto& a : k.measure_.atoms) a.weight *= c;
  }
  k.finalize();
  return k;
}

std::string RelaxationKernel::describe() const {
  return fmt::format("{} truncation={:.17g} atoms={}{}", measure_.describe(), options_.truncation,
                     atoms_.size(), has_tail_ ? " +tail" : "");
}

std::string kernel_csv(const RelaxationKernel& kernel, double t_end, int samples) {
  if (samples < 2 || !(t_end > 0.0)) throw UsageError("kernel_csv: need >= 2 samples on (0, t_end]");
  if (kernel.has_tail()) throw UsageError("kernel_csv: kernel must be truncated");
  std::string out = "t,a,a_t,a_tt\n";
  for (int i = 0; i < samples; ++i) {
    const double t = t_end * i / (samples - 1);
    out += fmt::format("{:.17g},{:.17g},{:.17g},{:.17g}\n", t, kernel.eval(t, 0),
                       kernel.eval(t, 1), kernel.eval(t, 2));
  }
  return out;
}

}  // namespace kbkz

namespace kbkz {

namespace {

// int_t^inf w rho e^{-rho s} r0(s) ds for one atom.
double atom_r0_tail(const Atom& a, double t) {
  using boost::math::tgamma;
  using boost::math::tgamma_lower;
  const double r = a.rate;
  const double upper = a.weight * tgamma(1.5, r * std::max(t, 1.0)) / std::sqrt(r);
  if (t >= 1.0) return upper;
  // int_t^1 rho s e^{-rho s} ds = (Gamma(2, rho t) - Gamma(2, rho)) / rho
  double lin;
  if (r * t > 700.0) {
    lin = 0.0;
  } else if (r < 1.0) {
    lin = (tgamma_lower(2.0, r) - tgamma_lower(2.0, r * t)) / r;
  } else {
    lin = ((1.0 + r * t) * std::exp(-r * t) - (1.0 + r) * std::exp(-r)) / r;
  }
  return a.weight * lin + upper;
}

// int_0^inf s * w rho e^{-rho s} r0(s) ds.
double atom_r0_first_moment(const Atom& a) {
  using boost::math::tgamma;
  using boost::math::tgamma_lower;
  const double r = a.rate;
  return a.weight * (tgamma_lower(3.0, r) / (r * r) + tgamma(2.5, r) / std::pow(r, 1.5));
}

}  // namespace

double abs_derivative_r0_tail(const RelaxationKernel& kernel, double t) {
  if (!(t >= 0.0)) throw DomainError("abs_derivative_r0_tail: t < 0");
  if (kernel.has_tail()) throw UsageError("psi/abar need a truncated kernel");
  CompensatedSum s;
  for (const auto& a : kernel.atoms()) s.add(atom_r0_tail(a, t));
  return s.value();
}

MemoryBound psi_and_abar(const RelaxationKernel& kernel, std::span<const double> t) {
  if (kernel.has_tail()) throw UsageError("psi/abar need a truncated kernel");
  MemoryBound m;
  m.abar = abs_derivative_r0_tail(kernel, 0.0);
  CompensatedSum mom;
  for (const auto& a : kernel.atoms()) mom.add(atom_r0_first_moment(a));
  m.psi_l1 = m.abar + 2.0 * mom.value();
  m.t.assign(t.begin(), t.end());
  m.psi.resize(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double s = t[i];
    const double r0 = std::min(s, std::sqrt(s));
    m.psi[i] = -kernel.eval(s, 1) * r0 + 2.0 * abs_derivative_r0_tail(kernel, s);
  }
  return m;
}

}  // namespace kbkz

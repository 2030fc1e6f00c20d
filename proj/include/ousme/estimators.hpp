#pragma once

// Second-moment estimator, the normalized fluctuation, the drift maps f_H
// (closed form) and f_mu (numerical inverse of g_mu), standardization
// constants, and a sign checker for g', g'', g'''.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ousme/covariance.hpp"
#include "ousme/errors.hpp"
#include "ousme/quadrature.hpp"
#include "ousme/special.hpp"

namespace ousme {

/// (1/n) sum x_i^2.
inline double second_moment(std::span<const double> path) {
  if (path.empty()) throw DomainError("second_moment of an empty path");
  double acc = 0.0;
  for (double x : path) acc += x * x;
  return acc / static_cast<double>(path.size());
}

/// sqrt(Tn) (v - rho0).
inline double normalized_fluct(double v, double rho0, double Tn) {
  if (!(Tn > 0.0)) throw DomainError("normalized_fluct needs Tn > 0");
  return std::sqrt(Tn) * (v - rho0);
}

struct EstimatorResult {
  double v = 0.0;
  double V = 0.0;
  std::optional<double> drift_hat;  // empty when v <= 0
  double standardized = 0.0;
};

// ---------------------------------------------------------------------------
// fOU1 drift map

/// (H Gamma(2H) / x)^{1/(2H)}, the inverse of theta -> rho0_fou1(theta, H).
inline double f_H(double x, double hurst) {
  if (!(hurst > 0.0 && hurst < 0.75))
    throw DomainError("f_H requires H in (0, 3/4), got " + std::to_string(hurst));
  if (!(x > 0.0)) throw NonPositiveMoment("f_H needs a positive second moment");
  return std::pow(hurst * gamma_fn(2.0 * hurst) / x, 1.0 / (2.0 * hurst));
}

// ---------------------------------------------------------------------------
// fOU2: g_mu(x) = rho0_fou2(x, H) and its derivatives

struct GmuValue {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

namespace detail {

inline void require_gmu(double x, double hurst) {
  if (!(hurst > 0.5 && hurst < 1.0))
    throw DomainError("g_mu requires H in (1/2, 1), got " + std::to_string(hurst));
  if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("g_mu requires x > 0");
}

inline double gmu_value_unchecked(double x, double hurst) {
  return (2.0 * hurst - 1.0) * std::pow(hurst, 2.0 * hurst) *
         beta_fn(1.0 - hurst + x * hurst, 2.0 * hurst - 1.0) / x;
}

/// int_0^1 P(log t) t^{xH-H} (1-t)^{2H-2} dt for the weights P of g' and g''.
/// With t = e^{-v} the singular endpoint moves to v = 0, where v = s^q,
/// q = 1/(2H-1), leaves a bounded integrand.
template <class Weight>
double gmu_weighted_integral(double x, double hurst, Weight weight) {
  const double a = 1.0 - hurst + x * hurst;  // exponent of e^{-v}
  const double q = 1.0 / (2.0 * hurst - 1.0);
  const double e = 2.0 * hurst - 2.0;
  const QuadratureOptions opt{1e-12, 1e-300, 4000};

  // (1 - e^{-v})^{2H-2} = v^{2H-2} ((1 - e^{-v}) / v)^{2H-2}
  auto smooth = [&](double v) {
    const double ratio = v > 0.0 ? -std::expm1(-v) / v : 1.0;
    return weight(-v) * std::exp(-a * v) * std::pow(ratio, e);
  };
  auto near = [&](double s) { return q * smooth(std::pow(s, q)); };
  auto far = [&](double v) { return weight(-v) * std::exp(-a * v) * std::pow(-std::expm1(-v), e); };

  const double v_max = 1.0 + 60.0 / a;
  const QuadratureResult r_near = integrate(near, 0.0, 1.0, opt);
  const QuadratureResult r_far = integrate(far, 1.0, v_max, opt);
  return r_near.value + r_far.value;
}

inline double gmu_d1_unchecked(double x, double hurst) {
  const double c = (2.0 * hurst - 1.0) * std::pow(hurst, 2.0 * hurst);
  return c * gmu_weighted_integral(x, hurst, [&](double log_t) {
           return -1.0 / (x * x) + hurst * log_t / x;
         });
}

inline double gmu_d2_unchecked(double x, double hurst) {
  const double c = (2.0 * hurst - 1.0) * std::pow(hurst, 2.0 * hurst);
  return c * gmu_weighted_integral(x, hurst, [&](double log_t) {
           return 2.0 / (x * x * x) - 2.0 * hurst * log_t / (x * x) +
                  hurst * hurst * log_t * log_t / x;
         });
}

}  // namespace detail

/// Value by the closed-form Beta function; derivatives by quadrature of the
/// differentiated Beta integral.
inline GmuValue g_mu(double x, double hurst) {
  detail::require_gmu(x, hurst);
  return {detail::gmu_value_unchecked(x, hurst), detail::gmu_d1_unchecked(x, hurst),
          detail::gmu_d2_unchecked(x, hurst)};
}

struct InvertOptions {
  double bracket_lo = 0x1.0p-20;
  double bisect_rel = 1e-10;
  double residual_rel = 1e-12;
  int max_newton = 50;
};

/// mu with g_mu(mu) = x. g_mu is strictly decreasing, so the root is unique.
inline double invert_f_mu(double x, double hurst, const InvertOptions& opt = {}) {
  if (!(hurst > 0.5 && hurst < 1.0))
    throw DomainError("invert_f_mu requires H in (1/2, 1), got " + std::to_string(hurst));
  if (!(x > 0.0) || !std::isfinite(x))
    throw OutOfRange("invert_f_mu: x must be positive and finite");
  auto g = [&](double m) { return detail::gmu_value_unchecked(m, hurst); };

  double lo = opt.bracket_lo;
  if (g(lo) < x)
    throw OutOfRange("invert_f_mu: x exceeds g_mu on the search range (mu < 2^-20)");
  double hi = 1.0;
  while (g(hi) > x) {
    lo = hi;
    hi *= 2.0;
    if (hi > 0x1.0p+60) throw OutOfRange("invert_f_mu: x below the range of g_mu");
  }

  while (hi - lo > opt.bisect_rel * hi) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) > x ? lo : hi) = mid;
  }

  double mu = 0.5 * (lo + hi);
  const double target = opt.residual_rel * std::max(1.0, x);
  for (int it = 0; it < opt.max_newton; ++it) {
    const double r = g(mu) - x;
    if (std::abs(r) <= target) return mu;
    (r > 0.0 ? lo : hi) = mu;
    double next = mu - r / detail::gmu_d1_unchecked(mu, hurst);
    if (!(next >= lo && next <= hi)) next = 0.5 * (lo + hi);
    if (next == mu) break;
    mu = next;
  }
  if (std::abs(g(mu) - x) <= target) return mu;
  throw NumericalError("invert_f_mu: residual did not reach tolerance");
}

// ---------------------------------------------------------------------------
// Standardization

struct StandardizationConstants {
  double sigma_limit = 0.0;  // sqrt(sigma^2)
  double fprime_abs = 0.0;   // |f'(rho(0))|
  double scale = 0.0;
};

/// |f_H'(rho0)| = theta^{2H+1} / (2 H^2 Gamma(2H)).
inline StandardizationConstants standardize_fou1(double theta, double hurst, double sigma_H) {
  detail::require_fou1(theta, hurst);
  if (!(sigma_H > 0.0)) throw DomainError("standardize_fou1 needs sigma > 0");
  StandardizationConstants s;
  s.sigma_limit = sigma_H;
  s.fprime_abs = std::pow(theta, 2.0 * hurst + 1.0) / (2.0 * hurst * hurst * gamma_fn(2.0 * hurst));
  s.scale = s.sigma_limit * s.fprime_abs;
  return s;
}

/// |f_mu'(rho0)| = 1 / |g_mu'(mu)|.
inline StandardizationConstants standardize_fou2(double mu, double hurst, double sigma_mu) {
  detail::require_fou2(mu, hurst);
  if (!(sigma_mu > 0.0)) throw DomainError("standardize_fou2 needs sigma > 0");
  StandardizationConstants s;
  s.sigma_limit = sigma_mu;
  s.fprime_abs = 1.0 / std::abs(detail::gmu_d1_unchecked(mu, hurst));
  s.scale = s.sigma_limit * s.fprime_abs;
  return s;
}

// ---------------------------------------------------------------------------
// Sign hypotheses g' < 0, g'' > 0, g''' < 0

struct ConditionCheck {
  bool pass = true;
  double worst_x = std::numeric_limits<double>::quiet_NaN();
  double worst_value = std::numeric_limits<double>::quiet_NaN();
};

struct HypothesisReport {
  ConditionCheck d1_negative;
  ConditionCheck d2_positive;
  ConditionCheck d3_negative;
  bool all_pass() const { return d1_negative.pass && d2_positive.pass && d3_negative.pass; }
};

using GEvaluator = std::function<GmuValue(double)>;

/// Probes a uniform grid of [lo, hi]; g''' by central differences of g''
/// with step 1e-4 x. worst_* records the point with the largest violation,
/// or the point closest to violating when the condition holds.
inline HypothesisReport hypothesis_check(const GEvaluator& g, double lo, double hi,
                                         int probe_count) {
  if (probe_count < 3) throw DomainError("hypothesis_check needs at least 3 probes");
  if (!(lo < hi)) throw DomainError("hypothesis_check needs lo < hi");
  HypothesisReport rep;
  // signed margin: positive means the condition holds
  double m1 = std::numeric_limits<double>::infinity();
  double m2 = m1;
  double m3 = m1;
  auto track = [](ConditionCheck& c, double& margin, double x, double value, double signed_margin) {
    if (signed_margin < margin) {
      margin = signed_margin;
      c.worst_x = x;
      c.worst_value = value;
    }
    if (!(signed_margin > 0.0)) c.pass = false;
  };
  for (int i = 0; i < probe_count; ++i) {
    const double x = lo + (hi - lo) * i / (probe_count - 1);
    const GmuValue v = g(x);
    const double h = 1e-4 * x;
    const double d3 = (g(x + h).d2 - g(x - h).d2) / (2.0 * h);
    track(rep.d1_negative, m1, x, v.d1, -v.d1);
    track(rep.d2_positive, m2, x, v.d2, v.d2);
    track(rep.d3_negative, m3, x, d3, -d3);
  }
  return rep;
}

}  // namespace ousme

#pragma once

// Empirical Kolmogorov and Wasserstein-1 distances of a sample to N(0, 1),
// and the unit-constant bound curves they are compared against.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "ousme/covariance.hpp"
#include "ousme/cumulants.hpp"
#include "ousme/errors.hpp"
#include "ousme/special.hpp"

namespace ousme {

namespace detail {

inline std::vector<double> sorted_finite_sample(std::span<const double> sample) {
  if (sample.size() < 2) throw DomainError("distance estimates need at least 2 points");
  std::vector<double> x(sample.begin(), sample.end());
  for (double v : x)
    if (!std::isfinite(v)) throw DomainError("distance estimates need finite values");
  std::sort(x.begin(), x.end());
  return x;
}

/// int_{-inf}^x Phi = x Phi(x) + phi(x).
inline double int_cdf_left(double x) { return x * normal_cdf(x) + normal_pdf(x); }

/// int_x^inf (1 - Phi) = phi(x) - x (1 - Phi(x)).
inline double int_sf_right(double x) { return normal_pdf(x) - x * normal_sf(x); }

}  // namespace detail

/// sup_x |F_m(x) - Phi(x)|, evaluated exactly at the jump points.
inline double d_kol_empirical(std::span<const double> sample) {
  const std::vector<double> x = detail::sorted_finite_sample(sample);
  const double m = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = normal_cdf(x[i]);
    d = std::max({d, static_cast<double>(i + 1) / m - f, f - static_cast<double>(i) / m});
  }
  return std::clamp(d, 0.0, 1.0);
}

/// int |F_m - Phi| dx, piecewise in closed form between order statistics.
inline double d_w_empirical(std::span<const double> sample) {
  const std::vector<double> x = detail::sorted_finite_sample(sample);
  const std::size_t m = x.size();
  // int_a^b (Phi - c) dx
  auto signed_piece = [](double a, double b, double c) {
    return detail::int_cdf_left(b) - detail::int_cdf_left(a) - c * (b - a);
  };
  double total = detail::int_cdf_left(x.front()) + detail::int_sf_right(x.back());
  for (std::size_t i = 1; i < m; ++i) {
    const double a = x[i - 1];
    const double b = x[i];
    if (!(b > a)) continue;
    const double c = static_cast<double>(i) / static_cast<double>(m);
    const double z = normal_quantile(c);
    if (z <= a) {
      total += signed_piece(a, b, c);
    } else if (z >= b) {
      total -= signed_piece(a, b, c);
    } else {
      total += signed_piece(z, b, c) - signed_piece(a, z, c);
    }
  }
  return std::max(total, 0.0);
}

struct DistanceEstimate {
  double d_kol = 0.0;
  double d_w = 0.0;
  std::size_t sample_size = 0;
  double se_kol = 0.0;  // 1/sqrt(2m), the Monte Carlo noise floor of d_kol
  std::size_t censored_count = 0;
};

inline DistanceEstimate estimate_distances(std::span<const double> sample,
                                           std::size_t censored_count = 0) {
  DistanceEstimate e;
  e.d_kol = d_kol_empirical(sample);
  e.d_w = d_w_empirical(sample);
  e.sample_size = sample.size();
  e.se_kol = 1.0 / std::sqrt(2.0 * static_cast<double>(sample.size()));
  e.censored_count = censored_count;
  return e;
}

struct BoundCurves {
  double d_kol_bound = 0.0;
  double d_w_bound = 0.0;
  double d_tv_bound = 0.0;
};

/// Unit-constant bounds at (n, delta): fOU1 uses Delta + Tn^{-1/2} for
/// H <= 5/8 and Delta + Tn^{-(3-4H)} above; fOU2 and custom sequences use
/// Delta + Tn^{-1/2}. The total-variation curve is Tn^{-1/4} + psi_n.
inline BoundCurves bound_curves(const ModelParams& params, std::size_t n, double delta) {
  params.validate();
  if (!(delta > 0.0)) throw DomainError("bound_curves needs delta > 0");
  const double Tn = static_cast<double>(n) * delta;
  if (!(Tn > 1.0)) throw DomainError("bound_curves needs Tn = n delta > 1");
  double rate = 1.0 / std::sqrt(Tn);
  if (params.kind == ModelKind::Fou1 && params.hurst > 0.625)
    rate = std::pow(Tn, -(3.0 - 4.0 * params.hurst));
  BoundCurves b;
  b.d_kol_bound = delta + rate;
  b.d_w_bound = b.d_kol_bound;
  b.d_tv_bound = std::pow(Tn, -0.25) + psi_n(delta, Tn, decay_metadata(params).gamma);
  return b;
}

}  // namespace ousme

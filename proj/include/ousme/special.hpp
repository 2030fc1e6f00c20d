#pragma once

// Special functions used across the library. Gamma, Beta and the inverse
// complementary error function come from Boost.Math (Lanczos-based).

#include <cmath>
#include <numbers>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace ousme {

inline double gamma_fn(double x) { return boost::math::tgamma(x); }

inline double beta_fn(double a, double b) { return boost::math::beta(a, b); }

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

/// Upper tail 1 - Phi(x) without cancellation for large x.
inline double normal_sf(double x) {
  return 0.5 * std::erfc(x / std::numbers::sqrt2);
}

/// Inverse of the standard normal CDF on the open interval (0, 1).
inline double normal_quantile(double p) {
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

}  // namespace ousme

#pragma once

// Globally adaptive Gauss-Kronrod (G10/K21) integration on finite intervals.
// The worst panel is bisected until the summed error estimate meets
// max(abs_tol, rel_tol * |I|). Workspaces are per call.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "ousme/errors.hpp"

namespace ousme {

struct QuadratureOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-14;
  std::size_t max_panels = 2000;
};

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  bool converged = true;
};

namespace detail {

struct Panel {
  double a;
  double b;
  double value;
  double error;
};

inline bool panel_less(const Panel& x, const Panel& y) { return x.error < y.error; }

template <class F>
Panel gk21_panel(F& f, double a, double b) {
  double err = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 21>::integrate(
      f, a, b, 0, 0.0, &err);
  // Boost reports the single-panel error on the reference interval [-1, 1].
  return {a, b, v, err * 0.5 * std::abs(b - a)};
}

}  // namespace detail

/// Adaptive integral of f over [a, b]; never throws on non-convergence, the
/// result carries a converged flag and the achieved error estimate.
template <class F>
QuadratureResult try_integrate(F&& f, double a, double b,
                               const QuadratureOptions& opt = {}) {
  if (a == b) return {0.0, 0.0, true};
  std::vector<detail::Panel> heap;
  heap.reserve(64);
  heap.push_back(detail::gk21_panel(f, a, b));
  double total = heap.front().value;
  double error = heap.front().error;
  auto target = [&] { return std::max(opt.abs_tol, opt.rel_tol * std::abs(total)); };

  while (error > target() && heap.size() < opt.max_panels) {
    std::pop_heap(heap.begin(), heap.end(), detail::panel_less);
    const detail::Panel worst = heap.back();
    heap.pop_back();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {  // interval exhausted
      heap.push_back(worst);
      std::push_heap(heap.begin(), heap.end(), detail::panel_less);
      break;
    }
    const detail::Panel left = detail::gk21_panel(f, worst.a, mid);
    const detail::Panel right = detail::gk21_panel(f, mid, worst.b);
    heap.push_back(left);
    std::push_heap(heap.begin(), heap.end(), detail::panel_less);
    heap.push_back(right);
    std::push_heap(heap.begin(), heap.end(), detail::panel_less);
    // Re-sum instead of updating incrementally to keep rounding drift out.
    total = 0.0;
    error = 0.0;
    for (const auto& p : heap) {
      total += p.value;
      error += p.error;
    }
  }
  return {total, error, error <= target()};
}

/// As try_integrate, but throws QuadratureError when the tolerance is missed.
template <class F>
QuadratureResult integrate(F&& f, double a, double b, const QuadratureOptions& opt = {}) {
  QuadratureResult r = try_integrate(f, a, b, opt);
  if (!r.converged) {
    std::ostringstream msg;
    msg << "adaptive quadrature did not converge on [" << a << ", " << b << "], value " << r.value;
    throw QuadratureError(msg.str(), r.error);
  }
  return r;
}

}  // namespace ousme

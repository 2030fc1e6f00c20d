#pragma once

// Stationary covariance functions of the fractional Ornstein-Uhlenbeck
// processes of the first kind (fOU1) and second kind (fOU2), their lag-zero
// anchors, decay metadata and the limiting variance 4 * int_R rho^2.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "ousme/errors.hpp"
#include "ousme/quadrature.hpp"
#include "ousme/special.hpp"

namespace ousme {

enum class ModelKind { Fou1, Fou2, Custom };

/// Model selection. `rate` is theta for fOU1 and mu for fOU2. A Custom model
/// carries an explicit covariance sequence indexed by lag index.
struct ModelParams {
  ModelKind kind = ModelKind::Fou1;
  double rate = 1.0;
  double hurst = 0.5;
  std::vector<double> sequence;

  static ModelParams fou1(double theta, double hurst) {
    ModelParams p{ModelKind::Fou1, theta, hurst, {}};
    p.validate();
    return p;
  }
  static ModelParams fou2(double mu, double hurst) {
    ModelParams p{ModelKind::Fou2, mu, hurst, {}};
    p.validate();
    return p;
  }
  static ModelParams custom(std::vector<double> sequence) {
    ModelParams p{ModelKind::Custom, 0.0, 0.0, std::move(sequence)};
    p.validate();
    return p;
  }

  void validate() const;
  std::string name() const;
};

inline std::string ModelParams::name() const {
  switch (kind) {
    case ModelKind::Fou1: return "fou1";
    case ModelKind::Fou2: return "fou2";
    case ModelKind::Custom: return "custom";
  }
  return "unknown";
}

namespace detail {

inline void require_fou1(double theta, double hurst) {
  if (!(theta > 0.0) || !std::isfinite(theta))
    throw DomainError("fOU1 requires theta > 0, got " + std::to_string(theta));
  if (!(hurst > 0.0 && hurst < 0.75))
    throw DomainError("fOU1 requires H in (0, 3/4), got " + std::to_string(hurst));
}

inline void require_fou2(double mu, double hurst) {
  if (!(mu > 0.0) || !std::isfinite(mu))
    throw DomainError("fOU2 requires mu > 0, got " + std::to_string(mu));
  if (!(hurst > 0.5 && hurst < 1.0))
    throw DomainError("fOU2 requires H in (1/2, 1), got " + std::to_string(hurst));
}

}  // namespace detail

inline void ModelParams::validate() const {
  switch (kind) {
    case ModelKind::Fou1: detail::require_fou1(rate, hurst); break;
    case ModelKind::Fou2: detail::require_fou2(rate, hurst); break;
    case ModelKind::Custom:
      if (sequence.empty()) throw DomainError("custom covariance sequence is empty");
      if (!(sequence.front() > 0.0))
        throw DomainError("custom covariance sequence must have rho(0) > 0");
      for (double v : sequence)
        if (!std::isfinite(v)) throw DomainError("custom covariance sequence has non-finite entries");
      break;
  }
}

// ---------------------------------------------------------------------------
// fOU1

/// theta^{-2H} H Gamma(2H).
inline double rho0_fou1(double theta, double hurst) {
  detail::require_fou1(theta, hurst);
  return std::pow(theta, -2.0 * hurst) * hurst * gamma_fn(2.0 * hurst);
}

namespace detail {

/// J(tau) = int_0^inf cos(tau s) s^{1-2H} / (1 + s^2) ds.
///
/// Evaluated on the ray s = y e^{i pi/4}: the integrand decays like
/// exp(-tau y / sqrt 2) there and no pole is crossed (the pole sits at s = i).
/// The endpoint singularity y^{1-2H} is removed by y = a u^{1/(2-2H)} on
/// [0, a]; the remaining half line is mapped to a bounded integrand.
inline double fou1_spectral_integral(double tau, double hurst) {
  using cplx = std::complex<double>;
  constexpr double phi = std::numbers::pi / 4.0;
  const double sin_phi = std::sin(phi);
  const double cos_phi = std::cos(phi);
  const cplx rot2(0.0, 1.0);  // e^{2 i phi}
  const double p = 2.0 - 2.0 * hurst;
  const cplx phase = std::polar(1.0, phi * p);
  const QuadratureOptions opt{1e-11, 1e-15, 4000};  // integrands are O(1) after scaling

  auto oscillator = [&](double y) {
    return std::exp(cplx(-tau * y * sin_phi, tau * y * cos_phi));
  };

  const double a = tau > 1.0 ? 1.0 / tau : 1.0;
  auto near = [&](double u) {
    const double y = a * std::pow(u, 1.0 / p);
    return std::real(oscillator(y) * phase / (1.0 + y * y * rot2));
  };
  const double part_near = std::pow(a, p) / p * integrate(near, 0.0, 1.0, opt).value;

  double part_far = 0.0;
  if (tau > 1.0) {
    // y = z / tau; exp(-z sin(phi)) is below 1e-26 beyond z_max.
    const double z_max = 1.0 + 60.0 / sin_phi;
    auto far = [&](double z) {
      const double y = z / tau;
      return std::pow(z, 1.0 - 2.0 * hurst) *
             std::real(std::exp(cplx(-z * sin_phi, z * cos_phi)) * phase /
                       (1.0 + y * y * rot2));
    };
    part_far = std::pow(tau, 2.0 * hurst - 2.0) * integrate(far, 1.0, z_max, opt).value;
  } else {
    // y = w^{-1/(2H)} on [1, inf); y^{2-2H} dy/dw / (1 + y^2 e^{2 i phi}) is bounded.
    auto far = [&](double w) {
      const double inv_y2 = std::pow(w, 1.0 / hurst);
      cplx osc(1.0, 0.0);
      if (tau > 0.0) {
        const double y = std::pow(w, -0.5 / hurst);
        const double damp = tau * y * sin_phi;
        if (!(damp < 700.0)) return 0.0;
        osc = std::exp(cplx(-damp, tau * y * cos_phi));
      }
      return std::real(osc * phase / (inv_y2 + rot2)) / (2.0 * hurst);
    };
    part_far = integrate(far, 0.0, 1.0, opt).value;
  }
  return part_near + part_far;
}

inline double rho_fou1_unchecked(double t, double theta, double hurst) {
  const double scale = gamma_fn(2.0 * hurst + 1.0) * std::sin(std::numbers::pi * hurst) /
                       std::numbers::pi;
  return std::pow(theta, -2.0 * hurst) * scale *
         fou1_spectral_integral(theta * std::abs(t), hurst);
}

}  // namespace detail

/// E[Z_0 Z_t] for the stationary fOU1 process, from its spectral density
/// Gamma(2H+1) sin(pi H) / (2 pi) |x|^{1-2H} / (theta^2 + x^2).
inline double rho_fou1(double t, double theta, double hurst) {
  detail::require_fou1(theta, hurst);
  if (!std::isfinite(t)) throw DomainError("rho_fou1: lag must be finite");
  return detail::rho_fou1_unchecked(t, theta, hurst);
}

// ---------------------------------------------------------------------------
// fOU2

/// (2H-1) H^{2H} B(1 - H + mu H, 2H - 1) / mu.
inline double rho0_fou2(double mu, double hurst) {
  detail::require_fou2(mu, hurst);
  return (2.0 * hurst - 1.0) * std::pow(hurst, 2.0 * hurst) *
         beta_fn(1.0 - hurst + mu * hurst, 2.0 * hurst - 1.0) / mu;
}

namespace detail {

/// log of (e^{u/2H} - e^{-u/2H})^{2H-2}.
inline double fou2_log_kernel(double u, double hurst) {
  const double x = u / (2.0 * hurst);
  return (2.0 * hurst - 2.0) * (x + std::log(-std::expm1(-2.0 * x)));
}

/// h(t) = m(t) + l(t) - k(t), written as the single integral
/// (1 / 2mu) int_0^inf (e^{-mu|t-u|} - e^{-mu(t+u)}) (e^{u/2H} - e^{-u/2H})^{2H-2} du.
inline double fou2_h(double t, double mu, double hurst) {
  const QuadratureOptions opt{1e-11, 1e-15, 4000};  // integrands are O(1) after scaling
  const double q = 1.0 / (2.0 * hurst - 1.0);
  auto integrand = [&](double u) {
    if (u <= 0.0) return 0.0;
    const double bracket =
        std::exp(-mu * std::abs(t - u)) * -std::expm1(-2.0 * mu * std::min(t, u));
    return bracket * std::exp(fou2_log_kernel(u, hurst));
  };
  // u = s^q on pieces inside [0, 1] bounds the u^{2H-2} singularity.
  auto graded = [&](double lo, double hi) {
    if (hi <= lo) return 0.0;
    auto f = [&](double s) {
      if (s <= 0.0) return 0.0;
      return integrand(std::pow(s, q)) * q * std::pow(s, q - 1.0);
    };
    return integrate(f, std::pow(lo, 1.0 / q), std::pow(hi, 1.0 / q), opt).value;
  };
  auto plain = [&](double lo, double hi) {
    if (hi <= lo) return 0.0;
    return integrate(integrand, lo, hi, opt).value;
  };

  const double tail_rate = mu + 1.0 / hurst - 1.0;
  const double tail = 45.0 / tail_rate;
  double total = 0.0;
  if (t <= 1.0) {
    total += graded(0.0, t);
    total += graded(t, 1.0);
    total += plain(1.0, 1.0 + tail);
  } else {
    total += graded(0.0, 1.0);
    total += plain(1.0, t);
    total += plain(t, t + tail);
  }
  return total / (2.0 * mu);
}

inline double rho_fou2_unchecked(double t, double mu, double hurst, double rho0) {
  const double lag = std::abs(t);
  const double coupling = (2.0 * hurst - 1.0) * std::pow(hurst, 2.0 * hurst - 1.0);
  return std::exp(-mu * lag) * rho0 + coupling * fou2_h(lag, mu, hurst);
}

}  // namespace detail

/// E[Z_0 Z_t] for the stationary fOU2 process:
/// e^{-mu t} rho(0) + (2H-1) H^{2H-1} h(t).
inline double rho_fou2(double t, double mu, double hurst) {
  const double r0 = rho0_fou2(mu, hurst);
  if (!std::isfinite(t)) throw DomainError("rho_fou2: lag must be finite");
  return detail::rho_fou2_unchecked(t, mu, hurst, r0);
}

// ---------------------------------------------------------------------------
// Decay metadata and the covariance object

enum class DecayClass { Polynomial, Exponential, FiniteSupport };

struct DecayMetadata {
  DecayClass kind = DecayClass::Polynomial;
  double gamma = 1.0;     // polynomial exponent, or the effective value used in rate formulas
  double m0 = 2.0;        // onset lag of the decay envelope
  double exp_rate = 0.0;  // Exponential: 0.5 * min(mu, 1/H - 1)
};

/// fOU1: gamma = 2 - 2H. fOU2: exponential decay; any gamma > 3/4 is
/// admissible in the rate formulas and 1 is used.
inline DecayMetadata decay_metadata(const ModelParams& params) {
  params.validate();
  switch (params.kind) {
    case ModelKind::Fou1:
      return {DecayClass::Polynomial, 2.0 - 2.0 * params.hurst, 2.0, 0.0};
    case ModelKind::Fou2:
      return {DecayClass::Exponential, 1.0, 2.0,
              0.5 * std::min(params.rate, 1.0 / params.hurst - 1.0)};
    case ModelKind::Custom:
      return {DecayClass::FiniteSupport, 1.0, 2.0, 0.0};
  }
  return {};
}

class StationaryCovariance {
 public:
  explicit StationaryCovariance(ModelParams params);

  const ModelParams& params() const { return params_; }
  double rho0() const { return rho0_; }
  const DecayMetadata& decay() const { return decay_; }
  /// max of |rho(t)| / envelope(t) over a probe grid on [m0, 2 m0].
  double decay_const() const { return decay_const_; }

  /// Covariance at lag t (time units; lag-index units for Custom).
  double operator()(double t) const;

  /// Shape of the decay bound without its constant: t^{-gamma} or e^{-rate t}.
  double envelope_shape(double t) const;

 private:
  ModelParams params_;
  double rho0_ = 0.0;
  DecayMetadata decay_;
  double decay_const_ = 0.0;
};

inline StationaryCovariance::StationaryCovariance(ModelParams params)
    : params_(std::move(params)) {
  params_.validate();
  decay_ = decay_metadata(params_);
  switch (params_.kind) {
    case ModelKind::Fou1: rho0_ = rho0_fou1(params_.rate, params_.hurst); break;
    case ModelKind::Fou2: rho0_ = rho0_fou2(params_.rate, params_.hurst); break;
    case ModelKind::Custom: rho0_ = params_.sequence.front(); break;
  }
  if (decay_.kind != DecayClass::FiniteSupport) {
    constexpr int probes = 33;
    const double m0 = decay_.m0;
    for (int i = 0; i < probes; ++i) {
      const double t = m0 + m0 * i / (probes - 1);
      decay_const_ = std::max(decay_const_, std::abs((*this)(t)) / envelope_shape(t));
    }
  }
}

inline double StationaryCovariance::operator()(double t) const {
  switch (params_.kind) {
    case ModelKind::Fou1: return detail::rho_fou1_unchecked(t, params_.rate, params_.hurst);
    case ModelKind::Fou2:
      return detail::rho_fou2_unchecked(t, params_.rate, params_.hurst, rho0_);
    case ModelKind::Custom: {
      const double k = std::round(std::abs(t));
      if (k >= static_cast<double>(params_.sequence.size())) return 0.0;
      return params_.sequence[static_cast<std::size_t>(k)];
    }
  }
  return 0.0;
}

inline double StationaryCovariance::envelope_shape(double t) const {
  switch (decay_.kind) {
    case DecayClass::Polynomial: return std::pow(t, -decay_.gamma);
    case DecayClass::Exponential: return std::exp(-decay_.exp_rate * t);
    case DecayClass::FiniteSupport: return 0.0;
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Limiting variance

struct SigmaSq {
  double value = 0.0;
  double error = 0.0;    // quadrature error plus the analytic tail bound
  double horizon = 0.0;  // T*: quadrature covers [0, T*]
};

struct SigmaSqOptions {
  double tail_rel_tol = 1e-10;
  double max_horizon = 1e200;
};

/// sigma^2 = 4 int_R rho^2 = 8 int_0^inf rho^2, by quadrature on [0, T*]
/// with T* grown geometrically until the envelope tail bound is below
/// tail_rel_tol relative.
inline SigmaSq sigma_sq(const StationaryCovariance& cov, const SigmaSqOptions& opt = {}) {
  const DecayMetadata& d = cov.decay();
  if (d.kind == DecayClass::FiniteSupport)
    throw DomainError("sigma_sq: custom sequences have no continuous-time limit; "
                      "use discrete_sigma_sq");
  if (d.kind == DecayClass::Polynomial && !(d.gamma > 0.5))
    throw DomainError("sigma_sq requires gamma > 1/2");

  const double c2 = cov.decay_const() * cov.decay_const();
  auto tail_bound = [&](double T) {
    if (d.kind == DecayClass::Polynomial)
      return 8.0 * c2 * std::pow(T, 1.0 - 2.0 * d.gamma) / (2.0 * d.gamma - 1.0);
    return 8.0 * c2 * std::exp(-2.0 * d.exp_rate * T) / (2.0 * d.exp_rate);
  };
  auto rho_sq = [&](double t) {
    const double r = cov(t);
    return r * r;
  };

  const QuadratureOptions qopt{1e-11, 1e-18, 2000};
  SigmaSq out;
  double lo = 0.0;
  double hi = std::min(1.0, d.m0);
  double integral = 0.0;
  double quad_error = 0.0;
  while (true) {
    const QuadratureResult r = integrate(rho_sq, lo, hi, qopt);
    integral += r.value;
    quad_error += r.error;
    const double tb = tail_bound(hi);
    if (tb <= opt.tail_rel_tol * 8.0 * integral) {
      out.value = 8.0 * integral;
      out.error = 8.0 * quad_error + tb;
      out.horizon = hi;
      return out;
    }
    if (hi >= opt.max_horizon)
      throw NumericalError("sigma_sq: tail bound " + std::to_string(tb) +
                           " cannot reach tolerance before horizon " + std::to_string(hi));
    lo = hi;
    hi *= 2.0;
  }
}

/// Variance that V_n(Z) actually converges to: Var V_n(Z) =
/// 2 Delta sum_{|k|<n} rho(k Delta)^2 (1 - |k|/n) -> 2 int_R rho^2, which is
/// half of sigma_sq. For the classical OU process (H = 1/2) this is 1/(2 theta^3).
/// Standardize with this, not with sigma_sq.
inline SigmaSq limit_variance(const StationaryCovariance& cov, const SigmaSqOptions& opt = {}) {
  SigmaSq s = sigma_sq(cov, opt);
  s.value *= 0.5;
  s.error *= 0.5;
  return s;
}

}  // namespace ousme

#pragma once

// Exact cumulants of V_n(Z) = (sqrt(Tn)/n) Z^T Z - sqrt(Tn) rho(0), a
// centered quadratic form in a Gaussian vector with Toeplitz covariance C:
// kappa_m = 2^{m-1} (m-1)! a^m tr(C^m), a = sqrt(Tn)/n. Also the index-sum
// oracles, the rate functions with unit constants, and the NZ sum diagnostic.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ousme/errors.hpp"
#include "ousme/sampler.hpp"

namespace ousme {

struct Cumulants {
  double kappa2 = 0.0;
  double kappa3 = 0.0;
  double kappa4 = 0.0;
};

// ---------------------------------------------------------------------------
// Rate functions (constants normalized to 1)

namespace detail {

constexpr double kBranchTol = 1e-12;

inline void require_rate_args(double Tn, double gamma) {
  if (!(Tn > 1.0)) throw DomainError("rate functions need Tn > 1");
  if (!(gamma > 0.5)) throw DomainError("rate functions need gamma > 1/2");
}

inline bool at_branch(double gamma, double boundary) {
  return std::abs(gamma - boundary) <= kBranchTol;
}

}  // namespace detail

/// Delta + {1/Tn (gamma > 1); log(Tn)/Tn (gamma = 1); Tn^{1-2 gamma} (gamma < 1)}.
inline double variance_defect_bound(double Tn, double delta, double gamma) {
  detail::require_rate_args(Tn, gamma);
  if (!(delta > 0.0)) throw DomainError("variance_defect_bound needs delta > 0");
  double tail;
  if (detail::at_branch(gamma, 1.0)) tail = std::log(Tn) / Tn;
  else if (gamma > 1.0) tail = 1.0 / Tn;
  else tail = std::pow(Tn, 1.0 - 2.0 * gamma);
  return delta + tail;
}

struct CumulantRates {
  double k3_rate = 0.0;
  double k4_rate = 0.0;
  double max_rate = 0.0;
};

/// kappa3: 1/sqrt(Tn) above 2/3, log^2(Tn)/sqrt(Tn) at 2/3, Tn^{3/2-3 gamma} below.
/// kappa4: 1/Tn above 3/4, log^3(Tn)/Tn at 3/4, Tn^{2-4 gamma} below.
/// max_rate is the larger of the two, which is the kappa3 rate for Tn > 1.
inline CumulantRates cumulant_rate_bounds(double Tn, double gamma) {
  detail::require_rate_args(Tn, gamma);
  const double lt = std::log(Tn);
  CumulantRates r;
  if (detail::at_branch(gamma, 2.0 / 3.0)) r.k3_rate = lt * lt / std::sqrt(Tn);
  else if (gamma > 2.0 / 3.0) r.k3_rate = 1.0 / std::sqrt(Tn);
  else r.k3_rate = std::pow(Tn, 1.5 - 3.0 * gamma);

  if (detail::at_branch(gamma, 0.75)) r.k4_rate = lt * lt * lt / Tn;
  else if (gamma > 0.75) r.k4_rate = 1.0 / Tn;
  else r.k4_rate = std::pow(Tn, 2.0 - 4.0 * gamma);

  r.max_rate = std::max(r.k3_rate, r.k4_rate);
  return r;
}

/// Delta + {1/sqrt(Tn) (gamma >= 3/4); Tn^{1-2 gamma} (1/2 < gamma < 3/4)}.
inline double psi_n(double delta, double Tn, double gamma) {
  if (!(Tn > 0.0)) throw DomainError("psi_n needs Tn > 0");
  if (!(delta > 0.0)) throw DomainError("psi_n needs delta > 0");
  if (!(gamma > 0.5)) throw DomainError("psi_n needs gamma > 1/2");
  const bool high = gamma > 0.75 || detail::at_branch(gamma, 0.75);
  return delta + (high ? 1.0 / std::sqrt(Tn) : std::pow(Tn, 1.0 - 2.0 * gamma));
}

// ---------------------------------------------------------------------------
// Exact cumulants

struct CumulantContext {
  double limit_variance = 0.0;  // lim E V_n^2, for the variance defect
  double gamma = 1.0;     // decay exponent used in the rate functions
};

struct CumulantReport {
  SamplingGrid grid;
  double kappa2 = 0.0;
  double kappa3 = 0.0;
  double kappa4 = 0.0;
  // NaN unless a context was supplied (and Tn > 1 for the rates)
  double variance_defect = std::numeric_limits<double>::quiet_NaN();
  double variance_bound_rate = std::numeric_limits<double>::quiet_NaN();
  double k3_rate = std::numeric_limits<double>::quiet_NaN();
  double k4_rate = std::numeric_limits<double>::quiet_NaN();
  double psi = std::numeric_limits<double>::quiet_NaN();
};

constexpr std::size_t kExactCumulantCap = 8192;

namespace detail {

inline Eigen::MatrixXd toeplitz(std::span<const double> values) {
  const auto n = static_cast<Eigen::Index>(values.size());
  Eigen::MatrixXd c(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) c(i, j) = values[static_cast<std::size_t>(std::abs(i - j))];
  return c;
}

/// tr(C^2), tr(C^3), tr(C^4) for symmetric C via one product C^2, formed
/// blockwise by columns for large n.
inline std::array<double, 3> traces_2_3_4(const Eigen::MatrixXd& c) {
  const Eigen::Index n = c.rows();
  const double t2 = c.squaredNorm();
  double t3 = 0.0;
  double t4 = 0.0;
  const Eigen::Index block = n <= 2048 ? n : 512;
  for (Eigen::Index j0 = 0; j0 < n; j0 += block) {
    const Eigen::Index w = std::min(block, n - j0);
    const Eigen::MatrixXd c2 = c * c.middleCols(j0, w);
    t3 += c2.cwiseProduct(c.middleCols(j0, w)).sum();
    t4 += c2.squaredNorm();
  }
  return {t2, t3, t4};
}

}  // namespace detail

/// kappa_m = 2^{m-1} (m-1)! (sqrt(Tn)/n)^m tr(C^m), m = 2, 3, 4.
inline CumulantReport exact_cumulants(const CovSequence& seq,
                                      std::optional<CumulantContext> ctx = std::nullopt,
                                      std::size_t cap = kExactCumulantCap) {
  const std::size_t n = seq.grid.n;
  if (n < 1 || seq.values.size() != n) throw DomainError("exact_cumulants: malformed sequence");
  if (n > cap)
    throw CapExceeded("exact_cumulants: n = " + std::to_string(n) + " exceeds the cap " +
                      std::to_string(cap));
  const Eigen::MatrixXd c = detail::toeplitz(seq.values);
  const auto [t2, t3, t4] = detail::traces_2_3_4(c);
  const double Tn = seq.grid.Tn();
  const double a = std::sqrt(Tn) / static_cast<double>(n);

  CumulantReport rep;
  rep.grid = seq.grid;
  rep.kappa2 = 2.0 * a * a * t2;
  rep.kappa3 = 8.0 * a * a * a * t3;
  rep.kappa4 = 48.0 * a * a * a * a * t4;
  if (ctx) {
    rep.variance_defect = std::abs(rep.kappa2 - ctx->limit_variance);
    if (Tn > 1.0 && ctx->gamma > 0.5) {
      rep.variance_bound_rate = variance_defect_bound(Tn, seq.grid.delta, ctx->gamma);
      const CumulantRates r = cumulant_rate_bounds(Tn, ctx->gamma);
      rep.k3_rate = r.k3_rate;
      rep.k4_rate = r.k4_rate;
    }
    if (ctx->gamma > 0.5) rep.psi = psi_n(seq.grid.delta, Tn, ctx->gamma);
  }
  return rep;
}

/// kappa2 = 2 Delta sum_{|k|<n} rho_k^2 (1 - |k|/n), in O(n).
inline double kappa2_fast(const CovSequence& seq) {
  const std::size_t n = seq.grid.n;
  double acc = seq.values[0] * seq.values[0];
  for (std::size_t k = 1; k < n; ++k)
    acc += 2.0 * seq.values[k] * seq.values[k] * (1.0 - static_cast<double>(k) / static_cast<double>(n));
  return 2.0 * seq.grid.delta * acc;
}

constexpr std::size_t kBruteCumulantCap = 32;

/// Direct index sums:
/// kappa2 = 2 (Tn/n^2) sum_{ij} r_ij^2,
/// kappa3 = 8 (Tn^{3/2}/n^3) sum_{ijk} r_ij r_ik r_jk,
/// kappa4 = 48 (Tn^2/n^4) sum_{ijkl} r_ij r_jk r_kl r_li.
inline Cumulants brute_cumulants(const CovSequence& seq) {
  const std::size_t n = seq.grid.n;
  if (n > kBruteCumulantCap)
    throw CapExceeded("brute_cumulants: n = " + std::to_string(n) + " exceeds 32");
  auto r = [&](std::size_t i, std::size_t j) { return seq.values[i > j ? i - j : j - i]; };
  double s2 = 0.0;
  double s3 = 0.0;
  double s4 = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double rij = r(i, j);
      s2 += rij * rij;
      for (std::size_t k = 0; k < n; ++k) {
        s3 += rij * r(i, k) * r(j, k);
        const double rjk = r(j, k);
        for (std::size_t l = 0; l < n; ++l) s4 += rij * rjk * r(k, l) * r(l, i);
      }
    }
  const double Tn = seq.grid.Tn();
  const double nd = static_cast<double>(n);
  return {2.0 * Tn / (nd * nd) * s2, 8.0 * std::pow(Tn, 1.5) / (nd * nd * nd) * s3,
          48.0 * Tn * Tn / (nd * nd * nd * nd) * s4};
}

// ---------------------------------------------------------------------------
// NZ sum diagnostic

struct NzResult {
  double lhs = 0.0;
  double rhs = 0.0;
};

/// lhs = sum_{|k_j| <= n} |rho(k . v)| prod_j |rho(k_j)|,
/// rhs = (sum_{|k| <= n} |rho(k)|^{1 + 1/M})^M, lags in index units.
inline NzResult nz_diagnostic(const std::function<double(long)>& rho, long n, int M,
                              std::span<const int> v) {
  if (M != 2 && M != 3) throw DomainError("nz_diagnostic supports M = 2 or 3");
  if (v.size() != static_cast<std::size_t>(M)) throw DomainError("nz_diagnostic: v must have length M");
  for (int s : v)
    if (s != 1 && s != -1) throw DomainError("nz_diagnostic: v entries must be +-1");
  if (n < 0) throw DomainError("nz_diagnostic needs n >= 0");
  const long cap = M == 2 ? 256 : 48;
  if (n > cap) throw CapExceeded("nz_diagnostic: n exceeds the cap for this M");

  std::vector<double> a(static_cast<std::size_t>(2 * n + 1));
  for (long k = -n; k <= n; ++k) a[static_cast<std::size_t>(k + n)] = std::abs(rho(k));
  auto at = [&](long k) { return std::abs(rho(k)); };

  NzResult out;
  if (M == 2) {
    for (long k1 = -n; k1 <= n; ++k1)
      for (long k2 = -n; k2 <= n; ++k2)
        out.lhs += at(v[0] * k1 + v[1] * k2) * a[k1 + n] * a[k2 + n];
  } else {
    for (long k1 = -n; k1 <= n; ++k1)
      for (long k2 = -n; k2 <= n; ++k2) {
        const double p = a[k1 + n] * a[k2 + n];
        for (long k3 = -n; k3 <= n; ++k3)
          out.lhs += at(v[0] * k1 + v[1] * k2 + v[2] * k3) * p * a[k3 + n];
      }
  }
  double s = 0.0;
  for (double x : a) s += std::pow(x, 1.0 + 1.0 / M);
  out.rhs = std::pow(s, M);
  return out;
}

/// Sequence form: the sequence must cover lags 0..M n, so n = (len - 1) / M.
inline NzResult nz_diagnostic(const CovSequence& seq, int M, std::span<const int> v) {
  if (M != 2 && M != 3) throw DomainError("nz_diagnostic supports M = 2 or 3");
  const long n = static_cast<long>((seq.values.size() - 1) / static_cast<std::size_t>(M));
  return nz_diagnostic([&](long k) { return seq.values[static_cast<std::size_t>(std::abs(k))]; }, n,
                       M, v);
}

}  // namespace ousme

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "ousme/covariance.hpp"
#include "ousme/sampler.hpp"

using namespace ousme;

namespace {

// Spectral integral evaluated independently at 30 digits (tanh-sinh on [0, 1],
// oscillatory quadrature on [1, inf)).
struct Fou1Point {
  double t, theta, hurst, rho;
};
constexpr Fou1Point kFou1Oracle[] = {
    {1.0, 1.0, 0.6, 0.2757365372454770699},
    {3.0, 2.0, 0.3, -0.006790444005867845743},
    {10.0, 1.0, 0.7, 0.071116009381902822512},
    {0.5, 0.5, 0.2, 0.21775710646170667979},
    {2.0, 1.0, 0.55, 0.099963692039439492191},
};

// For mu = 1 the fOU2 kernel integrates in closed form:
// rho(t) = (H^{2H}/2) [e^{-t} + e^t - e^{-t} (e^{t/H} - 1)^{2H}],
// rearranged as e^t (1 - (1 - e^{-t/H})^{2H}) to avoid cancellation.
double fou2_mu1_closed(double t, double H) {
  const double u = std::exp(-t / H);
  return 0.5 * std::pow(H, 2 * H) *
         (std::exp(-t) - std::exp(t) * std::expm1(2 * H * std::log1p(-u)));
}

// Parseval on the spectral density: sigma^2 = 2 pi C_H^2 B(s/2, 2 - s/2) theta^{-4H-1},
// s = 3 - 4H, C_H = Gamma(2H+1) sin(pi H) / pi. Uses the C++17 std::beta.
double fou1_sigma_sq_closed(double theta, double H) {
  const double c = std::tgamma(2 * H + 1) * std::sin(std::numbers::pi * H) / std::numbers::pi;
  const double s = 3 - 4 * H;
  return 2 * std::numbers::pi * c * c * std::beta(s / 2, 2 - s / 2) * std::pow(theta, -4 * H - 1);
}

}  // namespace

TEST(Rho0, Fou1Anchors) {
  EXPECT_DOUBLE_EQ(rho0_fou1(1.0, 0.5), 0.5);
  EXPECT_DOUBLE_EQ(rho0_fou1(2.0, 0.5), 0.25);
  EXPECT_NEAR(rho0_fou1(1.0, 0.6), 0.6 * std::tgamma(1.2), 1e-15);
  EXPECT_NEAR(rho0_fou1(1.0, 0.6), 0.55090122, 1e-7);
}

TEST(Rho0, Fou2Anchors) {
  EXPECT_NEAR(rho0_fou2(1.0, 0.75), 0.5 * std::pow(0.75, 1.5) * 2.0, 1e-15);
  EXPECT_NEAR(rho0_fou2(2.0, 0.75), 0.5 * std::pow(0.75, 1.5) * std::beta(1.75, 0.5) / 2.0, 1e-15);
  EXPECT_THROW(rho0_fou2(1.0, 0.5), DomainError);
}

TEST(ModelParams, DomainChecks) {
  EXPECT_THROW(ModelParams::fou1(1.0, 0.75), DomainError);
  EXPECT_THROW(ModelParams::fou1(0.0, 0.6), DomainError);
  EXPECT_THROW(ModelParams::fou1(1.0, 0.0), DomainError);
  EXPECT_THROW(ModelParams::fou2(1.0, 0.5), DomainError);
  EXPECT_THROW(ModelParams::fou2(-1.0, 0.7), DomainError);
  EXPECT_THROW(ModelParams::fou2(1.0, 1.0), DomainError);
  EXPECT_NO_THROW(ModelParams::fou1(1.0, 0.1));
  EXPECT_NO_THROW(ModelParams::fou2(0.2, 0.95));
}

TEST(RhoFou1, MatchesHighPrecisionValues) {
  for (const auto& p : kFou1Oracle)
    EXPECT_NEAR(rho_fou1(p.t, p.theta, p.hurst), p.rho, 1e-11 * std::abs(p.rho))
        << "t=" << p.t << " theta=" << p.theta << " H=" << p.hurst;
}

TEST(RhoFou1, AnchorOnGrid) {
  for (double theta : {0.5, 1.0, 2.0})
    for (double H : {0.55, 0.6, 0.7}) {
      const double r0 = rho0_fou1(theta, H);
      EXPECT_LE(std::abs(rho_fou1(0.0, theta, H) - r0) / r0, 1e-6);
    }
}

TEST(RhoFou1, HalfHurstClosedForm) {
  for (double theta : {0.5, 1.0, 2.0}) {
    double worst = 0.0;
    for (int i = 0; i <= 200; ++i) {
      const double t = 10.0 * i / 200;
      worst = std::max(worst, std::abs(rho_fou1(t, theta, 0.5) - std::exp(-theta * t) / (2 * theta)));
    }
    EXPECT_LE(worst, 1e-8) << "theta=" << theta;
  }
  EXPECT_NEAR(rho_fou1(2.0, 1.0, 0.5), std::exp(-2.0) / 2, 1e-12);
}

TEST(RhoFou1, LargeLagAsymptotics) {
  // theta = 1: rho(t) ~ H(2H-1) t^{2H-2} sum_k prod_{j<2k} (2H-2-j) / t^{2k}
  for (double H : {0.3, 0.6, 0.7})
    for (double t : {50.0, 200.0}) {
      double term = H * (2 * H - 1) * std::pow(t, 2 * H - 2);
      double a = 0.0;
      for (int k = 0; k < 8; ++k) {
        a += term;
        term *= (2 * H - 2 - 2 * k) * (2 * H - 3 - 2 * k) / (t * t);
      }
      EXPECT_NEAR(rho_fou1(t, 1.0, H), a, 1e-9 * std::abs(a)) << "H=" << H << " t=" << t;
    }
}

TEST(RhoFou2, ClosedFormAtUnitRate) {
  for (double H : {0.6, 0.75, 0.9})
    for (double t : {0.0, 0.05, 0.5, 1.0, 3.0, 8.0}) {
      const double want = fou2_mu1_closed(t, H);
      EXPECT_NEAR(rho_fou2(t, 1.0, H), want, 1e-10 * std::abs(want) + 1e-15) << "t=" << t << " H=" << H;
    }
  EXPECT_NEAR(rho_fou2(1.0, 1.0, 0.75), 0.4443946714746338384, 1e-12);
}

TEST(RhoFou2, OriginRoundTripAndDecay) {
  for (double mu : {0.5, 1.0, 2.0})
    for (double H : {0.55, 0.75, 0.9}) {
      const double r0 = rho0_fou2(mu, H);
      EXPECT_LE(std::abs(rho_fou2(0.0, mu, H) - r0) / r0, 1e-6);
      EXPECT_NEAR(detail::fou2_h(0.0, mu, H), 0.0, 1e-14);
    }
  EXPECT_LE(std::abs(rho_fou2(40.0, 1.0, 0.75)), 1e-6);
}

TEST(Rho, Evenness) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> lag(0.0, 30.0);
  const StationaryCovariance c1(ModelParams::fou1(1.3, 0.35));
  const StationaryCovariance c2(ModelParams::fou2(0.8, 0.7));
  for (int i = 0; i < 1000; ++i) {
    const double t = lag(gen);
    EXPECT_LE(std::abs(c1(t) - c1(-t)), 1e-12);
    EXPECT_LE(std::abs(c2(t) - c2(-t)), 1e-12);
  }
  EXPECT_EQ(rho_fou1(-2.0, 1.0, 0.5), rho_fou1(2.0, 1.0, 0.5));
  EXPECT_EQ(rho_fou2(-1.0, 1.0, 0.75), rho_fou2(1.0, 1.0, 0.75));
}

TEST(Rho, BoundedByVarianceAndEnvelope) {
  std::vector<ModelParams> models;
  for (double theta : {0.5, 1.0, 2.0})
    for (double H : {0.55, 0.6, 0.7}) models.push_back(ModelParams::fou1(theta, H));
  for (double H : {0.2, 0.3}) models.push_back(ModelParams::fou1(1.0, H));
  for (double H : {0.6, 0.75, 0.9}) models.push_back(ModelParams::fou2(1.0, H));
  models.push_back(ModelParams::fou2(0.4, 0.6));
  for (const auto& p : models) {
    const StationaryCovariance cov(p);
    const double m0 = cov.decay().m0;
    for (int i = 0; i <= 400; ++i) {
      const double t = 100.0 * i / 400;
      const double r = cov(t);
      EXPECT_LE(std::abs(r), cov.rho0() * (1 + 1e-10)) << p.name() << " t=" << t;
      if (t >= m0) EXPECT_LE(std::abs(r), 1.5 * cov.decay_const() * cov.envelope_shape(t)) << p.name() << " t=" << t;
    }
  }
}

TEST(Rho, ToeplitzIsNumericallyPsd) {
  for (const auto& p : {ModelParams::fou1(1.0, 0.6), ModelParams::fou1(1.0, 0.2),
                        ModelParams::fou1(1.0, 0.7), ModelParams::fou2(1.0, 0.75),
                        ModelParams::fou2(2.0, 0.9)}) {
    const StationaryCovariance cov(p);
    for (double delta : {0.1, 0.5, 1.0}) {
      const CovSequence seq = build_cov_sequence(cov, SamplingGrid(64, delta));
      Eigen::MatrixXd c(64, 64);
      for (int i = 0; i < 64; ++i)
        for (int j = 0; j < 64; ++j) c(i, j) = seq.values[static_cast<std::size_t>(std::abs(i - j))];
      const double lmin = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(c).eigenvalues().minCoeff();
      EXPECT_GE(lmin, -1e-10 * cov.rho0()) << p.name() << " delta=" << delta;
    }
  }
}

TEST(Decay, Metadata) {
  EXPECT_DOUBLE_EQ(decay_metadata(ModelParams::fou1(1, 0.6)).gamma, 0.8);
  EXPECT_DOUBLE_EQ(decay_metadata(ModelParams::fou1(1, 0.7)).gamma, 2.0 - 2 * 0.7);
  const DecayMetadata d2 = decay_metadata(ModelParams::fou2(1, 0.75));
  EXPECT_EQ(d2.kind, DecayClass::Exponential);
  EXPECT_DOUBLE_EQ(d2.gamma, 1.0);
  EXPECT_DOUBLE_EQ(d2.exp_rate, 0.5 * std::min(1.0, 1 / 0.75 - 1));
  EXPECT_DOUBLE_EQ(decay_metadata(ModelParams::fou1(1, 0.6)).m0, 2.0);
}

TEST(SigmaSq, HalfHurstIsInverseCube) {
  for (double theta : {0.5, 1.0, 2.0}) {
    const SigmaSq s = sigma_sq(StationaryCovariance(ModelParams::fou1(theta, 0.5)));
    EXPECT_LE(std::abs(s.value * theta * theta * theta - 1.0), 1e-6);
  }
}

TEST(SigmaSq, MatchesParsevalClosedForm) {
  for (double theta : {0.7, 1.0, 2.0})
    for (double H : {0.3, 0.6, 0.7}) {
      const SigmaSq s = sigma_sq(StationaryCovariance(ModelParams::fou1(theta, H)));
      const double want = fou1_sigma_sq_closed(theta, H);
      EXPECT_LE(std::abs(s.value - want) / want, 1e-8) << "theta=" << theta << " H=" << H;
      EXPECT_LE(s.error, 1e-6 * s.value);
    }
  EXPECT_NEAR(fou1_sigma_sq_closed(1.0, 0.6), 1.90016162027926886657842783842, 1e-14);
}

TEST(SigmaSq, Fou2AgainstRiemannSum) {
  const StationaryCovariance cov(ModelParams::fou2(1.0, 0.75));
  const SigmaSq s = sigma_sq(cov);
  // midpoint rule on the closed form, tail beyond 60 is below 1e-12
  double acc = 0.0;
  const int m = 600000;
  const double h = 60.0 / m;
  for (int i = 0; i < m; ++i) {
    const double r = fou2_mu1_closed((i + 0.5) * h, 0.75);
    acc += r * r;
  }
  EXPECT_NEAR(s.value, 8 * acc * h, 1e-7 * s.value);
}

TEST(SigmaSq, CustomModelRejected) {
  EXPECT_THROW(sigma_sq(StationaryCovariance(ModelParams::custom({1.0, 0.0}))), DomainError);
}

TEST(LimitVariance, HalfOfSigmaSq) {
  // lim E V_n^2 = 2 int rho^2; classical OU gives 1 / (2 theta^3)
  for (double theta : {0.5, 1.0, 2.0}) {
    const StationaryCovariance cov(ModelParams::fou1(theta, 0.5));
    EXPECT_NEAR(limit_variance(cov).value * 2 * theta * theta * theta, 1.0, 1e-6);
  }
  const StationaryCovariance cov(ModelParams::fou2(1.0, 0.75));
  EXPECT_DOUBLE_EQ(limit_variance(cov).value, 0.5 * sigma_sq(cov).value);
}

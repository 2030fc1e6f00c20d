#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "ousme/harness.hpp"

using namespace ousme;

namespace {

DistanceTable table_from(std::initializer_list<std::pair<std::size_t, double>> pts) {
  DistanceTable t;
  for (auto [n, d] : pts) {
    DistanceRow r;
    r.n = n;
    r.d_kol = d;
    r.d_w = d;
    r.se_kol = 0.0;
    t.rows.push_back(r);
  }
  return t;
}

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.model = ModelParams::fou1(1.0, 0.6);
  c.alpha = 0.5;
  c.n_list = {64, 256};
  c.reps = 400;
  c.seed = 11;
  c.statistic = Statistic::VnX;
  return c;
}

}  // namespace

TEST(FitRate, ExactGeometricRows) {
  const RateFit f = fit_rate(table_from({{100, 0.1}, {400, 0.05}, {1600, 0.025}}), "d_kol", -0.5);
  EXPECT_NEAR(f.slope, -0.5, 1e-14);
  EXPECT_NEAR(f.r2, 1.0, 1e-14);
  EXPECT_EQ(f.used_rows, 3u);
  EXPECT_EQ(f.theoretical_slope, -0.5);
  EXPECT_FALSE(f.noise_floor_flag);
}

TEST(FitRate, ConstantColumnAndErrors) {
  EXPECT_NEAR(fit_rate(table_from({{10, 0.3}, {20, 0.3}, {40, 0.3}}), "d_w").slope, 0.0, 1e-15);
  EXPECT_THROW(fit_rate(table_from({{10, 0.3}, {20, 0.2}}), "d_kol"), NumericalError);
  EXPECT_THROW(fit_rate(table_from({{10, 0.3}, {20, 0.2}, {40, 0.1}}), "psi"), ConfigError);
}

TEST(FitRate, NoiseFloorRowsExcluded) {
  DistanceTable t = table_from({{100, 0.1}, {400, 0.05}, {1600, 0.025}, {6400, 0.01}});
  for (auto& r : t.rows) r.se_kol = 0.005;  // last row sits below 3 se
  const RateFit f = fit_rate(t, "d_kol");
  EXPECT_EQ(f.used_rows, 3u);
  EXPECT_TRUE(f.noise_floor_flag);
  EXPECT_NEAR(f.slope, -0.5, 1e-14);
}

TEST(TheoreticalSlope, Branches) {
  EXPECT_DOUBLE_EQ(theoretical_slope(ModelParams::fou1(1.0, 0.6), 0.5), -0.25);
  EXPECT_DOUBLE_EQ(theoretical_slope(ModelParams::fou1(1.0, 0.6), 0.2), -0.2);
  EXPECT_NEAR(theoretical_slope(ModelParams::fou1(1.0, 0.7), 0.5), -0.5 * 0.2, 1e-15);
  EXPECT_DOUBLE_EQ(theoretical_slope(ModelParams::fou2(1.0, 0.75), 0.4), -0.3);
}

TEST(Config, Validation) {
  ExperimentConfig c = small_config();
  EXPECT_NO_THROW(c.validate());
  c.reps = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_THROW(run_clt_experiment(c), ConfigError);
  c = small_config();
  c.alpha = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_config();
  c.n_list = {256, 64};
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_config();
  c.model = ModelParams::custom({1.0});
  EXPECT_THROW(c.validate(), ConfigError);  // custom needs Vn_Z
  c = small_config();
  EXPECT_THROW(run_drift_experiment(c), ConfigError);
  EXPECT_THROW(parse_statistic("vnx"), ConfigError);
}

TEST(Config, JsonRoundTrip) {
  ExperimentConfig c = small_config();
  c.model = ModelParams::fou2(1.5, 0.75);
  c.drift_true = 1.4;
  c.statistic = Statistic::Drift;
  const ExperimentConfig back = config_from_json(config_to_json(c));
  EXPECT_EQ(config_to_json(back).dump(), config_to_json(c).dump());
  EXPECT_EQ(back.model.kind, ModelKind::Fou2);
  EXPECT_EQ(*back.drift_true, 1.4);

  // partial documents overlay the base config
  const ExperimentConfig partial = config_from_json(nlohmann::json{{"reps", 7}}, c);
  EXPECT_EQ(partial.reps, 7u);
  EXPECT_EQ(partial.seed, c.seed);
  EXPECT_THROW(config_from_json(nlohmann::json{{"reps", "many"}}), ConfigError);
  EXPECT_THROW(config_from_json(nlohmann::json{{"model", {{"kind", "fou3"}, {"hurst", 0.6}}}}), ConfigError);
}

TEST(Emit, CsvRoundTrip) {
  const DistanceTable t = run_clt_experiment(small_config());
  std::stringstream ss;
  write_distance_csv(ss, t);
  EXPECT_EQ(ss.str().substr(0, kDistanceCsvHeader.size()), kDistanceCsvHeader);
  const DistanceTable back = parse_distance_csv(ss);
  ASSERT_EQ(back.rows.size(), t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    EXPECT_EQ(back.rows[i].n, t.rows[i].n);
    EXPECT_EQ(back.rows[i].delta, t.rows[i].delta);
    EXPECT_EQ(back.rows[i].Tn, t.rows[i].Tn);
    EXPECT_EQ(back.rows[i].statistic, t.rows[i].statistic);
    EXPECT_EQ(back.rows[i].d_kol, t.rows[i].d_kol);
    EXPECT_EQ(back.rows[i].d_w, t.rows[i].d_w);
    EXPECT_EQ(back.rows[i].se_kol, t.rows[i].se_kol);
    EXPECT_EQ(back.rows[i].psi, t.rows[i].psi);
    EXPECT_EQ(back.rows[i].bound_kol, t.rows[i].bound_kol);
    EXPECT_EQ(back.rows[i].censored, t.rows[i].censored);
  }
  std::stringstream again;
  write_distance_csv(again, back);
  std::stringstream first;
  write_distance_csv(first, t);
  EXPECT_EQ(again.str(), first.str());
}

TEST(Emit, EmptyAndMalformed) {
  std::stringstream ss;
  EXPECT_THROW(write_distance_csv(ss, DistanceTable{}), IoError);
  EXPECT_TRUE(ss.str().empty());
  EXPECT_THROW(distance_report(small_config(), DistanceTable{}, std::nullopt), IoError);
  std::stringstream bad("n,delta\n1,2\n");
  EXPECT_THROW(parse_distance_csv(bad), IoError);
  std::stringstream header_only{std::string(kDistanceCsvHeader) + "\n"};
  EXPECT_THROW(parse_distance_csv(header_only), IoError);
  EXPECT_THROW(write_coupling_csv(ss, CouplingTable{}), IoError);
}

TEST(Emit, JsonReport) {
  const ExperimentConfig c = small_config();
  const DistanceTable t = run_clt_experiment(c);
  const nlohmann::json j = distance_report(c, t, std::nullopt);
  EXPECT_EQ(j.at("schema"), "ousme/v1");
  EXPECT_EQ(j.at("seed"), c.seed);
  EXPECT_EQ(j.at("config").at("seed"), c.seed);
  EXPECT_EQ(j.at("config").at("model").at("kind"), "fou1");
  EXPECT_EQ(j.at("rows").size(), 2u);
  EXPECT_TRUE(j.at("fit").is_null());
  EXPECT_TRUE(j.contains("generated_at"));
}

TEST(Emit, FormatDoubleRoundTrips) {
  for (double v : {0.1, 1.0 / 3, 1e-300, 123456789.125, -2.5})
    EXPECT_EQ(parse_double(format_double(v)), v);
  EXPECT_TRUE(std::isnan(parse_double(format_double(NAN))));
  EXPECT_EQ(parse_double(format_double(INFINITY)), INFINITY);
  EXPECT_THROW(parse_double("1.5x"), IoError);
}

TEST(Experiment, RowsAreConsistent) {
  const DistanceTable t = run_clt_experiment(small_config());
  ASSERT_EQ(t.rows.size(), 2u);
  for (const DistanceRow& r : t.rows) {
    EXPECT_TRUE(r.failure.empty()) << r.failure;
    EXPECT_DOUBLE_EQ(r.Tn, static_cast<double>(r.n) * r.delta);
    EXPECT_EQ(r.statistic, "Vn_X");
    EXPECT_GT(r.d_kol, 0.0);
    EXPECT_LT(r.d_kol, 0.3);
    EXPECT_EQ(r.censored, 0u);
    EXPECT_DOUBLE_EQ(r.se_kol, 1.0 / std::sqrt(800.0));
    EXPECT_NEAR(r.sigma * r.sigma, limit_variance(StationaryCovariance(small_config().model)).value, 1e-12);
  }
  EXPECT_LT(t.rows[0].n, t.rows[1].n);
}

TEST(Experiment, ThreadCountDoesNotChangeResults) {
  ExperimentConfig c = small_config();
  const DistanceTable serial = run_clt_experiment(c);
  c.threads = 4;
  const DistanceTable par = run_clt_experiment(c);
  for (std::size_t i = 0; i < serial.rows.size(); ++i) {
    EXPECT_EQ(serial.rows[i].d_kol, par.rows[i].d_kol);
    EXPECT_EQ(serial.rows[i].d_w, par.rows[i].d_w);
  }
  c.statistic = Statistic::Drift;
  c.threads = 1;
  const CouplingTable cs = coupling_check(c);
  c.threads = 3;
  const CouplingTable cp = coupling_check(c);
  for (std::size_t i = 0; i < cs.rows.size(); ++i) EXPECT_EQ(cs.rows[i].mse, cp.rows[i].mse);
}

TEST(Experiment, SeedChangesResults) {
  ExperimentConfig c = small_config();
  const DistanceTable a = run_clt_experiment(c);
  c.seed = 12;
  const DistanceTable b = run_clt_experiment(c);
  EXPECT_NE(a.rows[0].d_kol, b.rows[0].d_kol);
}

TEST(Experiment, IidCustomSequenceApproachesNormal) {
  // delta_0 covariance: V_n / sigma is a normalized chi-square sum
  ExperimentConfig c;
  c.model = ModelParams::custom({1.0});
  c.statistic = Statistic::VnZ;
  c.alpha = 0.5;
  c.n_list = {4, 64, 1024};
  c.reps = 4000;
  const DistanceTable t = run_clt_experiment(c);
  ASSERT_EQ(t.rows.size(), 3u);
  EXPECT_GT(t.rows[0].d_kol, t.rows[1].d_kol);
  EXPECT_GT(t.rows[1].d_kol, t.rows[2].d_kol);
  for (const DistanceRow& r : t.rows) EXPECT_NEAR(r.sigma * r.sigma, 2.0 * r.delta, 1e-15);
}

TEST(Experiment, DriftMismatchIsOffCentre) {
  ExperimentConfig c = small_config();
  c.statistic = Statistic::Drift;
  c.alpha = 0.4;
  c.n_list = {4096};
  c.drift_true = 2.0;
  const DistanceTable t = run_drift_experiment(c);
  EXPECT_GT(t.rows[0].d_kol, 0.95);
}

TEST(Experiment, Fou2DriftIsUncensored) {
  ExperimentConfig c = small_config();
  c.model = ModelParams::fou2(1.0, 0.75);
  c.statistic = Statistic::Drift;
  c.alpha = 0.4;
  c.n_list = {1024};
  const DistanceTable t = run_drift_experiment(c);
  EXPECT_TRUE(t.rows[0].failure.empty());
  EXPECT_EQ(t.rows[0].censored, 0u);
  EXPECT_FALSE(t.rows[0].censoring_flag);
  EXPECT_TRUE(std::isfinite(t.rows[0].d_kol));
  EXPECT_LT(t.rows[0].d_kol, 0.2);
}

TEST(Coupling, DegenerateAndDirectional) {
  ExperimentConfig c = small_config();
  c.n_list = {1};
  const CouplingTable one = coupling_check(c);
  ASSERT_EQ(one.rows.size(), 1u);
  EXPECT_TRUE(std::isfinite(one.rows[0].mse));
  EXPECT_TRUE(std::isfinite(one.rows[0].product));

  // faster mean reversion shrinks the coupling error
  c.n_list = {1024};
  c.reps = 1000;
  const double slow = coupling_check(c).rows[0].product;
  c.model = ModelParams::fou1(4.0, 0.6);
  const double fast = coupling_check(c).rows[0].product;
  EXPECT_LT(fast, slow);

  c.model = ModelParams::custom({1.0});
  c.statistic = Statistic::VnZ;
  EXPECT_THROW(coupling_check(c), ConfigError);
}

TEST(DiscreteLimitVariance, Formula) {
  const std::vector<double> seq{1.0, 0.5, 0.25};
  EXPECT_DOUBLE_EQ(discrete_limit_variance(seq, 0.5), 2 * 0.5 * (1 + 2 * 0.25 + 2 * 0.0625));
  EXPECT_THROW(discrete_limit_variance(std::vector<double>{}, 1.0), DomainError);
}

TEST(PlotScript, ReferencesColumns) {
  std::stringstream ss;
  write_plot_script(ss, "out.csv");
  const std::string s = ss.str();
  EXPECT_NE(s.find("d_kol"), std::string::npos);
  EXPECT_NE(s.find("bound_kol"), std::string::npos);
  EXPECT_NE(s.find("\"out.csv\""), std::string::npos);
}

TEST(Experiment, Fou1DriftRateSlope) {
  ExperimentConfig c;
  c.model = ModelParams::fou1(1.0, 0.6);
  c.statistic = Statistic::Drift;
  c.alpha = 0.5;
  c.n_list = {256, 1024, 4096, 16384};
  c.reps = 10000;
  c.seed = 5;
  const RateFit f = fit_rate(run_drift_experiment(c), "d_kol", theoretical_slope(c.model, c.alpha));
  EXPECT_GE(f.slope, -0.40);
  EXPECT_LE(f.slope, -0.10);
  EXPECT_FALSE(f.noise_floor_flag);
  EXPECT_EQ(f.used_rows, 4u);
}

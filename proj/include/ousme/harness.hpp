#pragma once

// Monte Carlo experiments over a schedule Delta_n = c0 n^{-alpha}: distance
// tables for V_n / sigma and the standardized drift statistic, the coupling
// check between V_n(X) and V_n(Z), log-log rate fits and report emission.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>  // nlohmann::json, vendored

#include "ousme/covariance.hpp"
#include "ousme/cumulants.hpp"
#include "ousme/distances.hpp"
#include "ousme/errors.hpp"
#include "ousme/estimators.hpp"
#include "ousme/parallel.hpp"
#include "ousme/sampler.hpp"

namespace ousme {

enum class Statistic { VnZ, VnX, Drift };

inline std::string statistic_name(Statistic s) {
  switch (s) {
    case Statistic::VnZ: return "Vn_Z";
    case Statistic::VnX: return "Vn_X";
    case Statistic::Drift: return "drift";
  }
  return "?";
}

inline Statistic parse_statistic(std::string_view s) {
  if (s == "Vn_Z") return Statistic::VnZ;
  if (s == "Vn_X") return Statistic::VnX;
  if (s == "drift") return Statistic::Drift;
  throw ConfigError("unknown statistic '" + std::string(s) + "' (expected Vn_Z, Vn_X or drift)");
}

struct ExperimentConfig {
  ModelParams model = ModelParams::fou1(1.0, 0.6);
  double c0 = 1.0;
  double alpha = 0.5;
  std::vector<std::size_t> n_list{256};
  std::size_t reps = 1000;
  std::uint64_t seed = 1;
  Statistic statistic = Statistic::VnX;
  std::optional<double> drift_true;  // defaults to the model's rate
  unsigned threads = 1;
  std::string out;
  std::string format = "csv";

  double delta_for(std::size_t n) const { return c0 * std::pow(static_cast<double>(n), -alpha); }
  double true_drift() const { return drift_true.value_or(model.rate); }
  void validate() const;
};

inline void ExperimentConfig::validate() const {
  try {
    model.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  if (!(c0 > 0.0) || !std::isfinite(c0)) throw ConfigError("c0 must be > 0");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  if (n_list.empty()) throw ConfigError("n list is empty");
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    if (n_list[i] < 1) throw ConfigError("n values must be >= 1");
    if (i > 0 && n_list[i] <= n_list[i - 1]) throw ConfigError("n list must be strictly increasing");
  }
  if (reps < 1) throw ConfigError("reps must be >= 1");
  if (model.kind == ModelKind::Custom && statistic != Statistic::VnZ)
    throw ConfigError("custom covariance sequences support only the Vn_Z statistic");
  if (drift_true && !(*drift_true > 0.0)) throw ConfigError("drift_true must be > 0");
  if (format != "csv" && format != "json") throw ConfigError("format must be csv or json");
}

// ---------------------------------------------------------------------------
// Config <-> JSON

inline nlohmann::json model_to_json(const ModelParams& m) {
  nlohmann::json j;
  j["kind"] = m.name();
  switch (m.kind) {
    case ModelKind::Fou1: j["theta"] = m.rate; j["hurst"] = m.hurst; break;
    case ModelKind::Fou2: j["mu"] = m.rate; j["hurst"] = m.hurst; break;
    case ModelKind::Custom: j["sequence"] = m.sequence; break;
  }
  return j;
}

inline ModelParams model_from_json(const nlohmann::json& j) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "fou1") return ModelParams::fou1(j.value("theta", 1.0), j.at("hurst").get<double>());
    if (kind == "fou2") return ModelParams::fou2(j.value("mu", 1.0), j.at("hurst").get<double>());
    if (kind == "custom") return ModelParams::custom(j.at("sequence").get<std::vector<double>>());
    throw ConfigError("unknown model kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad model block: ") + e.what());
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
}

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["model"] = model_to_json(c.model);
  j["schedule"] = {{"c0", c.c0}, {"alpha", c.alpha}};
  j["n_list"] = c.n_list;
  j["reps"] = c.reps;
  j["seed"] = c.seed;
  j["statistic"] = statistic_name(c.statistic);
  if (c.drift_true) j["drift_true"] = *c.drift_true;
  j["threads"] = c.threads;
  j["out"] = c.out;
  j["format"] = c.format;
  return j;
}

/// Fields absent from `j` keep their values in `base`.
inline ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig base = {}) {
  try {
    if (j.contains("model")) base.model = model_from_json(j.at("model"));
    if (j.contains("schedule")) {
      const auto& s = j.at("schedule");
      base.c0 = s.value("c0", base.c0);
      base.alpha = s.value("alpha", base.alpha);
    }
    if (j.contains("n_list")) base.n_list = j.at("n_list").get<std::vector<std::size_t>>();
    if (j.contains("reps")) base.reps = j.at("reps").get<std::size_t>();
    if (j.contains("seed")) base.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("statistic")) base.statistic = parse_statistic(j.at("statistic").get<std::string>());
    if (j.contains("drift_true")) base.drift_true = j.at("drift_true").get<double>();
    if (j.contains("threads")) base.threads = j.at("threads").get<unsigned>();
    if (j.contains("out")) base.out = j.at("out").get<std::string>();
    if (j.contains("format")) base.format = j.at("format").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config: ") + e.what());
  }
  return base;
}

inline ExperimentConfig load_config_file(const std::string& path, ExperimentConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }
  return config_from_json(j, std::move(base));
}

// ---------------------------------------------------------------------------
// Tables

struct DistanceRow {
  std::size_t n = 0;
  double delta = 0.0;
  double Tn = 0.0;
  std::string statistic;
  double d_kol = std::numeric_limits<double>::quiet_NaN();
  double d_w = std::numeric_limits<double>::quiet_NaN();
  double se_kol = std::numeric_limits<double>::quiet_NaN();
  double psi = std::numeric_limits<double>::quiet_NaN();
  double bound_kol = std::numeric_limits<double>::quiet_NaN();
  double bound_w = std::numeric_limits<double>::quiet_NaN();
  std::size_t censored = 0;
  // not part of the CSV layout
  bool censoring_flag = false;  // censored fraction above 1%
  std::string failure;          // non-empty when the row was aborted
  double sigma = std::numeric_limits<double>::quiet_NaN();
  double clipped_fraction = 0.0;
  double mean = std::numeric_limits<double>::quiet_NaN();  // of the uncensored sample
};

struct DistanceTable {
  std::vector<DistanceRow> rows;
};

struct CouplingRow {
  std::size_t n = 0;
  double delta = 0.0;
  double Tn = 0.0;
  double mse = 0.0;
  double mse_se = 0.0;
  double product = 0.0;  // Tn * mse
};

struct CouplingTable {
  std::vector<CouplingRow> rows;
};

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double theoretical_slope = std::numeric_limits<double>::quiet_NaN();
  bool noise_floor_flag = false;
  std::size_t used_rows = 0;
};

/// Predicted log-log slope of the unit-constant bound along Delta_n = c0 n^{-alpha}.
inline double theoretical_slope(const ModelParams& model, double alpha) {
  if (model.kind == ModelKind::Fou1 && model.hurst > 0.625)
    return -std::min(alpha, (1.0 - alpha) * (3.0 - 4.0 * model.hurst));
  return -std::min(alpha, (1.0 - alpha) / 2.0);
}

/// lim E V_n(Z)^2 for a sequence in lag-index units: 2 Delta sum_{|k|<L} rho_k^2.
inline double discrete_limit_variance(std::span<const double> seq, double delta) {
  if (seq.empty()) throw DomainError("discrete_limit_variance of an empty sequence");
  double acc = seq[0] * seq[0];
  for (std::size_t k = 1; k < seq.size(); ++k) acc += 2.0 * seq[k] * seq[k];
  return 2.0 * delta * acc;
}

// ---------------------------------------------------------------------------
// Experiments

namespace detail {

inline double model_limit_variance(const StationaryCovariance& cov, double delta) {
  if (cov.params().kind == ModelKind::Custom)
    return discrete_limit_variance(cov.params().sequence, delta);
  return limit_variance(cov).value;
}

inline std::string describe_failure(const std::exception& e) { return e.what(); }

}  // namespace detail

/// Per replication: V_n / sigma (Vn_Z, Vn_X) or sqrt(Tn) (f(v_n) - drift) / scale
/// (drift); censored replications (v_n <= 0 for the drift map) are excluded
/// and counted. Rows that fail numerically carry the reason in `failure`.
inline DistanceTable run_distance_experiment(const ExperimentConfig& config) {
  config.validate();
  const StationaryCovariance cov(config.model);
  const double rho0 = cov.rho0();
  const double rate = config.model.rate;
  const bool fou2 = config.model.kind == ModelKind::Fou2;
  const double gamma = cov.decay().gamma;

  // sigma for Vn statistics and the drift standardization do not depend on n
  // for the continuous-time models.
  std::optional<double> sigma_cont;
  std::optional<StandardizationConstants> stdz;

  DistanceTable table;
  for (std::size_t n : config.n_list) {
    DistanceRow row;
    row.n = n;
    row.delta = config.delta_for(n);
    row.Tn = static_cast<double>(n) * row.delta;
    row.statistic = statistic_name(config.statistic);
    try {
      const SamplingGrid grid(n, row.delta);
      const CovSequence seq = build_cov_sequence(cov, grid);
      double sigma;
      if (config.model.kind == ModelKind::Custom) {
        sigma = std::sqrt(detail::model_limit_variance(cov, row.delta));
      } else {
        if (!sigma_cont) sigma_cont = std::sqrt(limit_variance(cov).value);
        sigma = *sigma_cont;
      }
      row.sigma = sigma;
      if (config.statistic == Statistic::Drift && !stdz) {
        stdz = fou2 ? standardize_fou2(rate, config.model.hurst, sigma)
                    : standardize_fou1(rate, config.model.hurst, sigma);
      }

      const CirculantSampler sampler(seq);
      row.clipped_fraction = sampler.report().clipped_fraction;
      const std::uint64_t key = derive_stream_key(config.seed, n);
      const double sqrt_tn = std::sqrt(row.Tn);
      const double drift_true = config.true_drift();
      std::vector<double> stat(config.reps);
      std::vector<unsigned char> censored(config.reps, 0);

      struct Worker {
        CirculantSampler::Workspace ws;
        std::vector<double> path;
      };
      parallel_for(
          config.reps, config.threads,
          [&] { return Worker{sampler.make_workspace(), std::vector<double>(n)}; },
          [&](Worker& w, std::size_t i) {
            sampler.sample(w.ws, key, i, w.path.data());
            if (config.statistic != Statistic::VnZ) z_to_x_path(w.path.data(), n, row.delta, rate);
            const double v = second_moment(w.path);
            if (config.statistic != Statistic::Drift) {
              stat[i] = normalized_fluct(v, rho0, row.Tn) / sigma;
              return;
            }
            if (!(v > 0.0)) {
              censored[i] = 1;
              return;
            }
            try {
              const double est = fou2 ? invert_f_mu(v, config.model.hurst) : f_H(v, config.model.hurst);
              stat[i] = sqrt_tn * (est - drift_true) / stdz->scale;
            } catch (const DomainError&) {
              censored[i] = 1;
            }
          });

      std::vector<double> sample;
      sample.reserve(config.reps);
      for (std::size_t i = 0; i < config.reps; ++i)
        if (!censored[i]) sample.push_back(stat[i]);
      row.censored = config.reps - sample.size();
      row.censoring_flag = static_cast<double>(row.censored) > 0.01 * static_cast<double>(config.reps);
      if (sample.size() < 2) throw NumericalError("fewer than 2 uncensored replications");
      const DistanceEstimate d = estimate_distances(sample, row.censored);
      row.d_kol = d.d_kol;
      row.d_w = d.d_w;
      row.se_kol = d.se_kol;
      row.mean = std::accumulate(sample.begin(), sample.end(), 0.0) / static_cast<double>(sample.size());
      if (gamma > 0.5) row.psi = psi_n(row.delta, row.Tn, gamma);
      if (row.Tn > 1.0) {
        const BoundCurves b = bound_curves(config.model, n, row.delta);
        row.bound_kol = b.d_kol_bound;
        row.bound_w = b.d_w_bound;
      }
    } catch (const NumericalError& e) {
      row.failure = detail::describe_failure(e);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

inline DistanceTable run_clt_experiment(const ExperimentConfig& config) {
  if (config.statistic == Statistic::Drift)
    throw ConfigError("run_clt_experiment expects statistic Vn_Z or Vn_X");
  return run_distance_experiment(config);
}

inline DistanceTable run_drift_experiment(const ExperimentConfig& config) {
  if (config.statistic != Statistic::Drift)
    throw ConfigError("run_drift_experiment expects statistic drift");
  if (config.model.kind == ModelKind::Custom)
    throw ConfigError("drift experiments need an fOU model");
  return run_distance_experiment(config);
}

/// Monte Carlo estimate of E|V_n(X) - V_n(Z)|^2 on common paths.
inline CouplingTable coupling_check(const ExperimentConfig& config) {
  config.validate();
  if (config.model.kind == ModelKind::Custom)
    throw ConfigError("coupling_check needs an fOU model");
  const StationaryCovariance cov(config.model);
  const double rho0 = cov.rho0();
  const double rate = config.model.rate;
  CouplingTable table;
  for (std::size_t n : config.n_list) {
    CouplingRow row;
    row.n = n;
    row.delta = config.delta_for(n);
    row.Tn = static_cast<double>(n) * row.delta;
    const SamplingGrid grid(n, row.delta);
    const CirculantSampler sampler(build_cov_sequence(cov, grid));
    const std::uint64_t key = derive_stream_key(config.seed, n);
    std::vector<double> sq(config.reps);
    struct Worker {
      CirculantSampler::Workspace ws;
      std::vector<double> path;
    };
    parallel_for(
        config.reps, config.threads,
        [&] { return Worker{sampler.make_workspace(), std::vector<double>(n)}; },
        [&](Worker& w, std::size_t i) {
          sampler.sample(w.ws, key, i, w.path.data());
          const double vz = normalized_fluct(second_moment(w.path), rho0, row.Tn);
          z_to_x_path(w.path.data(), n, row.delta, rate);
          const double vx = normalized_fluct(second_moment(w.path), rho0, row.Tn);
          sq[i] = (vx - vz) * (vx - vz);
        });
    double s = 0.0;
    double s2 = 0.0;
    for (double v : sq) {
      s += v;
      s2 += v * v;
    }
    const double m = static_cast<double>(config.reps);
    row.mse = s / m;
    row.mse_se = config.reps > 1 ? std::sqrt(std::max(0.0, s2 / m - row.mse * row.mse) / (m - 1.0)) : 0.0;
    row.product = row.Tn * row.mse;
    table.rows.push_back(row);
  }
  return table;
}

/// OLS of log(column) on log(n) over rows with column > 3 se_kol.
inline RateFit fit_rate(const DistanceTable& table, std::string_view column,
                        double theoretical = std::numeric_limits<double>::quiet_NaN()) {
  if (column != "d_kol" && column != "d_w") throw ConfigError("fit column must be d_kol or d_w");
  RateFit fit;
  fit.theoretical_slope = theoretical;
  std::vector<double> lx;
  std::vector<double> ly;
  double min_d = std::numeric_limits<double>::infinity();
  double floor_at_min = 0.0;
  for (const DistanceRow& r : table.rows) {
    const double d = column == "d_kol" ? r.d_kol : r.d_w;
    if (!std::isfinite(d)) continue;
    const double se = std::isfinite(r.se_kol) ? r.se_kol : 0.0;
    if (d < min_d) {
      min_d = d;
      floor_at_min = se;
    }
    if (d > 3.0 * se && d > 0.0) {
      lx.push_back(std::log(static_cast<double>(r.n)));
      ly.push_back(std::log(d));
    }
  }
  fit.noise_floor_flag = std::isfinite(min_d) && min_d < 3.0 * floor_at_min;
  fit.used_rows = lx.size();
  if (lx.size() < 3)
    throw NumericalError("fit_rate: " + std::to_string(lx.size()) +
                         " usable rows above the noise floor, need 3");
  const double k = static_cast<double>(lx.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= k;
  my /= k;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw NumericalError("fit_rate: n values are not distinct");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  return fit;
}

// ---------------------------------------------------------------------------
// Emission

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw IoError("malformed number '" + std::string(s) + "'");
  return v;
}

constexpr std::string_view kDistanceCsvHeader =
    "n,delta,Tn,statistic,d_kol,d_w,se_kol,psi,bound_kol,bound_w,censored";

inline void write_distance_csv(std::ostream& os, const DistanceTable& table) {
  if (table.rows.empty()) throw IoError("refusing to write an empty distance table");
  os << kDistanceCsvHeader << '\n';
  for (const DistanceRow& r : table.rows) {
    os << r.n << ',' << format_double(r.delta) << ',' << format_double(r.Tn) << ',' << r.statistic
       << ',' << format_double(r.d_kol) << ',' << format_double(r.d_w) << ','
       << format_double(r.se_kol) << ',' << format_double(r.psi) << ','
       << format_double(r.bound_kol) << ',' << format_double(r.bound_w) << ',' << r.censored
       << '\n';
  }
  if (!os) throw IoError("failed writing distance table");
}

inline DistanceTable parse_distance_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kDistanceCsvHeader)
    throw IoError("distance table CSV has an unexpected header");
  DistanceTable table;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 11) throw IoError("distance table row has " + std::to_string(f.size()) + " fields");
    DistanceRow r;
    r.n = static_cast<std::size_t>(parse_double(f[0]));
    r.delta = parse_double(f[1]);
    r.Tn = parse_double(f[2]);
    r.statistic = f[3];
    r.d_kol = parse_double(f[4]);
    r.d_w = parse_double(f[5]);
    r.se_kol = parse_double(f[6]);
    r.psi = parse_double(f[7]);
    r.bound_kol = parse_double(f[8]);
    r.bound_w = parse_double(f[9]);
    r.censored = static_cast<std::size_t>(parse_double(f[10]));
    table.rows.push_back(std::move(r));
  }
  if (table.rows.empty()) throw IoError("distance table CSV has no rows");
  return table;
}

inline void write_coupling_csv(std::ostream& os, const CouplingTable& table) {
  if (table.rows.empty()) throw IoError("refusing to write an empty coupling table");
  os << "n,delta,Tn,mse,mse_se,product\n";
  for (const CouplingRow& r : table.rows)
    os << r.n << ',' << format_double(r.delta) << ',' << format_double(r.Tn) << ','
       << format_double(r.mse) << ',' << format_double(r.mse_se) << ',' << format_double(r.product)
       << '\n';
  if (!os) throw IoError("failed writing coupling table");
}

inline nlohmann::json to_json(const DistanceRow& r) {
  nlohmann::json j = {{"n", r.n},           {"delta", r.delta},     {"Tn", r.Tn},
                      {"statistic", r.statistic}, {"d_kol", r.d_kol}, {"d_w", r.d_w},
                      {"se_kol", r.se_kol}, {"psi", r.psi},         {"bound_kol", r.bound_kol},
                      {"bound_w", r.bound_w}, {"censored", r.censored},
                      {"censoring_flag", r.censoring_flag}, {"sigma", r.sigma},
                      {"clipped_fraction", r.clipped_fraction}, {"mean", r.mean}};
  if (!r.failure.empty()) j["failure"] = r.failure;
  return j;
}

inline nlohmann::json to_json(const CouplingRow& r) {
  return {{"n", r.n},     {"delta", r.delta},   {"Tn", r.Tn},
          {"mse", r.mse}, {"mse_se", r.mse_se}, {"product", r.product}};
}

inline nlohmann::json to_json(const RateFit& f) {
  return {{"slope", f.slope},
          {"intercept", f.intercept},
          {"r2", f.r2},
          {"theoretical_slope", f.theoretical_slope},
          {"noise_floor_flag", f.noise_floor_flag},
          {"used_rows", f.used_rows}};
}

inline nlohmann::json to_json(const CumulantReport& r) {
  return {{"n", r.grid.n},
          {"delta", r.grid.delta},
          {"Tn", r.grid.Tn()},
          {"kappa2", r.kappa2},
          {"kappa3", r.kappa3},
          {"kappa4", r.kappa4},
          {"variance_defect", r.variance_defect},
          {"psi", r.psi},
          {"k3_rate", r.k3_rate},
          {"k4_rate", r.k4_rate}};
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

/// Versioned report envelope: schema tag, config echo, root seed, timestamp.
inline nlohmann::json report_envelope(const ExperimentConfig& config, std::string_view kind) {
  nlohmann::json j;
  j["schema"] = "ousme/v1";
  j["kind"] = std::string(kind);
  j["config"] = config_to_json(config);
  j["seed"] = config.seed;
  j["generated_at"] = utc_timestamp();
  return j;
}

inline nlohmann::json distance_report(const ExperimentConfig& config, const DistanceTable& table,
                                      const std::optional<RateFit>& fit,
                                      const std::string& fit_note = {}) {
  if (table.rows.empty()) throw IoError("refusing to emit an empty distance table");
  nlohmann::json j = report_envelope(config, statistic_name(config.statistic));
  j["rows"] = nlohmann::json::array();
  for (const auto& r : table.rows) j["rows"].push_back(to_json(r));
  j["fit"] = fit ? to_json(*fit) : nlohmann::json(nullptr);
  if (!fit_note.empty()) j["fit_note"] = fit_note;
  return j;
}

/// matplotlib script plotting d_kol and d_w against n with the bound curve.
inline void write_plot_script(std::ostream& os, const std::string& csv_path) {
  os << "#!/usr/bin/env python3\n"
        "import csv, sys\n"
        "import matplotlib.pyplot as plt\n\n"
        "path = sys.argv[1] if len(sys.argv) > 1 else " << std::quoted(csv_path) << "\n"
        "rows = list(csv.DictReader(open(path)))\n"
        "n = [float(r['n']) for r in rows]\n"
        "for col, style in (('d_kol', 'o-'), ('d_w', 's-'), ('bound_kol', 'k--')):\n"
        "    plt.loglog(n, [float(r[col]) for r in rows], style, label=col)\n"
        "plt.loglog(n, [3 * float(r['se_kol']) for r in rows], 'k:', label='3 se_kol')\n"
        "plt.xlabel('n')\n"
        "plt.ylabel('distance to N(0,1)')\n"
        "plt.legend()\n"
        "plt.savefig(path.rsplit('.', 1)[0] + '.png', dpi=150)\n";
}

}  // namespace ousme

// ousme command-line harness. Exit codes: 0 success, 2 configuration or
// domain error, 3 numerical failure.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <list>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ousme/ousme.hpp"

namespace {

using ousme::ExperimentConfig;

struct Flags {
  std::string config_path;
  std::string model;
  double hurst = 0.0;
  double theta = 0.0;
  double mu = 0.0;
  double alpha = 0.0;
  double c0 = 0.0;
  std::string n_list;
  std::size_t reps = 0;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string out;
  std::string format;
  std::string statistic;
  double delta = 0.0;
  std::string input;
  std::string plot;

  CLI::Option* o_model = nullptr;
  CLI::Option* o_hurst = nullptr;
  CLI::Option* o_theta = nullptr;
  CLI::Option* o_mu = nullptr;
  CLI::Option* o_alpha = nullptr;
  CLI::Option* o_c0 = nullptr;
  CLI::Option* o_n = nullptr;
  CLI::Option* o_reps = nullptr;
  CLI::Option* o_seed = nullptr;
  CLI::Option* o_threads = nullptr;
  CLI::Option* o_out = nullptr;
  CLI::Option* o_format = nullptr;
  CLI::Option* o_statistic = nullptr;
  CLI::Option* o_delta = nullptr;
};

void add_common(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config_path, "JSON experiment config; flags override it");
  f.o_model = app->add_option("--model", f.model, "fou1 | fou2")->check(CLI::IsMember({"fou1", "fou2"}));
  f.o_hurst = app->add_option("--hurst", f.hurst, "Hurst index H");
  f.o_theta = app->add_option("--theta", f.theta, "fOU1 drift rate");
  f.o_mu = app->add_option("--mu", f.mu, "fOU2 drift rate");
  f.o_alpha = app->add_option("--alpha", f.alpha, "schedule exponent: delta_n = c0 n^-alpha");
  f.o_c0 = app->add_option("--c0", f.c0, "schedule constant");
  f.o_n = app->add_option("--n", f.n_list, "comma-separated increasing n values");
  f.o_reps = app->add_option("--reps", f.reps, "replications per n");
  f.o_seed = app->add_option("--seed", f.seed, "root seed");
  f.o_threads = app->add_option("--threads", f.threads, "worker threads (default: $OUSME_THREADS or all cores)");
  f.o_out = app->add_option("--out", f.out, "output path (default: stdout)");
  f.o_format = app->add_option("--format", f.format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
}

std::vector<std::size_t> parse_n_list(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      const long long v = std::stoll(item, &pos);
      if (pos != item.size() || v < 1) throw std::invalid_argument(item);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw ousme::ConfigError("bad --n entry '" + item + "'");
    }
  }
  if (out.empty()) throw ousme::ConfigError("--n is empty");
  return out;
}

ExperimentConfig resolve_config(const Flags& f) {
  ExperimentConfig c;
  c.threads = 0;
  if (!f.config_path.empty()) c = ousme::load_config_file(f.config_path, c);

  // Model: start from the file's model and override individual parameters.
  std::string kind = c.model.name();
  double hurst = c.model.hurst;
  double rate = c.model.rate;
  if (f.o_model->count()) kind = f.model;
  if (f.o_hurst->count()) hurst = f.hurst;
  if (kind == "fou1" && f.o_theta->count()) rate = f.theta;
  if (kind == "fou2" && f.o_mu->count()) rate = f.mu;
  if (kind == "fou1" && f.o_mu->count()) throw ousme::ConfigError("--mu applies to fou2");
  if (kind == "fou2" && f.o_theta->count()) throw ousme::ConfigError("--theta applies to fou1");
  if (kind != c.model.name() && !f.o_hurst->count())
    throw ousme::ConfigError("--hurst is required when switching model");
  if (kind != c.model.name() && !(f.o_theta->count() || f.o_mu->count())) rate = 1.0;
  try {
    if (kind == "fou1") c.model = ousme::ModelParams::fou1(rate, hurst);
    else if (kind == "fou2") c.model = ousme::ModelParams::fou2(rate, hurst);
  } catch (const ousme::DomainError& e) {
    throw ousme::ConfigError(e.what());
  }

  if (f.o_alpha->count()) c.alpha = f.alpha;
  if (f.o_c0->count()) c.c0 = f.c0;
  if (f.o_n->count()) c.n_list = parse_n_list(f.n_list);
  if (f.o_reps->count()) c.reps = f.reps;
  if (f.o_seed->count()) c.seed = f.seed;
  if (f.o_threads->count()) {
    if (f.threads == 0) throw ousme::ConfigError("--threads must be >= 1");
    c.threads = f.threads;
  }
  c.threads = ousme::resolve_threads(c.threads);
  if (f.o_out->count()) c.out = f.out;
  if (f.o_format->count()) c.format = f.format;
  if (f.o_statistic && f.o_statistic->count()) c.statistic = ousme::parse_statistic(f.statistic);
  return c;
}

/// Writes to --out (or stdout) only after the content is complete.
void emit(const ExperimentConfig& c, const std::string& content) {
  if (c.out.empty()) {
    std::cout << content;
    std::cout.flush();
    return;
  }
  std::ofstream os(c.out, std::ios::binary);
  if (!os) throw ousme::IoError("cannot open output file " + c.out);
  os << content;
  if (!os) throw ousme::IoError("failed writing " + c.out);
}

double grid_delta(const Flags& f, const ExperimentConfig& c, std::size_t n) {
  if (f.o_delta && f.o_delta->count()) {
    if (!(f.delta > 0.0)) throw ousme::ConfigError("--delta must be > 0");
    return f.delta;
  }
  return c.delta_for(n);
}

int cmd_cov(const Flags& f) {
  ExperimentConfig c = resolve_config(f);
  c.validate();
  const ousme::StationaryCovariance cov(c.model);
  std::ostringstream os;
  if (c.format == "json") {
    nlohmann::json j = ousme::report_envelope(c, "covariance");
    j["rho0"] = cov.rho0();
    j["decay"] = {{"gamma", cov.decay().gamma}, {"m0", cov.decay().m0}, {"decay_const", cov.decay_const()}};
    const ousme::SigmaSq s = ousme::sigma_sq(cov);
    j["sigma_sq"] = {{"value", s.value}, {"error", s.error}, {"horizon", s.horizon}};
    j["limit_variance"] = 0.5 * s.value;
    j["sequences"] = nlohmann::json::array();
    for (std::size_t n : c.n_list) {
      const auto seq = ousme::build_cov_sequence(cov, ousme::SamplingGrid(n, grid_delta(f, c, n)));
      j["sequences"].push_back({{"n", n}, {"delta", seq.grid.delta}, {"rho", seq.values}});
    }
    os << j.dump(2) << '\n';
  } else {
    const std::size_t n = c.n_list.back();
    ousme::write_covariance_csv(os, ousme::build_cov_sequence(cov, ousme::SamplingGrid(n, grid_delta(f, c, n))));
  }
  emit(c, os.str());
  return 0;
}

int cmd_simulate(const Flags& f) {
  ExperimentConfig c = resolve_config(f);
  c.validate();
  const std::size_t n = c.n_list.back();
  const ousme::StationaryCovariance cov(c.model);
  const auto seq = ousme::build_cov_sequence(cov, ousme::SamplingGrid(n, grid_delta(f, c, n)));
  ousme::PathBatch batch = ousme::circulant_sample(seq, c.reps, c.seed, c.threads, n);
  if (c.statistic != ousme::Statistic::VnZ)
    batch = ousme::z_to_x(batch, c.model.rate,
                          c.model.kind == ousme::ModelKind::Fou2 ? ousme::PathKind::S : ousme::PathKind::X);
  std::ostringstream os;
  if (f.o_format->count() && c.format == "csv") {
    ousme::write_path_batch_csv(os, batch);
  } else if (f.o_format->count() && c.format == "json") {
    throw ousme::ConfigError("simulate writes the OUSME1 binary layout or CSV");
  } else {
    if (c.out.empty()) throw ousme::ConfigError("simulate writes binary output; give --out or --format csv");
    ousme::write_path_batch_binary(os, batch);
  }
  emit(c, os.str());
  return 0;
}

int cmd_cumulants(const Flags& f) {
  ExperimentConfig c = resolve_config(f);
  c.validate();
  const ousme::StationaryCovariance cov(c.model);
  const double s2 = ousme::limit_variance(cov).value;
  std::vector<ousme::CumulantReport> reps;
  for (std::size_t n : c.n_list) {
    const auto seq = ousme::build_cov_sequence(cov, ousme::SamplingGrid(n, grid_delta(f, c, n)));
    reps.push_back(ousme::exact_cumulants(seq, ousme::CumulantContext{s2, cov.decay().gamma}));
  }
  std::ostringstream os;
  if (c.format == "json") {
    nlohmann::json j = ousme::report_envelope(c, "cumulants");
    j["limit_variance"] = s2;
    j["rows"] = nlohmann::json::array();
    for (const auto& r : reps) j["rows"].push_back(ousme::to_json(r));
    os << j.dump(2) << '\n';
  } else {
    using ousme::format_double;
    os << "n,delta,Tn,kappa2,kappa3,kappa4,variance_defect,psi,k3_rate,k4_rate\n";
    for (const auto& r : reps)
      os << r.grid.n << ',' << format_double(r.grid.delta) << ',' << format_double(r.grid.Tn()) << ','
         << format_double(r.kappa2) << ',' << format_double(r.kappa3) << ',' << format_double(r.kappa4)
         << ',' << format_double(r.variance_defect) << ',' << format_double(r.psi) << ','
         << format_double(r.k3_rate) << ',' << format_double(r.k4_rate) << '\n';
  }
  emit(c, os.str());
  return 0;
}

int emit_distance(const Flags& f, const ExperimentConfig& c, const ousme::DistanceTable& table) {
  std::ostringstream os;
  if (c.format == "json") {
    std::optional<ousme::RateFit> fit;
    std::string note;
    try {
      fit = ousme::fit_rate(table, "d_kol", ousme::theoretical_slope(c.model, c.alpha));
    } catch (const ousme::NumericalError& e) {
      note = e.what();
    }
    os << ousme::distance_report(c, table, fit, note).dump(2) << '\n';
  } else {
    ousme::write_distance_csv(os, table);
  }
  emit(c, os.str());
  if (!f.plot.empty()) {
    std::ofstream ps(f.plot);
    if (!ps) throw ousme::IoError("cannot open plot script path " + f.plot);
    ousme::write_plot_script(ps, c.out.empty() ? "table.csv" : c.out);
  }
  for (const auto& r : table.rows) {
    if (!r.failure.empty()) {
      std::cerr << "ousme: row n=" << r.n << " failed: " << r.failure << '\n';
      return 3;
    }
  }
  return 0;
}

int cmd_clt(const Flags& f) {
  ExperimentConfig c = resolve_config(f);
  if (!(f.o_statistic && f.o_statistic->count()) && c.statistic == ousme::Statistic::Drift)
    c.statistic = ousme::Statistic::VnX;
  return emit_distance(f, c, ousme::run_clt_experiment(c));
}

int cmd_drift(const Flags& f) {
  ExperimentConfig c = resolve_config(f);
  c.statistic = ousme::Statistic::Drift;
  return emit_distance(f, c, ousme::run_drift_experiment(c));
}

int cmd_couple(const Flags& f) {
  ExperimentConfig c = resolve_config(f);
  const ousme::CouplingTable t = ousme::coupling_check(c);
  std::ostringstream os;
  if (c.format == "json") {
    nlohmann::json j = ousme::report_envelope(c, "coupling");
    j["rows"] = nlohmann::json::array();
    for (const auto& r : t.rows) j["rows"].push_back(ousme::to_json(r));
    os << j.dump(2) << '\n';
  } else {
    ousme::write_coupling_csv(os, t);
  }
  emit(c, os.str());
  return 0;
}

int cmd_rates(const Flags& f) {
  ExperimentConfig c = resolve_config(f);
  if (f.input.empty()) throw ousme::ConfigError("rates needs --in <distance table CSV>");
  std::ifstream in(f.input);
  if (!in) throw ousme::IoError("cannot open " + f.input);
  const ousme::DistanceTable table = ousme::parse_distance_csv(in);
  const double theory = ousme::theoretical_slope(c.model, c.alpha);
  const ousme::RateFit kol = ousme::fit_rate(table, "d_kol", theory);
  std::ostringstream os;
  if (c.format == "json") {
    nlohmann::json j = ousme::report_envelope(c, "rates");
    j["input"] = f.input;
    j["d_kol"] = ousme::to_json(kol);
    try {
      j["d_w"] = ousme::to_json(ousme::fit_rate(table, "d_w", theory));
    } catch (const ousme::NumericalError& e) {
      j["d_w"] = nullptr;
      j["d_w_note"] = e.what();
    }
    os << j.dump(2) << '\n';
  } else {
    using ousme::format_double;
    os << "column,slope,intercept,r2,theoretical_slope,noise_floor_flag,used_rows\n";
    os << "d_kol," << format_double(kol.slope) << ',' << format_double(kol.intercept) << ','
       << format_double(kol.r2) << ',' << format_double(kol.theoretical_slope) << ','
       << (kol.noise_floor_flag ? 1 : 0) << ',' << kol.used_rows << '\n';
  }
  emit(c, os.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ousme: fractional OU simulation, second-moment estimators and Berry-Esseen rate checks"};
  app.require_subcommand(1);

  // One flag set per subcommand so option handles stay distinct.
  std::list<std::pair<CLI::App*, Flags>> subs;
  auto add = [&](const char* name, const char* help) -> std::pair<CLI::App*, Flags>& {
    auto& s = subs.emplace_back(app.add_subcommand(name, help), Flags{});
    add_common(s.first, s.second);
    return s;
  };
  auto add_delta = [](std::pair<CLI::App*, Flags>& s) {
    s.second.o_delta = s.first->add_option("--delta", s.second.delta, "grid step (overrides the schedule)");
  };
  auto add_plot = [](std::pair<CLI::App*, Flags>& s) {
    s.first->add_option("--plot", s.second.plot, "also write a matplotlib script");
  };

  auto& cov = add("cov", "covariance sequence (CSV: lag_index,lag_time,rho)");
  add_delta(cov);
  auto& sim = add("simulate", "simulate a path batch (OUSME1 binary, or CSV)");
  add_delta(sim);
  sim.second.o_statistic = sim.first->add_option("--statistic", sim.second.statistic,
                                                 "Vn_Z keeps Z paths; Vn_X/drift emit X (or S)");
  auto& cum = add("cumulants", "exact cumulants of V_n(Z) and rate bounds");
  add_delta(cum);
  auto& clt = add("clt", "distance of V_n/sigma to N(0,1) along the schedule");
  clt.second.o_statistic = clt.first->add_option("--statistic", clt.second.statistic, "Vn_Z | Vn_X")
                               ->check(CLI::IsMember({"Vn_Z", "Vn_X"}));
  add_plot(clt);
  auto& drift = add("drift", "distance of the standardized drift estimator to N(0,1)");
  add_plot(drift);
  auto& couple = add("couple", "Tn E|V_n(X) - V_n(Z)|^2 along the schedule");
  auto& rates = add("rates", "log-log slope fit of a distance table");
  rates.first->add_option("--in", rates.second.input, "distance table CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (cov.first->parsed()) return cmd_cov(cov.second);
    if (sim.first->parsed()) return cmd_simulate(sim.second);
    if (cum.first->parsed()) return cmd_cumulants(cum.second);
    if (clt.first->parsed()) return cmd_clt(clt.second);
    if (drift.first->parsed()) return cmd_drift(drift.second);
    if (couple.first->parsed()) return cmd_couple(couple.second);
    if (rates.first->parsed()) return cmd_rates(rates.second);
  } catch (const ousme::ConfigError& e) {
    std::cerr << "ousme: configuration error: " << e.what() << '\n';
    return 2;
  } catch (const ousme::DomainError& e) {
    std::cerr << "ousme: domain error: " << e.what() << '\n';
    return 2;
  } catch (const ousme::IoError& e) {
    std::cerr << "ousme: I/O error: " << e.what() << '\n';
    return 2;
  } catch (const ousme::NumericalError& e) {
    std::cerr << "ousme: numerical failure: " << e.what() << '\n';
    return 3;
  }
  return 2;
}

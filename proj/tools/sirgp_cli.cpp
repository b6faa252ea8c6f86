/*
 * Copyright 2026 The sirgp Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 */

// sirgp: simulate | fit | forecast | diagnose | demo-identifiability
//
// Exit codes: 0 ok, 1 runtime failure, 2 usage or configuration error.
// Every subcommand writes manifest.json into the output directory.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include "sirgp/sirgp.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sirgp;

namespace {

constexpr const char* kVersion = "0.1.0";

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string config_path;
  std::string out_dir = ".";
  std::size_t threads = 1;
  bool quiet = false;
};

std::string sha256_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return {};
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

/// Writes via a temporary file and rename so readers never see partial output.
void write_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    if (!out) throw Error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

class Run {
 public:
  Run(std::string command, const Globals& g, int argc, char** argv)
      : command_(std::move(command)), g_(g), start_(std::chrono::steady_clock::now()) {
    for (int i = 0; i < argc; ++i) argv_.emplace_back(argv[i]);
    config_ = g.config_path.empty() ? KeyValueConfig{} : KeyValueConfig::load(g.config_path);
    if (!g.config_path.empty()) add_input(g.config_path);
    fs::create_directories(g.out_dir);
  }

  const KeyValueConfig& config() const { return config_; }
  KeyValueConfig& config() { return config_; }
  const Globals& globals() const { return g_; }

  std::uint64_t seed() const {
    if (g_.seed) return *g_.seed;
    return static_cast<std::uint64_t>(config_.get_integer("seed", 1));
  }

  fs::path out(const std::string& name) const { return fs::path(g_.out_dir) / name; }

  void add_input(const fs::path& p) { inputs_.push_back({{"path", p.string()}, {"sha256", sha256_file(p)}}); }

  void emit(const std::string& name, const std::string& content) {
    const fs::path p = out(name);
    write_atomic(p, content);
    outputs_.push_back({{"path", p.string()}, {"sha256", sha256_file(p)}});
  }

  void info(const std::string& msg) const {
    if (!g_.quiet) std::cerr << msg << '\n';
  }

  /// Rejects config keys nobody read, then writes the manifest.
  void finish(const std::string& effective_config) {
    const auto unused = config_.unused_keys();
    if (!unused.empty()) throw ConfigError("unknown config key: " + unused.front());
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    const std::time_t now = std::time(nullptr);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    json m = {{"command", command_},  {"argv", argv_},       {"version", kVersion},
              {"seed", seed()},       {"threads", g_.threads}, {"config", effective_config},
              {"inputs", inputs_},    {"outputs", outputs_},   {"wall_clock_seconds", secs},
              {"finished_utc", stamp}};
    write_atomic(out("manifest.json"), m.dump(2) + "\n");
  }

 private:
  std::string command_;
  Globals g_;
  std::chrono::steady_clock::time_point start_;
  std::vector<std::string> argv_;
  KeyValueConfig config_;
  json inputs_ = json::array();
  json outputs_ = json::array();
};

std::string fmt(double x) { return format_double(x); }

std::string band_csv(const std::vector<QuantileBand>& bands, const Date& first, std::size_t first_t) {
  std::ostringstream os;
  os << "date,t,median,lo95,hi95\n";
  for (std::size_t i = 0; i < bands.size(); ++i)
    os << format_date(add_days(first, static_cast<long long>(i))) << ',' << first_t + i << ',' << fmt(bands[i].median)
       << ',' << fmt(bands[i].lo) << ',' << fmt(bands[i].hi) << '\n';
  return os.str();
}

std::string matrix_csv(const Eigen::MatrixXd& m, const std::string& prefix) {
  std::ostringstream os;
  for (Eigen::Index c = 0; c < m.cols(); ++c) os << (c ? "," : "") << prefix << c + 1;
  os << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) os << (c ? "," : "") << fmt(m(r, c));
    os << '\n';
  }
  return os.str();
}

/// Prior settings: sibling config snapshot < --config file < --preset flag.
PriorConfig resolve_prior(Run& run, const fs::path& sibling_dir, const std::string& preset_flag) {
  PriorConfig prior = default_prior_config();
  const fs::path snapshot = sibling_dir / "config.txt";
  if (!sibling_dir.empty() && fs::exists(snapshot)) {
    KeyValueConfig kv = KeyValueConfig::load(snapshot.string());
    prior = apply_prior_keys(prior, kv);
  }
  prior = apply_prior_keys(prior, run.config());
  if (!preset_flag.empty()) prior = prior_preset(preset_flag);
  return prior;
}

Observations load_observations(Run& run, const std::string& path, const std::string& region,
                               std::optional<double> population) {
  if (!fs::exists(path)) throw ConfigError("dataset not found: " + path);
  run.add_input(path);
  if (fs::path(path).extension() == ".csv") {
    RawCaseSeries raw = load_case_csv(path, region);
    if (population) {
      raw.population = *population;
    } else if (const auto p = census_population(region)) {
      raw.population = *p;
    } else {
      throw ConfigError("population unknown for region '" + region + "'; pass --population");
    }
    IngestOptions opt;
    opt.threshold = run.config().get_double("threshold", opt.threshold);
    opt.zero_floor = run.config().get_double("zero_floor", opt.zero_floor);
    opt.max_days = static_cast<std::size_t>(run.config().get_integer("max_days", 0));
    return ingest_cases(raw, opt);
  }
  return load_dataset(path);
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string scenario;
  bool integerize = false;
  bool logit_rates = false;
  bool stochastic = false;
  std::size_t days = 80;
};

void cmd_simulate(Run& run, const SimulateArgs& a) {
  ScenarioSpec spec;
  spec.id = parse_scenario(a.scenario);
  spec.seed = run.seed();
  if (a.days < 2) throw ConfigError("--days must be at least 2");
  spec.T = a.days - 1;
  spec.integerize = a.integerize;
  spec.transform = a.logit_rates ? RateTransform::logit_inverse : RateTransform::cloglog_inverse;
  spec.gamma_sd = run.config().get_double("gamma_sd", spec.gamma_sd);
  spec.gamma_mean_tilde = run.config().get_double("gamma_mean_tilde", spec.gamma_mean_tilde);
  const ScenarioData data = generate_scenario(spec);

  std::ostringstream truth;
  truth << "t,date,beta,R0,Re,gamma,S,I_U,I_D,R,B\n";
  Observations obs = data.obs;
  if (a.stochastic) {
    const StochasticData sd = stochastic_generate(spec, data.truth.beta, data.gamma);
    obs = sd.obs;
    for (std::size_t t = 0; t <= spec.T; ++t) {
      const auto& v = sd.states[t];
      const double s = static_cast<double>(v[0]);
      truth << t << ',' << format_date(add_days(obs.day0_date, static_cast<long long>(t))) << ','
            << fmt(data.truth.beta[t]) << ',' << fmt(data.truth.beta[t] / spec.alpha) << ','
            << fmt(data.truth.beta[t] * s / (spec.alpha * spec.N)) << ',' << fmt(data.gamma[t]) << ',' << v[0] << ','
            << v[1] << ',' << v[2] << ',' << v[3] << ',' << sd.diagnosed[t] << '\n';
    }
  } else {
    for (std::size_t t = 0; t <= spec.T; ++t) {
      const auto& v = data.trajectory[t];
      truth << t << ',' << format_date(add_days(obs.day0_date, static_cast<long long>(t))) << ','
            << fmt(data.truth.beta[t]) << ',' << fmt(data.reproduction[t].basic) << ','
            << fmt(data.reproduction[t].effective) << ',' << fmt(data.gamma[t]) << ',' << fmt(v.S) << ','
            << fmt(v.I_U) << ',' << fmt(v.I_D) << ',' << fmt(v.R) << ',' << fmt(data.obs.B[t]) << '\n';
    }
  }
  run.emit("dataset.json", dataset_to_json(obs).dump(2) + "\n");
  run.emit("truth.csv", truth.str());
  run.info("simulated " + std::string(to_string(spec.id)) + ": " + std::to_string(obs.horizon()) + " days");
  std::ostringstream eff;
  eff << "scenario = " << to_string(spec.id) << "\nseed = " << spec.seed << "\ndays = " << a.days
      << "\nintegerize = " << a.integerize << "\nlogit_rates = " << a.logit_rates
      << "\nstochastic = " << a.stochastic << '\n';
  run.finish(eff.str());
}

struct FitArgs {
  std::string dataset;
  std::string preset;
  std::string region;
  std::optional<double> population;
  std::optional<std::size_t> chains, iters, burn_in, thin, swap_every, train_cut;
};

void cmd_fit(Run& run, const FitArgs& a) {
  Observations obs = load_observations(run, a.dataset, a.region, a.population);
  if (a.train_cut) obs = train_test_split(obs, *a.train_cut).first;
  PriorConfig prior = resolve_prior(run, {}, a.preset);

  SamplerConfig cfg = apply_sampler_keys(SamplerConfig{}, run.config());
  const bool burn_given = a.burn_in || run.config().has("burn_in");
  if (a.chains) {
    cfg.n_chains = *a.chains;
    cfg.ladder = TemperatureLadder::geometric(*a.chains, run.config().get_double("ladder_base", 1.5));
  }
  if (a.iters) cfg.n_iter = *a.iters;
  if ((a.iters || run.config().has("iterations")) && !burn_given) cfg.burn_in = cfg.n_iter * 2 / 5;
  if (a.burn_in) cfg.burn_in = *a.burn_in;
  if (a.thin) cfg.thin = *a.thin;
  if (a.swap_every) cfg.swap_every = *a.swap_every;
  cfg.seed = run.seed();
  cfg.threads = run.globals().threads;
  cfg.validate();
  if (cfg.retained() == 0) throw ConfigError("configuration retains no draws");

  const PriorDensity density(prior);
  const ModelDesign design = make_design(prior, obs.horizon());
  const EpidemicModel model(obs, prior.link);
  run.info("fitting " + std::to_string(obs.horizon()) + " days with " + std::to_string(cfg.n_chains) + " chains, " +
           std::to_string(cfg.n_iter) + " iterations");
  ProgressCallback progress;
  if (!run.globals().quiet)
    progress = [](std::size_t i, std::size_t n) {
      if (i % 5000 == 0 || i == n) std::cerr << "  iteration " << i << "/" << n << '\n';
    };
  const PosteriorDraws d = run_sampler(model, density, design, cfg, progress);

  std::ostringstream draws_csv;
  write_draws_csv(draws_csv, d.draws, d.log_likelihood, obs.I_D0);
  run.emit("draws.csv", draws_csv.str());
  run.emit("summary.json", summarize_draws(d, obs.I_D0).dump(2) + "\n");
  run.emit("re_band.csv", band_csv(column_bands(reproduction_draws(d.draws, obs)), obs.day0_date, 0));
  run.emit("dataset.json", dataset_to_json(obs).dump(2) + "\n");
  std::ostringstream eff;
  write_prior_keys(eff, prior);
  write_sampler_keys(eff, cfg);
  run.emit("config.txt", eff.str());
  run.info("retained " + std::to_string(d.draws.size()) + " draws");
  run.finish(eff.str());
}

struct ForecastArgs {
  std::string draws;
  std::string data;
  std::string preset;
  std::size_t horizon = 30;
  bool full = false;
};

DrawsTable load_nonempty_draws(Run& run, const std::string& path) {
  if (!fs::exists(path)) throw ConfigError("draws file not found: " + path);
  run.add_input(path);
  DrawsTable t = load_draws_csv(path);
  if (t.draws.empty()) throw ConfigError("draws file has no rows: " + path);
  return t;
}

std::string sibling_dataset(const std::string& draws, const std::string& data) {
  return data.empty() ? (fs::path(draws).parent_path() / "dataset.json").string() : data;
}

void cmd_forecast(Run& run, const ForecastArgs& a) {
  if (a.horizon < 1) throw ConfigError("--horizon must be at least 1");
  const DrawsTable table = load_nonempty_draws(run, a.draws);
  const std::string data_path = sibling_dataset(a.draws, a.data);
  const Observations obs = load_observations(run, data_path, {}, std::nullopt);
  const PriorConfig prior = resolve_prior(run, fs::path(a.draws).parent_path(), a.preset);
  ForecastOptions opt;
  opt.horizon = a.horizon;
  opt.seed = run.seed();
  const ForecastDraws f = forecast(table.draws, obs, prior, opt);
  const Date first = add_days(obs.day0_date, static_cast<long long>(obs.horizon()));
  run.emit("forecast_B.csv", band_csv(column_bands(f.B_star), first, obs.horizon()));
  run.emit("forecast_Re.csv", band_csv(column_bands(f.Re_star), first, obs.horizon()));
  if (a.full) {
    run.emit("forecast_B_draws.csv", matrix_csv(f.B_star, "h"));
    run.emit("forecast_Re_draws.csv", matrix_csv(f.Re_star, "h"));
  }
  if (f.skipped) run.info("skipped " + std::to_string(f.skipped) + " infeasible draws");
  std::ostringstream eff;
  write_prior_keys(eff, prior);
  eff << "horizon = " << a.horizon << "\nseed = " << opt.seed << '\n';
  run.finish(eff.str());
}

struct DiagnoseArgs {
  std::string draws;
  std::string data;
  std::string preset;
  std::size_t bins = 5;
};

void cmd_diagnose(Run& run, const DiagnoseArgs& a) {
  const DrawsTable table = load_nonempty_draws(run, a.draws);
  const Observations obs = load_observations(run, sibling_dataset(a.draws, a.data), {}, std::nullopt);
  const PriorConfig prior = resolve_prior(run, fs::path(a.draws).parent_path(), a.preset);

  std::ostringstream gw;
  gw << "parameter,z\n";
  for (const auto& [name, trace] : scalar_traces(table.draws, obs.I_D0)) {
    gw << name << ',';
    try {
      gw << fmt(geweke_z(trace).z_score);
    } catch (const DegenerateChain&) {
      gw << "nan";
    } catch (const DomainError&) {
      gw << "nan";
    }
    gw << '\n';
  }
  run.emit("geweke.csv", gw.str());

  const Eigen::MatrixXd y = design_matrix(prior.gamma_design, 0, obs.horizon());
  const ChiSqFitResult fit = bayesian_chi2(table.draws, obs, prior.link, y, a.bins);
  json chi = {{"bins", a.bins},
              {"bin_edges", fit.bin_edges},
              {"bin_probs", fit.bin_probs},
              {"threshold", fit.threshold},
              {"exceed_proportion", fit.exceed_proportion},
              {"mean_omega", fit.mean_omega()},
              {"draws_used", fit.omega_draws.size()},
              {"draws_skipped", fit.skipped}};
  run.emit("chi2.json", chi.dump(2) + "\n");
  std::ostringstream qq;
  qq << "empirical,theoretical\n";
  for (const auto& p : chi2_qq_table(fit.omega_draws, static_cast<double>(a.bins - 1)))
    qq << fmt(p.empirical) << ',' << fmt(p.theoretical) << '\n';
  run.emit("qq.csv", qq.str());
  std::ostringstream eff;
  write_prior_keys(eff, prior);
  eff << "bins = " << a.bins << '\n';
  run.finish(eff.str());
}

void cmd_demo(Run& run) {
  const IdentifiabilityResult r = identifiability_demo();
  std::ostringstream os;
  os << "t,beta1,beta2,B1,B2,Re1,Re2\n";
  for (std::size_t t = 0; t < r.first.B.size(); ++t)
    os << t << ',' << fmt(r.first.params.beta[t]) << ',' << fmt(r.second.params.beta[t]) << ','
       << fmt(r.first.B[t]) << ',' << fmt(r.second.B[t]) << ',' << fmt(r.first.reproduction[t].effective) << ','
       << fmt(r.second.reproduction[t].effective) << '\n';
  run.emit("identifiability.csv", os.str());
  json j = {{"alpha1", r.first.params.alpha},
            {"alpha2", r.second.params.alpha},
            {"gamma1", r.first.gamma.front()},
            {"gamma2", r.second.gamma.front()},
            {"max_relative_B_mismatch", r.max_relative_mismatch()},
            {"max_Re_gap", r.max_re_gap()}};
  run.emit("identifiability.json", j.dump(2) + "\n");
  run.finish("alpha1 = 0.3\nalpha2 = 0.05\ngamma1 = 0.2\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian SIR inference with undocumented infections"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--config", g.config_path, "Plain-text key = value config file");
  app.add_option("--out", g.out_dir, "Output directory")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads (results do not depend on it)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_flag("--quiet", g.quiet, "Suppress progress messages");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic scenario dataset");
  simulate->add_option("scenario", sim.scenario, "scn1, scn2 or scn3")->required();
  simulate->add_flag("--integerize", sim.integerize, "Round daily counts to integers");
  simulate->add_flag("--logit-rates", sim.logit_rates, "Map rate draws through the inverse logit");
  simulate->add_flag("--stochastic", sim.stochastic, "Use the binomial chain generator");
  simulate->add_option("--days", sim.days, "Number of days")->capture_default_str();

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Run the parallel tempering sampler");
  fit_cmd->add_option("dataset", fit.dataset, "Dataset JSON or case CSV")->required();
  fit_cmd->add_option("--preset", fit.preset, "Prior preset: default, probit, cloglog, alpha-var, alpha-mean20");
  fit_cmd->add_option("--region", fit.region, "Region to select from a case CSV");
  fit_cmd->add_option("--population", fit.population, "Population size for a case CSV");
  fit_cmd->add_option("--chains", fit.chains, "Number of tempered chains")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--iters", fit.iters, "Iterations");
  fit_cmd->add_option("--burn-in", fit.burn_in, "Burn-in iterations");
  fit_cmd->add_option("--thin", fit.thin, "Thinning interval")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--swap-every", fit.swap_every, "Iterations between swap sweeps")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--train-cut", fit.train_cut, "Fit days 0..t* only");

  ForecastArgs fc;
  auto* forecast_cmd = app.add_subcommand("forecast", "Posterior predictive forecast");
  forecast_cmd->add_option("--draws", fc.draws, "draws.csv from fit")->required();
  forecast_cmd->add_option("--data", fc.data, "Dataset (default: dataset.json next to the draws)");
  forecast_cmd->add_option("--horizon", fc.horizon, "Days ahead")->capture_default_str();
  forecast_cmd->add_option("--preset", fc.preset, "Prior preset");
  forecast_cmd->add_flag("--full", fc.full, "Also write every forecast draw");

  DiagnoseArgs dg;
  auto* diagnose = app.add_subcommand("diagnose", "Geweke and Bayesian chi-square diagnostics");
  diagnose->add_option("--draws", dg.draws, "draws.csv from fit")->required();
  diagnose->add_option("--data", dg.data, "Dataset (default: dataset.json next to the draws)");
  diagnose->add_option("--preset", dg.preset, "Prior preset");
  diagnose->add_option("--bins", dg.bins, "Number of equal-probability bins")->check(CLI::Range(2, 1000));

  auto* demo = app.add_subcommand("demo-identifiability", "Two processes with identical observations");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (simulate->parsed()) {
      Run run("simulate", g, argc, argv);
      cmd_simulate(run, sim);
    } else if (fit_cmd->parsed()) {
      Run run("fit", g, argc, argv);
      cmd_fit(run, fit);
    } else if (forecast_cmd->parsed()) {
      Run run("forecast", g, argc, argv);
      cmd_forecast(run, fc);
    } else if (diagnose->parsed()) {
      Run run("diagnose", g, argc, argv);
      cmd_diagnose(run, dg);
    } else if (demo->parsed()) {
      Run run("demo-identifiability", g, argc, argv);
      cmd_demo(run);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const InsufficientData& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const NonContiguousDates& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const IndexError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

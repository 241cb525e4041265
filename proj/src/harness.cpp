#include "opshape/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>
#include <tuple>

#include "opshape/errors.hpp"
#include "opshape/partial.hpp"
#include "opshape/sas.hpp"
#include "opshape/sgd.hpp"

namespace opshape {

namespace {

constexpr std::pair<Scheme, const char*> kSchemeNames[] = {
    {Scheme::Gd, "gd"},           {Scheme::Sas, "sas"},
    {Scheme::Sgd1, "sgd1"},       {Scheme::Sgd2, "sgd2"},
    {Scheme::Partial, "partial"}, {Scheme::GeneralRl, "general-rl"},
    {Scheme::GeneralKnownP, "general-knownp"},
};

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double to_double(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || !std::isfinite(v))
    throw ConfigError(key + ": expected a number, got '" + text + "'");
  return v;
}

std::uint64_t to_count(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  std::uint64_t v = 0;
  try {
    if (!text.empty() && text[0] != '-') v = std::stoull(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size())
    throw ConfigError(key + ": expected a nonnegative integer, got '" + text + "'");
  return v;
}

bool to_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + text + "'");
}

ActivationModel activation_of(const ExperimentConfig& config, std::size_t nodes) {
  return config.activation >= 1.0 ? ActivationModel::synchronous()
                                  : ActivationModel::asynchronous(nodes, config.activation);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

using ReferenceKey = std::tuple<std::string, bool, int, std::size_t, std::size_t, std::size_t, double, double,
                                std::uint64_t, bool>;

std::mutex reference_mutex;
std::map<ReferenceKey, Reference> reference_cache;

ReferenceKey reference_key(const ExperimentConfig& c) {
  std::error_code ec;
  auto path = std::filesystem::weakly_canonical(c.network, ec);
  if (ec) path = c.network;
  return {path.string(),      c.directed, c.weighted ? int(*c.weighted) : -1, c.sizes.controlled, c.sizes.uncontrolled,
          c.sizes.stubborn,   c.alpha,    c.budget,                           c.partition_seed,   is_general(c.scheme)};
}

}  // namespace

Scheme parse_scheme(const std::string& name) {
  for (const auto& [scheme, text] : kSchemeNames)
    if (name == text) return scheme;
  throw ConfigError("unknown scheme '" + name + "'");
}

std::string scheme_name(Scheme scheme) {
  for (const auto& [s, text] : kSchemeNames)
    if (s == scheme) return text;
  return "?";
}

bool is_general(Scheme scheme) { return scheme == Scheme::GeneralRl || scheme == Scheme::GeneralKnownP; }

void apply_setting(ExperimentConfig& c, const std::string& key, const std::string& value) {
  if (key == "network") c.network = value;
  else if (key == "directed") c.directed = to_bool(key, value);
  else if (key == "weighted") {
    if (value == "auto") c.weighted.reset();
    else c.weighted = to_bool(key, value);
  }
  else if (key == "controlled") c.sizes.controlled = to_count(key, value);
  else if (key == "uncontrolled") c.sizes.uncontrolled = to_count(key, value);
  else if (key == "stubborn") c.sizes.stubborn = to_count(key, value);
  else if (key == "alpha") c.alpha = to_double(key, value);
  else if (key == "budget" || key == "M") c.budget = to_double(key, value);
  else if (key == "scheme") c.scheme = parse_scheme(value);
  else if (key == "iters") c.n_iters = to_count(key, value);
  else if (key == "runs") c.n_runs = to_count(key, value);
  else if (key == "seed") c.seed = to_count(key, value);
  else if (key == "partition_seed") c.partition_seed = to_count(key, value);
  else if (key == "A") c.schedule.A = to_double(key, value);
  else if (key == "B") c.schedule.B = to_double(key, value);
  else if (key == "denom") c.schedule.denom = to_double(key, value);
  else if (key == "activation") c.activation = to_double(key, value);
  else if (key == "C") c.anneal.C = to_double(key, value);
  else if (key == "anneal_denom") c.anneal.denom = to_double(key, value);
  else if (key == "observed_fraction") c.observed_fraction = to_double(key, value);
  else if (key == "sgd_A") c.sgd_step.A = to_double(key, value);
  else if (key == "sgd_block") c.sgd_step.block = to_double(key, value);
  else if (key == "sgd_single_start") c.sgd_single_start = to_bool(key, value);
  else if (key == "gd_gain") c.gd_gain = to_double(key, value);
  else if (key == "record_every") c.record_every = to_count(key, value);
  else if (key == "jobs") c.jobs = static_cast<unsigned>(to_count(key, value));
  else if (key == "out") c.out = value;
  else throw ConfigError("unknown key '" + key + "'");
}

ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& base_dir) {
  ExperimentConfig config;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(number) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    try {
      apply_setting(config, key, trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(number) + ": " + e.what());
    }
    if (key == "network" && config.network.is_relative() && !base_dir.empty()) config.network = base_dir / config.network;
  }
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  return parse_config(in, path.parent_path());
}

void validate(const ExperimentConfig& c) {
  if (c.network.empty()) throw ConfigError("network is not set");
  if (!std::filesystem::is_regular_file(c.network)) throw ConfigError("network file not found: " + c.network.string());
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw ConfigError("alpha must lie in (0,1)");
  if (!(c.budget > 0.0)) throw ConfigError("budget must be positive");
  if (c.n_runs == 0) throw ConfigError("runs must be at least 1");
  if (!(c.schedule.A > 0.0 && c.schedule.B > 0.0 && c.schedule.denom > 0.0))
    throw ConfigError("A, B and denom must be positive");
  if (!(c.activation > 0.0 && c.activation <= 1.0)) throw ConfigError("activation must lie in (0,1]");
  if (!(c.anneal.C >= 0.0 && c.anneal.denom >= 0.0)) throw ConfigError("C and anneal_denom must be nonnegative");
  if (!(c.observed_fraction >= 0.0 && c.observed_fraction <= 1.0))
    throw ConfigError("observed_fraction must lie in [0,1]");
  if (!(c.sgd_step.A > 0.0 && c.sgd_step.block > 0.0)) throw ConfigError("sgd_A and sgd_block must be positive");
  if (!(c.gd_gain > 0.0)) throw ConfigError("gd_gain must be positive");
}

Instance build_instance(const ExperimentConfig& config) {
  validate(config);
  InteractionGraph graph = load_edge_list(config.network, EdgeListOptions{config.weighted, config.directed});
  AgentPartition partition = random_partition(graph, config.sizes, config.alpha, config.partition_seed);
  return Instance{OpinionModel(std::move(graph), std::move(partition))};
}

GeneralModel build_general_model(const Instance& instance) {
  return GeneralModel::saturating_influence(instance.model.graph(), instance.model.partition());
}

Reference reference_for(const ExperimentConfig& config, const Instance& instance) {
  const ReferenceKey key = reference_key(config);
  {
    std::lock_guard lock(reference_mutex);
    if (auto it = reference_cache.find(key); it != reference_cache.end()) return it->second;
  }
  Reference ref;
  if (is_general(config.scheme)) {
    const GeneralModel general = build_general_model(instance);
    ref.u = general_reference_optimum(general, config.budget, config.partition_seed);
    ref.payoff = general.payoff(ref.u);
  } else {
    ref.u = reference_optimum(instance.model, config.budget);
    ref.payoff = instance.model.payoff(ref.u);
  }
  std::lock_guard lock(reference_mutex);
  return reference_cache.emplace(key, ref).first->second;
}

Trajectory run_scheme(const ExperimentConfig& config, const Instance& instance, std::uint64_t seed,
                      std::vector<double>* iteration_seconds) {
  const OpinionModel& model = instance.model;
  RunControl control;
  control.record_every = config.record_every;
  control.iteration_seconds = iteration_seconds;
  const ActivationModel activation = activation_of(config, model.node_count());

  switch (config.scheme) {
    case Scheme::Gd:
      return run_exact_gd(model, config.budget, config.n_iters, GdOptions{config.gd_gain, 1e-13}, control);
    case Scheme::Sas:
      return run_sas(model, config.budget, config.schedule, activation, config.n_iters, seed, control).trajectory;
    case Scheme::Sgd1:
    case Scheme::Sgd2: {
      SgdOptions options;
      options.scheme = config.scheme == Scheme::Sgd1 ? WalkScheme::Killed : WalkScheme::Discounted;
      options.step = config.sgd_step;
      options.single_uniform_start = config.sgd_single_start;
      return run_sgd(model, config.budget, config.n_iters, seed, options, control);
    }
    case Scheme::Partial: {
      const auto observation =
          ObservationSet::hide_fraction(model.partition(), 1.0 - config.observed_fraction, config.partition_seed);
      return run_partial(model, observation, config.budget, config.schedule, config.n_iters, seed, control).trajectory;
    }
    case Scheme::GeneralRl:
    case Scheme::GeneralKnownP: {
      GeneralOptions options;
      options.mode = config.scheme == Scheme::GeneralRl ? GeneralMode::Sampled : GeneralMode::KnownP;
      options.anneal = config.anneal;
      return run_general(build_general_model(instance), config.budget, config.schedule, activation, config.n_iters,
                         seed, options, control)
          .trajectory;
    }
  }
  throw ConfigError("unhandled scheme");
}

void write_run_csv(std::ostream& out, const Trajectory& trajectory, double optimum) {
  const Eigen::Index m = trajectory.points.empty() ? 0 : trajectory.points.front().u.size();
  out << "k";
  for (Eigen::Index c = 0; c < m; ++c) out << ",u_" << c + 1;
  out << ",payoff,rel_gap\n";
  for (const TrajectoryPoint& p : trajectory.points) {
    out << p.k;
    for (Eigen::Index c = 0; c < m; ++c) out << ',' << fmt(p.u[c]);
    out << ',' << fmt(p.payoff) << ',' << fmt(relative_gap(p.payoff, optimum)) << '\n';
  }
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw Error("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<GapSummaryRow> summarize(const std::vector<Trajectory>& runs, double optimum) {
  std::vector<GapSummaryRow> rows;
  if (runs.empty()) return rows;
  std::size_t length = runs.front().points.size();
  for (const auto& r : runs) length = std::min(length, r.points.size());
  std::vector<double> gaps(runs.size());
  for (std::size_t t = 0; t < length; ++t) {
    const std::uint64_t k = runs.front().points[t].k;
    for (std::size_t r = 0; r < runs.size(); ++r) {
      if (runs[r].points[t].k != k) throw Error("runs were recorded on different iteration grids");
      gaps[r] = relative_gap(runs[r].points[t].payoff, optimum);
    }
    rows.push_back({k, quantile(gaps, 0.5), quantile(gaps, 0.25), quantile(gaps, 0.75)});
  }
  return rows;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  const Instance instance = build_instance(config);
  ExperimentResult result;
  result.reference = reference_for(config, instance);

  const std::size_t n_runs = config.scheme == Scheme::Gd ? 1 : config.n_runs;
  const std::string name = scheme_name(config.scheme);
  std::filesystem::create_directories(config.out);
  result.runs.resize(n_runs);
  result.run_files.resize(n_runs);
  for (std::size_t r = 0; r < n_runs; ++r) {
    char file[64];
    std::snprintf(file, sizeof file, "%s_run%02zu.csv", name.c_str(), r);
    result.run_files[r] = config.out / file;
  }

  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n_runs);
  auto worker = [&] {
    for (std::size_t r = next++; r < n_runs; r = next++) {
      try {
        result.runs[r] = run_scheme(config, instance, config.seed + r);
        std::ofstream out(result.run_files[r]);
        write_run_csv(out, result.runs[r], result.reference.payoff);
        if (!out) throw Error("cannot write " + result.run_files[r].string());
      } catch (...) {
        errors[r] = std::current_exception();
      }
    }
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const auto threads = std::min<std::size_t>(config.jobs == 0 ? hw : config.jobs, n_runs);
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  result.summary = summarize(result.runs, result.reference.payoff);
  result.summary_file = config.out / (name + "_summary.csv");
  std::ofstream out(result.summary_file);
  out << "k,median,q1,q3\n";
  for (const auto& row : result.summary)
    out << row.k << ',' << fmt(row.median) << ',' << fmt(row.q1) << ',' << fmt(row.q3) << '\n';
  if (!out) throw Error("cannot write " + result.summary_file.string());
  return result;
}

std::vector<TimingRow> timing_report(const ExperimentConfig& config, const std::vector<Scheme>& schemes) {
  if (schemes.empty()) throw ConfigError("timing needs at least one scheme");
  const Instance instance = build_instance(config);
  std::vector<TimingRow> rows;
  for (Scheme scheme : schemes) {
    ExperimentConfig c = config;
    c.scheme = scheme;
    c.record_every = c.n_iters + 1;
    std::vector<double> seconds;
    run_scheme(c, instance, c.seed, &seconds);
    if (seconds.empty()) throw ConfigError("timing needs at least one iteration");
    const auto [lo, hi] = std::minmax_element(seconds.begin(), seconds.end());
    rows.push_back({scheme, *lo, quantile(seconds, 0.5), *hi});
  }
  return rows;
}

void write_timing_csv(std::ostream& out, const std::vector<TimingRow>& rows) {
  out << "scheme,min,median,max\n";
  for (const auto& r : rows)
    out << scheme_name(r.scheme) << ',' << fmt(r.min) << ',' << fmt(r.median) << ',' << fmt(r.max) << '\n';
}

}  // namespace opshape

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "opshape/general.hpp"
#include "opshape/network.hpp"
#include "opshape/optim.hpp"

namespace opshape {

enum class Scheme { Gd, Sas, Sgd1, Sgd2, Partial, GeneralRl, GeneralKnownP };

Scheme parse_scheme(const std::string& name);
std::string scheme_name(Scheme scheme);
bool is_general(Scheme scheme);

struct ExperimentConfig {
  std::filesystem::path network;
  bool directed = false;
  std::optional<bool> weighted;
  PartitionSizes sizes{3, 28, 3};
  double alpha = 0.6;
  double budget = 5.0;
  Scheme scheme = Scheme::Sas;
  std::uint64_t n_iters = 1000;
  std::uint64_t n_runs = 10;
  std::uint64_t seed = 1;
  std::uint64_t partition_seed = 1;
  StepSchedule schedule{};
  /// Activation probability of each agent per tick; 1 is synchronous.
  double activation = 1.0;
  AnnealOptions anneal{};
  double observed_fraction = 0.5;
  BlockSchedule sgd_step{};
  bool sgd_single_start = false;
  double gd_gain = 100.0;
  std::uint64_t record_every = 1;
  unsigned jobs = 0;
  std::filesystem::path out = "results";
};

/// Sets one key from its text form. Throws ConfigError on unknown keys or bad values.
void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value);

/// Flat `key = value` lines, `#` comments. A relative network path is taken
/// relative to `base_dir`.
ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Throws ConfigError when a field is out of range or the network file is missing.
void validate(const ExperimentConfig& config);

/// Exact model of a configuration; owns its graph and partition.
struct Instance {
  OpinionModel model;
};

Instance build_instance(const ExperimentConfig& config);
GeneralModel build_general_model(const Instance& instance);

/// Maximizer and optimal payoff of the objective a scheme is scored against.
/// Computed once per instance and objective, then reused.
struct Reference {
  ControlVector u;
  double payoff;
};
Reference reference_for(const ExperimentConfig& config, const Instance& instance);

/// One run of `config.scheme` with the given seed.
Trajectory run_scheme(const ExperimentConfig& config, const Instance& instance, std::uint64_t seed,
                      std::vector<double>* iteration_seconds = nullptr);

/// Writes `k,u_1..u_m,payoff,rel_gap` rows.
void write_run_csv(std::ostream& out, const Trajectory& trajectory, double optimum);

/// Type-7 sample quantile of unsorted data.
double quantile(std::vector<double> values, double p);

struct GapSummaryRow {
  std::uint64_t k;
  double median, q1, q3;
};

/// Per-k median and quartiles of the relative gap across runs.
std::vector<GapSummaryRow> summarize(const std::vector<Trajectory>& runs, double optimum);

struct ExperimentResult {
  Reference reference;
  std::vector<Trajectory> runs;
  std::vector<GapSummaryRow> summary;
  std::vector<std::filesystem::path> run_files;
  std::filesystem::path summary_file;
};

/// Runs seeds seed, seed+1, ... (a single run for gd) on up to `jobs`
/// threads and writes `<scheme>_run<r>.csv` and `<scheme>_summary.csv` into `out`.
ExperimentResult run_experiment(const ExperimentConfig& config);

struct TimingRow {
  Scheme scheme;
  double min, median, max;
};

/// Per-iteration wall clock of one run of each scheme on the same instance.
std::vector<TimingRow> timing_report(const ExperimentConfig& config, const std::vector<Scheme>& schemes);
void write_timing_csv(std::ostream& out, const std::vector<TimingRow>& rows);

}  // namespace opshape

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "opshape/errors.hpp"
#include "opshape/harness.hpp"

using namespace opshape;

namespace {

struct Overrides {
  std::string config;
  std::vector<std::string> set;
  std::string scheme;
  std::uint64_t seed = 0, iters = 0;
  unsigned jobs = 0;
  std::string out;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "key = value configuration file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--set", o.set, "override a config key (key=value), repeatable");
}

bool given(CLI::App* cmd, const char* name) {
  const CLI::Option* opt = cmd->get_option_no_throw(name);
  return opt != nullptr && opt->count() > 0;
}

ExperimentConfig resolve(CLI::App* cmd, const Overrides& o) {
  ExperimentConfig config = load_config(o.config);
  for (const std::string& kv : o.set) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    apply_setting(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (given(cmd, "--scheme")) config.scheme = parse_scheme(o.scheme);
  if (given(cmd, "--seed")) config.seed = o.seed;
  if (given(cmd, "--iters")) config.n_iters = o.iters;
  if (given(cmd, "--jobs")) config.jobs = o.jobs;
  if (given(cmd, "--out")) config.out = o.out;
  validate(config);
  return config;
}

void print_control(const ControlVector& u) {
  for (Eigen::Index k = 0; k < u.size(); ++k) std::printf("%s%.10g", k ? " " : "", u[k]);
  std::printf("\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Budgeted opinion shaping on gossip networks"};
  app.require_subcommand(1);

  Overrides run_o, gd_o, timing_o;
  std::vector<std::string> timing_schemes{"sas", "sgd1", "sgd2"};
  std::string timing_csv;

  auto* run = app.add_subcommand("run", "run a scheme over several seeds and write CSVs");
  add_common(run, run_o);
  run->add_option("--scheme", run_o.scheme, "gd, sas, sgd1, sgd2, partial, general-rl, general-knownp");
  run->add_option("--seed", run_o.seed, "seed of the first run");
  run->add_option("--iters", run_o.iters, "iterations per run");
  run->add_option("--jobs", run_o.jobs, "concurrent runs (0 = all cores)");
  run->add_option("--out", run_o.out, "output directory");

  auto* gd = app.add_subcommand("gd", "print the exact optimum of the configured instance");
  add_common(gd, gd_o);

  auto* timing = app.add_subcommand("timing", "per-iteration wall clock of several schemes");
  add_common(timing, timing_o);
  timing->add_option("--schemes", timing_schemes, "schemes to time")->delimiter(',');
  timing->add_option("--iters", timing_o.iters, "iterations per scheme");
  timing->add_option("--csv", timing_csv, "also write the report to this file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const ExperimentConfig config = resolve(run, run_o);
      const ExperimentResult result = run_experiment(config);
      const GapSummaryRow& last = result.summary.back();
      std::printf("scheme %s, %zu run(s), optimum payoff %.10g\n", scheme_name(config.scheme).c_str(),
                  result.runs.size(), result.reference.payoff);
      std::printf("k=%llu gap median %.4e q1 %.4e q3 %.4e\n", static_cast<unsigned long long>(last.k), last.median,
                  last.q1, last.q3);
      std::printf("summary: %s\n", result.summary_file.string().c_str());
    } else if (*gd) {
      const ExperimentConfig config = resolve(gd, gd_o);
      const Instance instance = build_instance(config);
      const Reference ref = reference_for(config, instance);
      std::printf("payoff %.15g\nu* ", ref.payoff);
      print_control(ref.u);
    } else if (*timing) {
      ExperimentConfig config = resolve(timing, timing_o);
      std::vector<Scheme> schemes;
      for (const auto& s : timing_schemes) schemes.push_back(parse_scheme(s));
      const auto rows = timing_report(config, schemes);
      write_timing_csv(std::cout, rows);
      if (!timing_csv.empty()) {
        std::ofstream out(timing_csv);
        write_timing_csv(out, rows);
      }
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return 2;
  } catch (const DanglingNode& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return 2;
  } catch (const Infeasible& e) {
    std::fprintf(stderr, "infeasible: %s\n", e.what());
    return 3;
  } catch (const NonAbsorbing& e) {
    std::fprintf(stderr, "infeasible: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "opshape/dynamics.hpp"
#include "opshape/general.hpp"
#include "opshape/harness.hpp"
#include "opshape/optim.hpp"
#include "opshape/partial.hpp"
#include "opshape/sas.hpp"
#include "opshape/sgd.hpp"
#include "oracles.hpp"

using namespace opshape;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  failures += pass ? 0 : 1;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

OpinionModel karate_model() {
  auto g = load_edge_list(oracle::karate_path());
  auto p = random_partition(g, {3, 28, 3}, 0.6, 1);
  return OpinionModel(std::move(g), std::move(p));
}

ExperimentConfig karate_config(Scheme scheme, std::uint64_t iters, const std::string& out) {
  ExperimentConfig c;
  c.network = oracle::karate_path();
  c.scheme = scheme;
  c.n_iters = iters;
  c.n_runs = 10;
  c.record_every = iters;
  c.out = std::filesystem::path("acceptance_out") / out;
  return c;
}

void criterion1() {
  const auto start = Clock::now();
  const std::uint64_t base = 7, mc_seed = 11;
  std::size_t tested = 0, outside = 0, degenerate_mismatch = 0;
  double worst_bias = 0.0;
  for (std::uint64_t r = 0; r < 20; ++r) {
    const auto inst = oracle::random_instance(base + r, 5.0, 5, 40);
    const OpinionModel model(inst.graph, inst.partition);
    const auto x = model.stationary(inst.u);
    const auto est = empirical_mean_opinion(inst.graph, inst.partition, inst.u, ActivationModel::synchronous(), 500,
                                            2000, mc_seed + r);
    const auto transient = oracle::expected_opinion(inst.graph, inst.partition, inst.u, initial_state(inst.partition).x, 500);
    worst_bias = std::max(worst_bias, (transient - x).cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      if (est.std_error[i] == 0.0) {
        if (std::abs(est.mean[i] - x[i]) > 1e-9) ++degenerate_mismatch;
        continue;
      }
      ++tested;
      if (std::abs(est.mean[i] - x[i]) > 3.0 * est.std_error[i]) ++outside;
    }
  }
  const double elapsed = seconds_since(start);
  const double expected = 0.0027 * static_cast<double>(tested);
  report(1, outside == 0 && degenerate_mismatch == 0 && elapsed <= 120.0,
         fmt("%zu of %zu components beyond 3 SE (chance level %.2f), %zu deterministic mismatches, "
             "max |E x(500) - x*| = %.2e, %.1f s (limit 120 s)",
             outside, tested, expected, degenerate_mismatch, worst_bias, elapsed));
}

void criterion2() {
  double worst = 0.0;
  for (std::uint64_t r = 0; r < 50; ++r) {
    const auto inst = oracle::random_instance(1000 + r, 5.0);
    const auto g = exact_gradient(inst.graph, inst.partition, inst.u);
    const auto fd = oracle::finite_difference(
        [&](const Eigen::VectorXd& v) { return total_payoff(inst.graph, inst.partition, v); }, inst.u, 1e-5);
    worst = std::max(worst, (g - fd).cwiseAbs().maxCoeff());
  }
  report(2, worst <= 1e-4, fmt("max |grad - central difference| = %.2e over 50 pairs (limit 1e-4)", worst));
}

void criterion3() {
  Rng rng(31);
  double worst = 0.0;
  for (int t = 0; t < 10000; ++t) {
    const auto m = static_cast<Eigen::Index>(1 + rng.below(6));
    Eigen::VectorXd v(m);
    for (Eigen::Index k = 0; k < m; ++k) v[k] = 10.0 * rng.uniform() - 3.0;
    const double budget = 0.1 + 6.0 * rng.uniform();
    worst = std::max(worst, (project_budget_simplex(v, budget) - oracle::brute_force_projection(v, budget))
                                .cwiseAbs()
                                .maxCoeff());
  }
  report(3, worst <= 1e-6, fmt("max deviation from brute force = %.2e over 1e4 vectors (limit 1e-6)", worst));
}

void criterion4() {
  const auto start = Clock::now();
  const auto model = karate_model();
  RunControl control;
  control.u0 = ControlVector::Constant(3, 5.0 / 3.0);
  control.record_every = 200000;
  SasOptions options;
  options.freeze_control = true;
  const auto phi = phi_oracle(model, control.u0);
  int ok = 0;
  std::string dists;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto res =
        run_sas(model, 5.0, StepSchedule{}, ActivationModel::synchronous(), 100000, seed, control, options);
    const double d = (res.psi - phi).cwiseAbs().maxCoeff();
    ok += d <= 1e-2;
    dists += fmt(" %.2e", d);
  }
  const double elapsed = seconds_since(start);
  report(4, ok == 3 && elapsed <= 60.0,
         fmt("sup |Psi - Phi| per seed:%s (limit 1e-2, 3/3 seeds), %.1f s (limit 60 s)", dists.c_str(), elapsed));
}

void criterion5() {
  const auto model = karate_model();
  const auto& part = model.partition();
  const Eigen::VectorXd c = model.influence_weights();
  const int n = 100000;
  Eigen::VectorXd var[2];
  bool within = true;
  double worst_z = 0.0;
  for (int s = 0; s < 2; ++s) {
    Rng rng(41 + static_cast<std::uint64_t>(s));
    const auto scheme = s == 0 ? WalkScheme::Killed : WalkScheme::Discounted;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(3), sq = Eigen::VectorXd::Zero(3);
    for (int t = 0; t < n; ++t) {
      const auto xi = sample_gradient_weights(scheme, model, rng);
      sum += xi;
      sq += xi.cwiseProduct(xi);
    }
    const Eigen::VectorXd mean = sum / n;
    var[s] = (sq / n - mean.cwiseProduct(mean)) * n / (n - 1.0);
    for (Eigen::Index k = 0; k < 3; ++k) {
      const NodeId i = part.controlled()[static_cast<std::size_t>(k)];
      const double target = part.alpha(i) * c[static_cast<Eigen::Index>(i)];
      const double z = std::abs(mean[k] - target) / std::sqrt(var[s][k] / n);
      worst_z = std::max(worst_z, z);
      within = within && z <= 3.0;
    }
  }
  const bool smaller = (var[1].array() <= var[0].array()).all();
  report(5, within && smaller,
         fmt("max |z| = %.2f (limit 3); variance scheme 2 / scheme 1 = %.3f %.3f %.3f", worst_z, var[1][0] / var[0][0],
             var[1][1] / var[0][1], var[1][2] / var[0][2]));
}

void criterion6() {
  const auto start = Clock::now();
  const auto res = run_experiment(karate_config(Scheme::Sas, 10000, "sas"));
  const double elapsed = seconds_since(start);
  const auto& last = res.summary.back();
  report(6, last.median <= 0.01 && last.q3 <= 0.02 && elapsed <= 300.0,
         fmt("final gap median %.2e (limit 1e-2), Q3 %.2e (limit 2e-2), %.1f s (limit 300 s)", last.median, last.q3,
             elapsed));
}

void criterion7() {
  const auto sas = run_experiment(karate_config(Scheme::Sas, 2500, "paired_sas"));
  const auto sgd1 = run_experiment(karate_config(Scheme::Sgd1, 2500, "paired_sgd1"));
  const auto sgd2 = run_experiment(karate_config(Scheme::Sgd2, 2500, "paired_sgd2"));
  const double m_sas = sas.summary.back().median, m1 = sgd1.summary.back().median, m2 = sgd2.summary.back().median;
  report(7, m1 <= m_sas && m2 <= m_sas,
         fmt("median gap at 2500: sgd1 %.2e, sgd2 %.2e, sas %.2e", m1, m2, m_sas));
}

void criterion8() {
  auto cfg = karate_config(Scheme::Partial, 3000, "partial");
  cfg.observed_fraction = 0.5;
  const auto res = run_experiment(cfg);
  const double median = res.summary.back().median;

  const auto model = karate_model();
  const auto obs = ObservationSet::hide_fraction(model.partition(), 0.5, 1);
  const auto q = oracle::induced_law(model.graph(), obs.mask());
  Rng rng(81);
  double worst_tv = 0.0;
  for (NodeId i = 0; i < model.node_count(); ++i) {
    if (!obs.observed(i) || model.partition().is_stubborn(i)) continue;
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.node_count()));
    for (int t = 0; t < 100000; ++t) counts[static_cast<Eigen::Index>(probe(model.graph(), obs, i, rng).reached)] += 1;
    const double tv = 0.5 * (counts / 1e5 - q.row(static_cast<Eigen::Index>(i)).transpose()).cwiseAbs().sum();
    worst_tv = std::max(worst_tv, tv);
  }
  report(8, median <= 0.01 && worst_tv <= 0.01,
         fmt("final gap median %.2e (limit 1e-2), %zu hidden, max probe TV %.2e (limit 1e-2)", median,
             obs.hidden_count(), worst_tv));
}

void criterion9() {
  auto g = load_edge_list(oracle::karate_path());
  auto p = random_partition(g, {3, 28, 3}, 0.6, 1);
  const OpinionModel base(g, p);
  const auto constant = GeneralModel::from_base(g, p);
  GeneralOptions plain;
  plain.anneal.C = 0.0;
  bool identical = true;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto a = run_general(constant, 5.0, StepSchedule{}, ActivationModel::synchronous(), 2000, seed, plain);
    const auto b = run_sas(base, 5.0, StepSchedule{}, ActivationModel::synchronous(), 2000, seed);
    identical = identical && a.psi == b.psi && a.trajectory.points.size() == b.trajectory.points.size();
    for (std::size_t t = 0; identical && t < a.trajectory.points.size(); ++t)
      identical = a.trajectory.points[t].u == b.trajectory.points[t].u;
  }

  auto rl_cfg = karate_config(Scheme::GeneralRl, 20000, "general_rl");
  rl_cfg.n_runs = 3;
  rl_cfg.schedule.denom = 1000;
  rl_cfg.anneal.C = 10.0;
  auto kp_cfg = rl_cfg;
  kp_cfg.scheme = Scheme::GeneralKnownP;
  kp_cfg.out = std::filesystem::path("acceptance_out") / "general_knownp";
  const auto rl = run_experiment(rl_cfg);
  const auto kp = run_experiment(kp_cfg);
  int close = 0;
  std::string dists;
  for (std::size_t r = 0; r < 3; ++r) {
    const double d = (rl.runs[r].final().u - kp.runs[r].final().u).cwiseAbs().maxCoeff();
    close += d <= 0.05;
    dists += fmt(" %.3f", d);
  }
  report(9, identical && close >= 2,
         fmt("constant-alpha run %s sas; RL vs known-P sup distance per seed:%s (limit 0.05 on 2/3)",
             identical ? "bit-identical to" : "differs from", dists.c_str()));
}

bool check_invariants(const InteractionGraph& g, const AgentPartition& part, std::string& why) {
  const auto n = static_cast<Eigen::Index>(g.node_count());
  const Eigen::MatrixXd& pm = g.poll_matrix();
  Eigen::MatrixXd adjacency = Eigen::MatrixXd::Zero(n, n);
  for (const auto& e : g.edges()) {
    adjacency(static_cast<Eigen::Index>(e.src), static_cast<Eigen::Index>(e.dst)) = 1;
    if (!g.directed()) adjacency(static_cast<Eigen::Index>(e.dst), static_cast<Eigen::Index>(e.src)) = 1;
  }
  const Eigen::MatrixXd a = substochastic_matrix(g, part);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto node = static_cast<NodeId>(i);
    if (std::abs(pm.row(i).sum() - 1.0) > 1e-12) why = "row of P does not sum to 1";
    for (Eigen::Index j = 0; j < n; ++j)
      if (pm(i, j) > 0.0 && adjacency(i, j) == 0.0) why = "poll probability off the edge set";
    if ((a.row(i).array() < 0.0).any()) why = "negative entry in A";
    const double expected = part.is_stubborn(node) ? 0.0 : part.is_controlled(node) ? 1.0 - part.alpha(node) : 1.0;
    if (std::abs(a.row(i).sum() - expected) > 1e-12) why = "row sum of A";
  }
  return why.empty();
}

void criterion10() {
  Rng rng(101);
  std::size_t concavity_violations = 0;
  for (int t = 0; t < 200; ++t) {
    const auto inst = oracle::random_instance(2000 + static_cast<std::uint64_t>(t), 5.0);
    const OpinionModel model(inst.graph, inst.partition);
    ControlVector v(inst.u.size());
    for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = rng.uniform();
    v *= 5.0 * rng.uniform() / v.sum();
    const double lambda = rng.uniform();
    const auto mix = model.stationary(lambda * inst.u + (1 - lambda) * v);
    const auto ends = lambda * model.stationary(inst.u) + (1 - lambda) * model.stationary(v);
    if (((mix - ends).array() < -1e-9).any()) ++concavity_violations;
  }

  std::size_t ops = 0, broken = 0;
  std::string first;
  const StepSchedule schedule;
  for (std::uint64_t s = 0; s < 40; ++s) {
    const auto inst = oracle::random_instance(3000 + s, 5.0);
    const auto& g = inst.graph;
    const auto& part = inst.partition;
    const OpinionModel model(g, part);
    const auto n = static_cast<Eigen::Index>(g.node_count());
    const auto m = inst.u.size();
    std::string why;
    if (!check_invariants(g, part, why)) {
      ++broken;
      if (first.empty()) first = why;
    }
    ControlVector u = inst.u;
    GradientTable psi = GradientTable::Zero(n, m);
    Eigen::VectorXd psi_partial = Eigen::VectorXd::Zero(n);
    OpinionState state = initial_state(part, rng.uniform());
    LocalClocks clocks(g.node_count());
    const auto obs = ObservationSet::hide_fraction(part, rng.uniform(), s);
    const auto act = ActivationModel::asynchronous(g.node_count(), 0.2 + 0.8 * rng.uniform());
    for (int step = 0; step < 300; ++step, ++ops) {
      const auto k = static_cast<std::uint64_t>(step);
      switch (rng.below(6)) {
        case 0: state = gossip_step(g, part, state, u, act, rng).state; break;
        case 1: {
          const auto i = static_cast<NodeId>(rng.below(g.node_count()));
          psi = sas_fast_update(part, psi, {i, g.sample_poll(i, rng)}, u, clocks, schedule);
          break;
        }
        case 2: u = sas_slow_update(u, psi, k, schedule, 5.0); break;
        case 3: {
          Eigen::VectorXd noisy = u;
          for (Eigen::Index c = 0; c < m; ++c) noisy[c] += 2.0 * rng.normal();
          u = project_budget_simplex(noisy, 5.0);
          break;
        }
        case 4: {
          const auto i = static_cast<NodeId>(rng.below(g.node_count()));
          if (!obs.observed(i)) break;
          const auto r = probe(g, obs, i, rng, k);
          psi_partial = partial_fast_update(part, psi_partial, i, r.reached, u, clocks, schedule);
          break;
        }
        default: u = partial_slow_update(part, u, psi_partial, k, schedule, 5.0); break;
      }
      why.clear();
      if ((u.array() < 0.0).any() || u.sum() > 5.0 * (1 + 1e-12)) why = "control left the budget set";
      if ((state.x.array() < -1e-12).any() || (state.x.array() > 1.0 + 1e-12).any()) why = "opinion outside [0,1]";
      for (NodeId i : part.stubborn()) {
        if (!psi.row(static_cast<Eigen::Index>(i)).isZero() || psi_partial[static_cast<Eigen::Index>(i)] != 0.0)
          why = "stubborn gradient entry moved";
        if (state.x[static_cast<Eigen::Index>(i)] != part.h(i)) why = "stubborn opinion moved";
      }
      if (!psi.allFinite() || psi.cwiseAbs().maxCoeff() > 1e6) why = "gradient table diverged";
      if (!why.empty()) {
        ++broken;
        if (first.empty()) first = why;
      }
    }
  }
  report(10, concavity_violations == 0 && broken == 0,
         fmt("%zu concavity violations in 200 triples; %zu invariant breaks in %zu random operations%s%s",
             concavity_violations, broken, ops, first.empty() ? "" : ", first: ", first.c_str()));
}

}  // namespace

int main() {
  const std::vector<std::function<void()>> criteria{criterion1, criterion2, criterion3, criterion4, criterion5,
                                                    criterion6, criterion7, criterion8, criterion9, criterion10};
  for (std::size_t c = 0; c < criteria.size(); ++c) {
    try {
      criteria[c]();
    } catch (const std::exception& e) {
      report(static_cast<int>(c + 1), false, std::string("error: ") + e.what());
    }
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}

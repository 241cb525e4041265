#include <doctest.h>

#include "opshape/errors.hpp"
#include "opshape/general.hpp"
#include "opshape/sas.hpp"
#include "oracles.hpp"

using namespace opshape;

namespace {

InteractionGraph karate() { return load_edge_list(oracle::karate_path()); }
AgentPartition karate_partition(const InteractionGraph& g) { return random_partition(g, {3, 28, 3}, 0.6, 1); }

GeneralModel saturating_karate() {
  auto g = karate();
  auto p = karate_partition(g);
  return GeneralModel::saturating_influence(std::move(g), std::move(p));
}

ControlVector thirds() { return ControlVector::Constant(3, 5.0 / 3.0); }

}  // namespace

TEST_CASE("feasibility with control-dependent alpha") {
  // Controlled 0 polls only uncontrolled 1, which polls 0: nothing leaks when u = 0.
  const InteractionGraph g(3, {{0, 1, 1.0}, {1, 0, 1.0}, {2, 0, 1.0}}, true);
  const AgentPartition p(3, {0}, {1}, {2}, {0.5, 0, 0}, {0, 0, 1}, {ResponseCurve::saturating()});
  CHECK_THROWS_AS(GeneralModel::saturating_influence(g, p), Infeasible);
  CHECK_NOTHROW(GeneralModel::from_base(g, p));
}

TEST_CASE("value matches the base model for constant alpha") {
  auto g = karate();
  auto p = karate_partition(g);
  const OpinionModel base(g, p);
  const auto gm = GeneralModel::from_base(g, p);
  const auto u = thirds();
  CHECK((gm.value(u) - base.stationary(u)).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((gm.gradient(u) - base.gradient(u)).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((gm.gradient_table(u) - phi_oracle(base, u)).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("all stubborn keeps V at h") {
  auto g = karate();
  auto p = random_partition(g, {0, 0, 34}, 0.6, 1);
  const auto gm = GeneralModel::saturating_influence(g, p);
  const auto res = run_general(gm, 5.0, StepSchedule{}, ActivationModel::synchronous(), 50, 1);
  for (NodeId i = 0; i < 34; ++i) CHECK(res.values[static_cast<Eigen::Index>(i)] == p.h(i));
  CHECK(res.trajectory.final().u.size() == 0);
}

TEST_CASE("gradient table matches finite differences of the value") {
  const auto gm = saturating_karate();
  const ControlVector u = (ControlVector(3) << 0.4, 1.3, 2.2).finished();
  const auto table = gm.gradient_table(u);
  const double h = 1e-6;
  for (Eigen::Index k = 0; k < 3; ++k) {
    ControlVector up = u, down = u;
    up[k] += h;
    down[k] -= h;
    const Eigen::VectorXd fd = (gm.value(up) - gm.value(down)) / (2 * h);
    CHECK((table.col(k) - fd).cwiseAbs().maxCoeff() <= 1e-7);
  }
}

TEST_CASE("gradient matches finite differences on random instances") {
  for (std::uint64_t seed = 500; seed < 520; ++seed) {
    const auto inst = oracle::random_instance(seed, 5.0);
    const auto gm = GeneralModel::saturating_influence(inst.graph, inst.partition);
    const Eigen::VectorXd at = inst.u.array() + 0.05;
    const auto fd = oracle::finite_difference([&](const Eigen::VectorXd& v) { return gm.payoff(v); }, at, 1e-6);
    CHECK((gm.gradient(at) - fd).cwiseAbs().maxCoeff() <= 1e-6 * std::max(1.0, fd.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("constant alpha reduces to the sas update") {
  auto g = karate();
  auto p = karate_partition(g);
  const auto gm = GeneralModel::from_base(g, p);
  const auto u = thirds();
  Rng rng(4);
  GradientTable psi(34, 3);
  for (Eigen::Index r = 0; r < 34; ++r)
    for (Eigen::Index c = 0; c < 3; ++c) psi(r, c) = rng.uniform();
  const Eigen::VectorXd values = Eigen::VectorXd::Random(34);
  for (NodeId i = 0; i < 34; ++i)
    for (NodeId j : g.neighbors(i)) {
      GradientTable a = psi, b = psi;
      general_grad_update(gm, psi, a, values, i, j, u, 0.37);
      sas_fast_update(p, psi, b, {i, j}, u, 0.37);
      CHECK(a == b);
    }
}

TEST_CASE("annealing schedule") {
  const StepSchedule s{0.6, 0.6, 100};
  AnnealOptions a{1.0, 2.0};
  // b(200) = 0.3 and c(200) = 100.
  CHECK(annealing_sigma(200, s, a) == doctest::Approx(1.0 / std::sqrt(std::log(std::log(100.0)) / 0.3)));
  CHECK(annealing_sigma(200, s, a) == doctest::Approx(1.0 / 2.256).epsilon(1e-3));
  CHECK(annealing_sigma(3, s, a) == 0.0);
  CHECK(annealing_sigma(5, s, a) > 0.0);
  CHECK(annealing_sigma(200, s, AnnealOptions{0.0, 2.0}) == 0.0);
  CHECK(annealing_sigma(100'000'000, s, AnnealOptions{}) < annealing_sigma(100'000, s, AnnealOptions{}));
  CHECK(annealing_sigma(100'000'000, s, AnnealOptions{}) < 0.1 * annealing_sigma(1'000, s, AnnealOptions{}));

  const ControlVector u = thirds() * 0.5;
  GradientTable psi = GradientTable::Zero(34, 3);
  psi(0, 1) = 0.2;
  Rng rng(1);
  const auto plain = annealed_slow_update(u, psi, 200, s, AnnealOptions{0.0, 2.0}, 5.0, rng);
  CHECK(plain == sas_slow_update(u, psi, 200, s, 5.0));
}

TEST_CASE("annealed steps stay feasible") {
  const StepSchedule s;
  Rng rng(9);
  ControlVector u = ControlVector::Zero(4);
  GradientTable psi = GradientTable::Zero(10, 4);
  for (std::uint64_t k = 0; k < 5000; ++k) {
    for (Eigen::Index c = 0; c < 4; ++c) psi(static_cast<Eigen::Index>(k % 10), c) = rng.normal();
    u = annealed_slow_update(u, psi, k, s, AnnealOptions{50.0, 1.0}, 5.0, rng);
    CHECK((u.array() >= 0.0).all());
    CHECK(u.sum() <= 5.0 * (1 + 1e-12));
  }
}

TEST_CASE("known-P iteration converges to the exact solution") {
  const auto gm = saturating_karate();
  const auto u = thirds();
  Eigen::VectorXd v = Eigen::VectorXd::Zero(34);
  for (NodeId s : gm.partition().stubborn()) v[static_cast<Eigen::Index>(s)] = gm.partition().h(s);
  GradientTable psi = GradientTable::Zero(34, 3);
  for (int t = 0; t < 3000; ++t) known_p_updates(gm, v, psi, u, 1.0);
  CHECK((v - gm.value(u)).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK((psi - gm.gradient_table(u)).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("known-P value step contracts without uncontrolled agents") {
  // Every non-stubborn agent is controlled, so ||A||_inf <= 1 - min alpha.
  Rng rng(2);
  const auto graph = oracle::random_graph(12, 0.3, rng);
  const AgentPartition p = random_partition(graph, {9, 0, 3}, 0.6, 3);
  const auto gm = GeneralModel::saturating_influence(graph, p);
  const ControlVector u = ControlVector::Constant(9, 0.5);
  double min_alpha = 1.0;
  for (NodeId i : p.controlled()) min_alpha = std::min(min_alpha, gm.alphas(u)[static_cast<Eigen::Index>(i)]);
  const double modulus = 1.0 - min_alpha;
  const Eigen::VectorXd target = gm.value(u);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(12);
  for (NodeId s : p.stubborn()) v[static_cast<Eigen::Index>(s)] = p.h(s);
  GradientTable psi = GradientTable::Zero(12, 9);
  double err = (v - target).cwiseAbs().maxCoeff();
  for (int t = 0; t < 30; ++t) {
    known_p_updates(gm, v, psi, u, 1.0);
    const double next = (v - target).cwiseAbs().maxCoeff();
    CHECK(next <= modulus * err + 1e-14);
    err = next;
  }
}

TEST_CASE("frozen sampled learner tracks V and its gradient") {
  const auto gm = saturating_karate();
  RunControl control;
  control.u0 = thirds();
  control.record_every = 1000000;
  GeneralOptions options;
  options.freeze_control = true;
  const auto res = run_general(gm, 5.0, StepSchedule{}, ActivationModel::synchronous(), 20000, 3, options, control);
  CHECK(res.trajectory.final().u == control.u0);
  CHECK((res.values - gm.value(control.u0)).cwiseAbs().maxCoeff() <= 1e-2);
  CHECK((res.psi - gm.gradient_table(control.u0)).cwiseAbs().maxCoeff() <= 2e-2);
  for (NodeId s : gm.partition().stubborn()) CHECK(res.values[static_cast<Eigen::Index>(s)] == gm.partition().h(s));
}

TEST_CASE("constant alpha without noise reproduces sas") {
  auto g = karate();
  auto p = karate_partition(g);
  const OpinionModel base(g, p);
  const auto gm = GeneralModel::from_base(g, p);
  GeneralOptions options;
  options.anneal.C = 0.0;
  const auto a = run_general(gm, 5.0, StepSchedule{}, ActivationModel::synchronous(), 400, 5, options);
  const auto b = run_sas(base, 5.0, StepSchedule{}, ActivationModel::synchronous(), 400, 5);
  REQUIRE(a.trajectory.points.size() == b.trajectory.points.size());
  for (std::size_t t = 0; t < a.trajectory.points.size(); ++t) CHECK(a.trajectory.points[t].u == b.trajectory.points[t].u);
  CHECK(a.psi == b.psi);
}

TEST_CASE("general runs stay feasible and improve") {
  const auto gm = saturating_karate();
  RunControl control;
  control.record_every = 500;
  const auto res = run_general(gm, 5.0, StepSchedule{}, ActivationModel::synchronous(), 3000, 2, {}, control);
  for (const auto& pt : res.trajectory.points) {
    CHECK((pt.u.array() >= 0.0).all());
    CHECK(pt.u.sum() <= 5.0 * (1 + 1e-12));
  }
  const auto best = general_reference_optimum(gm, 5.0);
  CHECK(stationarity_residual(best, gm.gradient(best), 5.0) <= 1e-8);
  CHECK(gm.payoff(best) >= res.trajectory.final().payoff - 1e-9);
}

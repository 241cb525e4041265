#include "opshape/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "opshape/errors.hpp"

namespace opshape {

OpinionModel::OpinionModel(InteractionGraph graph, AgentPartition partition)
    : graph_(std::move(graph)), partition_(std::move(partition)) {
  require_feasible(graph_, partition_);
  influence_ = substochastic_matrix(graph_, partition_);
  const auto n = static_cast<Eigen::Index>(graph_.node_count());
  lu_.compute(Eigen::MatrixXd::Identity(n, n) - influence_);
  weights_ = lu_.transpose().solve(Eigen::VectorXd::Ones(n));
  if (!weights_.allFinite()) throw Infeasible("(Id - A) is numerically singular");
}

void OpinionModel::check_control(const ControlVector& u) const {
  if (static_cast<std::size_t>(u.size()) != control_count())
    throw Error("control vector has " + std::to_string(u.size()) + " entries, expected " +
                std::to_string(control_count()));
}

Eigen::VectorXd OpinionModel::drive(const ControlVector& u) const {
  check_control(u);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(node_count()));
  for (NodeId i : partition_.stubborn()) w[static_cast<Eigen::Index>(i)] = partition_.h(i);
  const auto& s = partition_.controlled();
  for (std::size_t k = 0; k < s.size(); ++k)
    w[static_cast<Eigen::Index>(s[k])] = partition_.alpha(s[k]) * partition_.reward(k).value(u[static_cast<Eigen::Index>(k)]);
  return w;
}

Eigen::VectorXd OpinionModel::stationary(const ControlVector& u) const {
  Eigen::VectorXd x = lu_.solve(drive(u));
  // One step of iterative refinement keeps the residual at round-off level.
  const Eigen::VectorXd residual = drive(u) - (x - influence_ * x);
  x += lu_.solve(residual);
  return x;
}

double OpinionModel::payoff(const ControlVector& u) const { return weights_.dot(drive(u)); }

Eigen::VectorXd OpinionModel::gradient(const ControlVector& u) const {
  check_control(u);
  const auto& s = partition_.controlled();
  Eigen::VectorXd g(static_cast<Eigen::Index>(s.size()));
  for (std::size_t k = 0; k < s.size(); ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    g[kk] = partition_.alpha(s[k]) * partition_.reward(k).derivative(u[kk]) * weights_[static_cast<Eigen::Index>(s[k])];
  }
  return g;
}

Eigen::VectorXd stationary_opinion(const InteractionGraph& graph, const AgentPartition& partition,
                                   const ControlVector& u) {
  return OpinionModel(graph, partition).stationary(u);
}

double total_payoff(const InteractionGraph& graph, const AgentPartition& partition, const ControlVector& u) {
  return OpinionModel(graph, partition).stationary(u).sum();
}

OpinionState initial_state(const AgentPartition& partition, double initial) {
  OpinionState s;
  s.x = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(partition.node_count()), initial);
  for (NodeId i : partition.stubborn()) s.x[static_cast<Eigen::Index>(i)] = partition.h(i);
  return s;
}

StepOutcome gossip_step(const InteractionGraph& graph, const AgentPartition& partition, const OpinionState& state,
                        const ControlVector& u, const ActivationModel& activation, Rng& rng) {
  StepOutcome out{state, {}};
  out.state.k = state.k + 1;
  for (NodeId i : draw_activated(partition, activation, rng)) {
    const auto ii = static_cast<Eigen::Index>(i);
    if (partition.is_controlled(i) && rng.bernoulli(partition.alpha(i))) {
      const auto k = static_cast<std::size_t>(partition.control_index(i));
      out.state.x[ii] = partition.reward(k).value(u[static_cast<Eigen::Index>(k)]);
      continue;
    }
    const NodeId j = graph.sample_poll(i, rng);
    out.state.x[ii] = state.x[static_cast<Eigen::Index>(j)];
    out.polls.push_back({i, j});
  }
  return out;
}

OpinionEstimate empirical_mean_opinion(const InteractionGraph& graph, const AgentPartition& partition,
                                       const ControlVector& u, const ActivationModel& activation,
                                       std::size_t n_steps, std::size_t n_runs, std::uint64_t seed,
                                       unsigned jobs) {
  activation.validate(partition);
  const auto n = static_cast<Eigen::Index>(graph.node_count());
  if (n_runs == 0) throw Error("n_runs must be positive");

  // Fixed-size chunks summed in order keep the result independent of `jobs`.
  constexpr std::size_t chunk = 64;
  const std::size_t chunks = (n_runs + chunk - 1) / chunk;
  std::vector<Eigen::VectorXd> sums(chunks, Eigen::VectorXd::Zero(n)), squares(chunks, Eigen::VectorXd::Zero(n));

  auto work = [&](std::size_t c) {
    const OpinionState x0 = initial_state(partition);
    for (std::size_t r = c * chunk; r < std::min(n_runs, (c + 1) * chunk); ++r) {
      Rng rng(seed, Stream::Gossip, r);
      OpinionState state = x0;
      for (std::size_t t = 0; t < n_steps; ++t) state = gossip_step(graph, partition, state, u, activation, rng).state;
      sums[c] += state.x;
      squares[c] += state.x.cwiseProduct(state.x);
    }
  };

  unsigned threads = jobs ? jobs : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, chunks));
  if (threads <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) work(c);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t c = t; c < chunks; c += threads) work(c);
      });
  }

  Eigen::VectorXd sum = Eigen::VectorXd::Zero(n), sq = Eigen::VectorXd::Zero(n);
  for (std::size_t c = 0; c < chunks; ++c) {
    sum += sums[c];
    sq += squares[c];
  }
  const double runs = static_cast<double>(n_runs);
  OpinionEstimate est;
  est.mean = sum / runs;
  est.std_error = Eigen::VectorXd::Zero(n);
  if (n_runs > 1) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double var = std::max(0.0, (sq[i] - runs * est.mean[i] * est.mean[i]) / (runs - 1.0));
      est.std_error[i] = std::sqrt(var / runs);
    }
  }
  return est;
}

}  // namespace opshape

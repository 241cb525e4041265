#include "opshape/sgd.hpp"

#include <string>
#include <vector>

#include "opshape/errors.hpp"
#include "run_support.hpp"

namespace opshape {

namespace {

[[noreturn]] void walk_overflow(NodeId start) {
  throw NonAbsorbing("walk from node " + std::to_string(start) + " exceeded " + std::to_string(kMaxWalkSteps) +
                     " steps without absorption");
}

std::vector<NodeId> walk_starts(const AgentPartition& partition) {
  std::vector<NodeId> starts;
  for (NodeId i = 0; i < partition.node_count(); ++i)
    if (!partition.is_stubborn(i)) starts.push_back(i);
  return starts;
}

}  // namespace

std::uint64_t sample_walk_scheme1(const InteractionGraph& graph, const AgentPartition& partition, NodeId start,
                                  Rng& rng, std::span<double> totals) {
  NodeId y = start;
  for (std::uint64_t m = 0; m <= kMaxWalkSteps; ++m) {
    if (partition.is_stubborn(y)) return m;
    const double alpha = partition.alpha(y);
    if (alpha > 0.0 && rng.bernoulli(alpha)) {
      totals[y] += 1.0;
      return m;
    }
    y = graph.sample_poll(y, rng);
  }
  walk_overflow(start);
}

std::uint64_t sample_walk_scheme2(const InteractionGraph& graph, const AgentPartition& partition, NodeId start,
                                  Rng& rng, std::span<double> totals) {
  NodeId y = start;
  double zeta = 1.0;
  for (std::uint64_t m = 0; m <= kMaxWalkSteps; ++m) {
    if (partition.is_stubborn(y)) return m;
    const double alpha = partition.alpha(y);
    totals[y] += zeta * alpha;
    zeta *= 1.0 - alpha;
    y = graph.sample_poll(y, rng);
  }
  walk_overflow(start);
}

std::uint64_t sample_walk(WalkScheme scheme, const InteractionGraph& graph, const AgentPartition& partition,
                          NodeId start, Rng& rng, std::span<double> totals) {
  return scheme == WalkScheme::Killed ? sample_walk_scheme1(graph, partition, start, rng, totals)
                                      : sample_walk_scheme2(graph, partition, start, rng, totals);
}

Eigen::VectorXd sample_gradient_weights(WalkScheme scheme, const OpinionModel& model, Rng& rng) {
  const auto& partition = model.partition();
  std::vector<double> totals(model.node_count(), 0.0);
  for (NodeId start = 0; start < model.node_count(); ++start)
    if (!partition.is_stubborn(start)) sample_walk(scheme, model.graph(), partition, start, rng, totals);
  Eigen::VectorXd xi(static_cast<Eigen::Index>(model.control_count()));
  for (std::size_t k = 0; k < model.control_count(); ++k)
    xi[static_cast<Eigen::Index>(k)] = totals[partition.controlled()[k]];
  return xi;
}

ControlVector sgd_step(const AgentPartition& partition, const ControlVector& u, const Eigen::VectorXd& xi_totals,
                       double step, double budget) {
  if (u.size() == 0) return u;
  Eigen::VectorXd direction(u.size());
  for (Eigen::Index k = 0; k < u.size(); ++k)
    direction[k] = partition.reward(static_cast<std::size_t>(k)).derivative(u[k]) * xi_totals[k];
  return project_budget_simplex(u + step * direction, budget);
}

Trajectory run_sgd(const OpinionModel& model, double budget, std::uint64_t n_iters, std::uint64_t seed,
                   const SgdOptions& options, const RunControl& control) {
  const auto& partition = model.partition();
  ControlVector u = starting_control(model, control, budget);
  Rng rng(seed, Stream::Walks);
  const auto starts = walk_starts(partition);
  std::vector<double> totals(model.node_count());
  Eigen::VectorXd xi(static_cast<Eigen::Index>(model.control_count()));

  detail::Recorder recorder(control, n_iters);
  recorder.record(0, u, model.payoff(u));
  for (std::uint64_t n = 0; n < n_iters; ++n) {
    detail::IterationTimer timer(control);
    std::fill(totals.begin(), totals.end(), 0.0);
    if (options.single_uniform_start) {
      if (!starts.empty())
        sample_walk(options.scheme, model.graph(), partition, starts[static_cast<std::size_t>(rng.below(starts.size()))],
                    rng, totals);
    } else {
      for (NodeId start : starts) sample_walk(options.scheme, model.graph(), partition, start, rng, totals);
    }
    for (std::size_t k = 0; k < model.control_count(); ++k)
      xi[static_cast<Eigen::Index>(k)] = totals[partition.controlled()[k]];
    u = sgd_step(partition, u, xi, options.step(n), budget);
    recorder.record_lazy(n + 1, u, [&] { return model.payoff(u); });
  }
  return recorder.finish();
}

}  // namespace opshape

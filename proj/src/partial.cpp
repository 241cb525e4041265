#include "opshape/partial.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "opshape/errors.hpp"
#include "run_support.hpp"

namespace opshape {

ObservationSet::ObservationSet(const AgentPartition& partition, std::vector<bool> observed)
    : observed_(std::move(observed)) {
  if (observed_.size() != partition.node_count()) throw Error("observation mask must be indexed by node");
  for (NodeId i = 0; i < observed_.size(); ++i)
    if (!observed_[i] && partition.cls(i) != AgentClass::Uncontrolled)
      throw Error("controlled and stubborn agents must be observed (node " + std::to_string(i) + ")");
}

ObservationSet ObservationSet::all(const AgentPartition& partition) {
  return {partition, std::vector<bool>(partition.node_count(), true)};
}

ObservationSet ObservationSet::hide_fraction(const AgentPartition& partition, double hidden_fraction,
                                             std::uint64_t seed) {
  if (!(hidden_fraction >= 0.0 && hidden_fraction <= 1.0)) throw ConfigError("hidden fraction must lie in [0,1]");
  const std::size_t pool = partition.uncontrolled().size() + partition.stubborn().size();
  const auto wanted = static_cast<std::size_t>(std::floor(hidden_fraction * static_cast<double>(pool)));
  std::vector<NodeId> candidates = partition.uncontrolled();
  Rng rng(seed, Stream::Observation);
  rng.shuffle(std::span<NodeId>(candidates));
  std::vector<bool> mask(partition.node_count(), true);
  for (std::size_t r = 0; r < std::min(wanted, candidates.size()); ++r) mask[candidates[r]] = false;
  return {partition, std::move(mask)};
}

std::size_t ObservationSet::hidden_count() const {
  return static_cast<std::size_t>(std::count(observed_.begin(), observed_.end(), false));
}

ProbeResult probe(const InteractionGraph& graph, const ObservationSet& observation, NodeId origin, Rng& rng,
                  std::uint64_t tick) {
  ProbeResult result{graph.sample_poll(origin, rng), Token{origin, tick, 0}};
  while (!observation.observed(result.reached)) {
    if (++result.token.hops > kMaxTokenHops)
      throw NonAbsorbing("token from node " + std::to_string(origin) + " never reached an observed agent");
    result.reached = graph.sample_poll(result.reached, rng);
  }
  return result;
}

void partial_fast_update(const AgentPartition& partition, const Eigen::VectorXd& before, Eigen::VectorXd& after,
                         NodeId i, NodeId probed, const ControlVector& u, double step) {
  if (partition.is_stubborn(i)) return;
  const auto ii = static_cast<Eigen::Index>(i);
  const double alpha = partition.alpha(i);
  const std::ptrdiff_t k = partition.control_index(i);
  const double local = k >= 0 ? alpha * partition.reward(static_cast<std::size_t>(k)).derivative(u[k]) : 0.0;
  const double current = before[ii];
  after[ii] = current + step * (local + (1.0 - alpha) * before[static_cast<Eigen::Index>(probed)] - current);
}

Eigen::VectorXd partial_fast_update(const AgentPartition& partition, const Eigen::VectorXd& psi, NodeId i,
                                    NodeId probed, const ControlVector& u, LocalClocks& clocks,
                                    const StepSchedule& schedule) {
  Eigen::VectorXd out = psi;
  if (partition.is_stubborn(i)) return out;
  partial_fast_update(partition, psi, out, i, probed, u, schedule.a(clocks.advance(i)));
  return out;
}

ControlVector partial_slow_update(const AgentPartition& partition, const ControlVector& u, const Eigen::VectorXd& psi,
                                  std::uint64_t k, const StepSchedule& schedule, double budget) {
  if (u.size() == 0) return u;
  Eigen::VectorXd g(u.size());
  for (Eigen::Index c = 0; c < u.size(); ++c)
    g[c] = psi[static_cast<Eigen::Index>(partition.controlled()[static_cast<std::size_t>(c)])];
  return project_budget_simplex(u + schedule.b(k) * g, budget);
}

PartialResult run_partial(const OpinionModel& model, const ObservationSet& observation, double budget,
                          const StepSchedule& schedule, std::uint64_t n_iters, std::uint64_t seed,
                          const RunControl& control, const PartialOptions& options) {
  const auto& partition = model.partition();
  if (observation.mask().size() != model.node_count()) throw Error("observation set does not match the model");
  ControlVector u = starting_control(model, control, budget);
  Rng rng(seed, Stream::Probes);

  std::vector<NodeId> learners;
  for (NodeId i = 0; i < model.node_count(); ++i)
    if (observation.observed(i) && !partition.is_stubborn(i)) learners.push_back(i);

  PartialResult result{{}, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.node_count())),
                       LocalClocks(model.node_count()), 0};
  Eigen::VectorXd& psi = result.psi;
  Eigen::VectorXd next = psi;

  detail::Recorder recorder(control, n_iters);
  recorder.record(0, u, model.payoff(u));
  for (std::uint64_t k = 0; k < n_iters; ++k) {
    detail::IterationTimer timer(control);
    for (NodeId i : learners) {
      const ProbeResult pr = probe(model.graph(), observation, i, rng, k);
      result.total_hops += pr.token.hops;
      partial_fast_update(partition, psi, next, i, pr.reached, u, schedule.a(result.clocks.advance(i)));
    }
    if (!options.freeze_control) u = partial_slow_update(partition, u, psi, k, schedule, budget);
    psi = next;
    recorder.record_lazy(k + 1, u, [&] { return model.payoff(u); });
  }
  result.trajectory = recorder.finish();
  return result;
}

}  // namespace opshape

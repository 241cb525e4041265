#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "opshape/dynamics.hpp"
#include "opshape/optim.hpp"

namespace opshape {

inline constexpr std::uint64_t kMaxTokenHops = 10'000'000;

/// Which agents the planner can see. Always contains S u S0.
class ObservationSet {
 public:
  /// Throws unless every controlled and stubborn agent is observed.
  ObservationSet(const AgentPartition& partition, std::vector<bool> observed);

  /// Everyone observed.
  static ObservationSet all(const AgentPartition& partition);

  /// Hides floor(hidden_fraction * |S0 u S1|) agents, drawn uniformly from S1
  /// (stubborn agents never poll, so they cannot relay and stay observed).
  static ObservationSet hide_fraction(const AgentPartition& partition, double hidden_fraction, std::uint64_t seed);

  bool observed(NodeId i) const { return observed_[i]; }
  const std::vector<bool>& mask() const { return observed_; }
  std::size_t hidden_count() const;

 private:
  std::vector<bool> observed_;
};

/// A poll relayed by unobserved agents. Carries the tag of the agent that
/// started it and the tick it was issued on.
struct Token {
  NodeId origin;
  std::uint64_t issued_at = 0;
  std::uint64_t hops = 0;
};

struct ProbeResult {
  NodeId reached;
  Token token;
};

/// Agent i polls a neighbor; unobserved recipients relay the token by polling
/// in turn until it lands on an observed agent.
ProbeResult probe(const InteractionGraph& graph, const ObservationSet& observation, NodeId origin, Rng& rng,
                  std::uint64_t tick = 0);

/// Psi_i += step (alpha_i w_i'(u_i) + (1 - alpha_i) Psi_probed - Psi_i).
/// `before` and `after` may alias. Stubborn agents keep Psi = 0.
void partial_fast_update(const AgentPartition& partition, const Eigen::VectorXd& before, Eigen::VectorXd& after,
                         NodeId i, NodeId probed, const ControlVector& u, double step);

Eigen::VectorXd partial_fast_update(const AgentPartition& partition, const Eigen::VectorXd& psi, NodeId i,
                                    NodeId probed, const ControlVector& u, LocalClocks& clocks,
                                    const StepSchedule& schedule);

/// Gamma(u_k + b(k) Psi_{s_k}).
ControlVector partial_slow_update(const AgentPartition& partition, const ControlVector& u, const Eigen::VectorXd& psi,
                                  std::uint64_t k, const StepSchedule& schedule, double budget);

struct PartialResult {
  Trajectory trajectory;
  /// Indexed by node; entries of unobserved agents stay 0.
  Eigen::VectorXd psi;
  LocalClocks clocks;
  /// Relay hops of all tokens, for diagnostics.
  std::uint64_t total_hops = 0;
};

struct PartialOptions {
  bool freeze_control = false;
};

/// Synchronous learner on the observed agents: each observed non-stubborn
/// agent probes once per tick. The trajectory's payoff is the full objective.
PartialResult run_partial(const OpinionModel& model, const ObservationSet& observation, double budget,
                          const StepSchedule& schedule, std::uint64_t n_iters, std::uint64_t seed,
                          const RunControl& control = {}, const PartialOptions& options = {});

}  // namespace opshape

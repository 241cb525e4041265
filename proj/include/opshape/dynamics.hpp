#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "opshape/network.hpp"

namespace opshape {

/// u in R_+^{|S|}; coordinate k acts on partition.controlled()[k].
using ControlVector = Eigen::VectorXd;

/// A graph, a partition and the factorized system (Id - A).
///
/// Since A does not depend on the control, one factorization serves every
/// evaluation of the stationary opinion, the payoff and the exact gradient.
/// Immutable after construction and safe to share across threads.
class OpinionModel {
 public:
  /// Throws Infeasible when (Id - A) is singular.
  OpinionModel(InteractionGraph graph, AgentPartition partition);

  const InteractionGraph& graph() const { return graph_; }
  const AgentPartition& partition() const { return partition_; }
  std::size_t node_count() const { return graph_.node_count(); }
  std::size_t control_count() const { return partition_.control_count(); }

  /// Substochastic influence matrix A.
  const Eigen::MatrixXd& influence() const { return influence_; }

  /// W_i(u) = 1{i in S} alpha_i w_i(u_i) + 1{i in S0} h(i).
  Eigen::VectorXd drive(const ControlVector& u) const;

  /// x* = (Id - A)^{-1} W(u).
  Eigen::VectorXd stationary(const ControlVector& u) const;

  /// 1^T x*, evaluated as weights . W(u).
  double payoff(const ControlVector& u) const;

  /// Component k: alpha_i w_i'(u_k) [1^T (Id - A)^{-1}]_i with i = controlled()[k].
  Eigen::VectorXd gradient(const ControlVector& u) const;

  /// Row vector 1^T (Id - A)^{-1}: expected visits to each node, summed over starts.
  const Eigen::VectorXd& influence_weights() const { return weights_; }

  /// Solves (Id - A) X = rhs.
  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const { return lu_.solve(rhs); }

  /// Throws unless u has one entry per controlled agent.
  void check_control(const ControlVector& u) const;

 private:
  InteractionGraph graph_;
  AgentPartition partition_;
  Eigen::MatrixXd influence_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  Eigen::VectorXd weights_;
};

Eigen::VectorXd stationary_opinion(const InteractionGraph& graph, const AgentPartition& partition,
                                   const ControlVector& u);
double total_payoff(const InteractionGraph& graph, const AgentPartition& partition, const ControlVector& u);

struct OpinionState {
  Eigen::VectorXd x;
  std::uint64_t k = 0;
};

/// x(0): h on stubborn agents, `initial` elsewhere.
OpinionState initial_state(const AgentPartition& partition, double initial = 0.5);

struct PollEvent {
  NodeId poller;
  NodeId polled;
  friend bool operator==(const PollEvent&, const PollEvent&) = default;
};

struct StepOutcome {
  OpinionState state;
  /// Polls actually performed this step, in increasing poller order.
  std::vector<PollEvent> polls;
};

/// One tick of the gossip process. Activated agents read the pre-tick
/// opinions and write the post-tick ones. A controlled agent adopts w_i(u_i)
/// with probability alpha_i and otherwise polls.
StepOutcome gossip_step(const InteractionGraph& graph, const AgentPartition& partition, const OpinionState& state,
                        const ControlVector& u, const ActivationModel& activation, Rng& rng);

struct OpinionEstimate {
  Eigen::VectorXd mean;
  /// Standard error of each component of the mean.
  Eigen::VectorXd std_error;
};

/// Monte-Carlo average of x(n_steps) over n_runs independent trajectories.
/// Run r draws from its own stream, so results do not depend on `jobs`.
OpinionEstimate empirical_mean_opinion(const InteractionGraph& graph, const AgentPartition& partition,
                                       const ControlVector& u, const ActivationModel& activation,
                                       std::size_t n_steps, std::size_t n_runs, std::uint64_t seed,
                                       unsigned jobs = 0);

}  // namespace opshape

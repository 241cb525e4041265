#pragma once

#include <cstdint>
#include <span>

#include <Eigen/Dense>

#include "opshape/dynamics.hpp"
#include "opshape/optim.hpp"

namespace opshape {

/// Hard cap on the length of a sampled walk.
inline constexpr std::uint64_t kMaxWalkSteps = 10'000'000;

enum class WalkScheme {
  /// Walk killed w.p. alpha at each node; a kill at y adds 1 to column y.
  Killed = 1,
  /// Walk moves by P until it enters S0, adding zeta * alpha_y at each node
  /// and discounting zeta by (1 - alpha_y).
  Discounted = 2,
};

/// Adds one walk's contribution to `totals` (indexed by stop node).
/// Returns the number of moves made. Throws NonAbsorbing past kMaxWalkSteps.
std::uint64_t sample_walk_scheme1(const InteractionGraph& graph, const AgentPartition& partition, NodeId start,
                                  Rng& rng, std::span<double> totals);
std::uint64_t sample_walk_scheme2(const InteractionGraph& graph, const AgentPartition& partition, NodeId start,
                                  Rng& rng, std::span<double> totals);
std::uint64_t sample_walk(WalkScheme scheme, const InteractionGraph& graph, const AgentPartition& partition,
                          NodeId start, Rng& rng, std::span<double> totals);

/// Per-control sums sum_j xi_{j,k} from one walk launched at every node of S u S1.
Eigen::VectorXd sample_gradient_weights(WalkScheme scheme, const OpinionModel& model, Rng& rng);

/// Gamma(u_k + step * w_k'(u_k) * xi_k).
ControlVector sgd_step(const AgentPartition& partition, const ControlVector& u, const Eigen::VectorXd& xi_totals,
                       double step, double budget);

struct SgdOptions {
  WalkScheme scheme = WalkScheme::Killed;
  /// a(n) = A / ceil(n / block).
  BlockSchedule step{0.6, 100.0};
  /// Launch a single walk from a uniformly drawn start instead of one from each
  /// non-stubborn node. The mean drift shrinks by 1/|S u S1|, which acts as a
  /// smaller step.
  bool single_uniform_start = false;
};

Trajectory run_sgd(const OpinionModel& model, double budget, std::uint64_t n_iters, std::uint64_t seed,
                   const SgdOptions& options = {}, const RunControl& control = {});

}  // namespace opshape

#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "opshape/dynamics.hpp"
#include "opshape/optim.hpp"
#include "opshape/sas.hpp"

namespace opshape {

/// Opinion model whose influence probabilities depend on the control:
/// controlled agent s_k adopts w_k(u_k) with probability alpha_k(u_k).
/// The fixed point V solves V = W(u) + A(u) V, which is no longer concave in u.
class GeneralModel {
 public:
  /// `alpha` and `rewards` are indexed by control coordinate. alpha_k must map
  /// [0, inf) into [0, 1). Throws Infeasible unless every agent reaches a
  /// stubborn agent or a controlled agent with a constant positive alpha.
  GeneralModel(InteractionGraph graph, AgentPartition partition, std::vector<ResponseCurve> alpha,
               std::vector<ResponseCurve> rewards);

  /// alpha_k(u) = u / (u + 0.1) and w_k = h(s_k), the defaults of the
  /// non-convex study.
  static GeneralModel saturating_influence(InteractionGraph graph, AgentPartition partition, double scale = 0.1);

  /// Constant alpha and the partition's rewards: reproduces the base model.
  static GeneralModel from_base(InteractionGraph graph, AgentPartition partition);

  const InteractionGraph& graph() const { return graph_; }
  const AgentPartition& partition() const { return partition_; }
  std::size_t node_count() const { return graph_.node_count(); }
  std::size_t control_count() const { return partition_.control_count(); }
  const ResponseCurve& alpha(std::size_t k) const { return alpha_[k]; }
  const ResponseCurve& reward(std::size_t k) const { return rewards_[k]; }

  /// Per-node influence probability under control u (0 outside S).
  Eigen::VectorXd alphas(const ControlVector& u) const;
  Eigen::MatrixXd influence(const ControlVector& u) const;
  Eigen::VectorXd drive(const ControlVector& u) const;

  /// Solution of the control-dependent fixed point.
  Eigen::VectorXd value(const ControlVector& u) const;
  double payoff(const ControlVector& u) const { return value(u).sum(); }

  /// Exact d(1^T V)/du by implicit differentiation.
  Eigen::VectorXd gradient(const ControlVector& u) const;

  /// Exact table dV(i)/du_k: the fixed point of the learned Psi.
  GradientTable gradient_table(const ControlVector& u) const;

  /// (alpha_k w_k' + alpha_k' w_k)(u) - alpha_k'(u) * next_value: the direct
  /// dependence of node s_k's target on u_k.
  double local_derivative(std::size_t k, double u, double next_value) const;

 private:
  InteractionGraph graph_;
  AgentPartition partition_;
  std::vector<ResponseCurve> alpha_;
  std::vector<ResponseCurve> rewards_;
};

/// V_i += step (alpha_i(u_i) w_i(u_i) + (1 - alpha_i(u_i)) V_probed - V_i); stubborn agents keep h.
void value_update(const GeneralModel& model, const Eigen::VectorXd& before, Eigen::VectorXd& after, NodeId i,
                  NodeId probed, const ControlVector& u, double step);

/// Psi_ik += step ([(alpha w' + alpha' w) - alpha' V_probed] 1{i = s_k}
///                 + (1 - alpha_i(u_i)) Psi_probed,k - Psi_ik).
/// `values` is the pre-tick value table.
void general_grad_update(const GeneralModel& model, const GradientTable& before, GradientTable& after,
                         const Eigen::VectorXd& values, NodeId i, NodeId probed, const ControlVector& u, double step);

struct AnnealOptions {
  /// Noise scale; 0 gives plain projected ascent.
  double C = 10.0;
  /// c(k) = ceil(k / denom); 0 means the schedule's denom.
  double denom = 0.0;
};

/// C / sqrt((1 / b(k)) ln ln c(k)), or 0 while c(k) < 3.
double annealing_sigma(std::uint64_t k, const StepSchedule& schedule, const AnnealOptions& anneal);

/// Gamma(u + b(k) sum_i Psi_i. + sigma(k) W), W ~ N(0, I) drawn from `rng`.
ControlVector annealed_slow_update(const ControlVector& u, const GradientTable& psi, std::uint64_t k,
                                   const StepSchedule& schedule, const AnnealOptions& anneal, double budget, Rng& rng);

/// Full-expectation iteration with P known: every non-stubborn row of V and
/// Psi moves toward its expected target with the same step.
void known_p_updates(const GeneralModel& model, Eigen::VectorXd& values, GradientTable& psi, const ControlVector& u,
                     double step);

enum class GeneralMode { Sampled, KnownP };

struct GeneralResult {
  Trajectory trajectory;
  Eigen::VectorXd values;
  GradientTable psi;
};

struct GeneralOptions {
  GeneralMode mode = GeneralMode::Sampled;
  AnnealOptions anneal{};
  bool freeze_control = false;
};

/// Runs the value/gradient learner with annealed slow steps. Polls come from
/// PollStream(seed) and the annealing noise from its own stream of the same
/// seed, so Sampled and KnownP runs with equal seeds share the noise path.
/// Trajectory payoffs are those of the general model.
GeneralResult run_general(const GeneralModel& model, double budget, const StepSchedule& schedule,
                          const ActivationModel& activation, std::uint64_t n_iters, std::uint64_t seed,
                          const GeneralOptions& options = {}, const RunControl& control = {});

/// Best of several projected-ascent runs on the exact general gradient.
ControlVector general_reference_optimum(const GeneralModel& model, double budget, std::uint64_t seed = 0);

}  // namespace opshape

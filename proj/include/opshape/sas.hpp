#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "opshape/dynamics.hpp"
#include "opshape/optim.hpp"

namespace opshape {

/// Observed polls, one tick at a time: the activated non-stubborn agents
/// each poll one neighbor drawn from their row of P. The stream depends only
/// on the graph, partition, activation model and seed, never on the control,
/// so different learners can be fed identical events.
class PollStream {
 public:
  PollStream(const InteractionGraph& graph, const AgentPartition& partition, ActivationModel activation,
             std::uint64_t seed);

  std::vector<PollEvent> next();

 private:
  const InteractionGraph* graph_;
  const AgentPartition* partition_;
  ActivationModel activation_;
  Rng rng_;
};

/// Psi(i, k) estimates dV(i)/du_k for node i and control coordinate k.
using GradientTable = Eigen::MatrixXd;

/// Exact solution Phi of  Phi_ik = alpha_i w_i'(u_i) [i is control k]
/// + (1 - alpha_i) sum_l p_il Phi_lk, with zero rows on stubborn agents.
GradientTable phi_oracle(const OpinionModel& model, const ControlVector& u);

/// Max-norm bound a converged table cannot exceed: max alpha * max w' / min alpha over S.
double gradient_table_bound(const AgentPartition& partition, const ControlVector& u);

/// Row update of one poll event with an explicit step, reading `before` and
/// writing `after` (they may alias). Stubborn pollers are ignored.
void sas_fast_update(const AgentPartition& partition, const GradientTable& before, GradientTable& after,
                     PollEvent event, const ControlVector& u, double step);

/// Single-event form: steps with a(nu(i)), advances i's clock, returns Psi'.
GradientTable sas_fast_update(const AgentPartition& partition, const GradientTable& psi, PollEvent event,
                              const ControlVector& u, LocalClocks& clocks, const StepSchedule& schedule);

/// Gamma(u + b(k) g) with g_k = sum_i Psi(i, k).
ControlVector sas_slow_update(const ControlVector& u, const GradientTable& psi, std::uint64_t k,
                              const StepSchedule& schedule, double budget);

struct SasOptions {
  /// Disables the slow scale (u stays at u0).
  bool freeze_control = false;
};

struct SasResult {
  Trajectory trajectory;
  GradientTable psi;
  LocalClocks clocks;
};

/// Two-time-scale scheme driven by observed polls. Per tick: draw the poll
/// events, update the touched rows of Psi from the pre-tick table, then take
/// one projected ascent step from the pre-tick table.
SasResult run_sas(const OpinionModel& model, double budget, const StepSchedule& schedule,
                  const ActivationModel& activation, std::uint64_t n_iters, std::uint64_t seed,
                  const RunControl& control = {}, const SasOptions& options = {});

}  // namespace opshape

#include "opshape/sas.hpp"

#include <algorithm>

#include "opshape/errors.hpp"
#include "run_support.hpp"

namespace opshape {

PollStream::PollStream(const InteractionGraph& graph, const AgentPartition& partition, ActivationModel activation,
                       std::uint64_t seed)
    : graph_(&graph), partition_(&partition), activation_(std::move(activation)), rng_(seed, Stream::Polls) {
  activation_.validate(partition);
}

std::vector<PollEvent> PollStream::next() {
  std::vector<PollEvent> events;
  for (NodeId i : draw_activated(*partition_, activation_, rng_)) events.push_back({i, graph_->sample_poll(i, rng_)});
  return events;
}

GradientTable phi_oracle(const OpinionModel& model, const ControlVector& u) {
  model.check_control(u);
  const auto& p = model.partition();
  GradientTable rhs = GradientTable::Zero(static_cast<Eigen::Index>(model.node_count()),
                                          static_cast<Eigen::Index>(model.control_count()));
  for (std::size_t k = 0; k < p.control_count(); ++k) {
    const NodeId i = p.controlled()[k];
    const auto kk = static_cast<Eigen::Index>(k);
    rhs(static_cast<Eigen::Index>(i), kk) = p.alpha(i) * p.reward(k).derivative(u[kk]);
  }
  return model.solve(rhs);
}

double gradient_table_bound(const AgentPartition& partition, const ControlVector& u) {
  double max_alpha = 0.0, min_alpha = 1.0, max_slope = 0.0;
  for (std::size_t k = 0; k < partition.control_count(); ++k) {
    const double a = partition.alpha(partition.controlled()[k]);
    max_alpha = std::max(max_alpha, a);
    min_alpha = std::min(min_alpha, a);
    max_slope = std::max(max_slope, partition.reward(k).derivative(u[static_cast<Eigen::Index>(k)]));
  }
  return partition.control_count() == 0 ? 0.0 : max_alpha * max_slope / min_alpha;
}

void sas_fast_update(const AgentPartition& partition, const GradientTable& before, GradientTable& after,
                     PollEvent event, const ControlVector& u, double step) {
  const NodeId i = event.poller;
  if (partition.is_stubborn(i)) return;
  const auto row = static_cast<Eigen::Index>(i);
  const auto polled = static_cast<Eigen::Index>(event.polled);
  const double alpha = partition.alpha(i);
  const std::ptrdiff_t own = partition.control_index(i);
  for (Eigen::Index k = 0; k < before.cols(); ++k) {
    const double local = (k == own) ? alpha * partition.reward(static_cast<std::size_t>(k)).derivative(u[k]) : 0.0;
    const double current = before(row, k);
    after(row, k) = current + step * (local + (1.0 - alpha) * before(polled, k) - current);
  }
}

GradientTable sas_fast_update(const AgentPartition& partition, const GradientTable& psi, PollEvent event,
                              const ControlVector& u, LocalClocks& clocks, const StepSchedule& schedule) {
  GradientTable out = psi;
  if (partition.is_stubborn(event.poller)) return out;
  sas_fast_update(partition, psi, out, event, u, schedule.a(clocks.advance(event.poller)));
  return out;
}

ControlVector sas_slow_update(const ControlVector& u, const GradientTable& psi, std::uint64_t k,
                              const StepSchedule& schedule, double budget) {
  if (u.size() == 0) return u;
  return project_budget_simplex(u + schedule.b(k) * psi.colwise().sum().transpose(), budget);
}

SasResult run_sas(const OpinionModel& model, double budget, const StepSchedule& schedule,
                  const ActivationModel& activation, std::uint64_t n_iters, std::uint64_t seed,
                  const RunControl& control, const SasOptions& options) {
  const auto& partition = model.partition();
  ControlVector u = starting_control(model, control, budget);
  PollStream stream(model.graph(), partition, activation, seed);
  SasResult result{{},
                   GradientTable::Zero(static_cast<Eigen::Index>(model.node_count()),
                                       static_cast<Eigen::Index>(model.control_count())),
                   LocalClocks(model.node_count())};
  GradientTable& psi = result.psi;
  GradientTable next = psi;

  detail::Recorder recorder(control, n_iters);
  recorder.record(0, u, model.payoff(u));
  for (std::uint64_t k = 0; k < n_iters; ++k) {
    detail::IterationTimer timer(control);
    for (const PollEvent& ev : stream.next())
      sas_fast_update(partition, psi, next, ev, u, schedule.a(result.clocks.advance(ev.poller)));
    if (!options.freeze_control) u = sas_slow_update(u, psi, k, schedule, budget);
    psi = next;
    recorder.record_lazy(k + 1, u, [&] { return model.payoff(u); });
  }
  result.trajectory = recorder.finish();
  return result;
}

}  // namespace opshape

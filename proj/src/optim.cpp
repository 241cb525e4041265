#include "opshape/optim.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "opshape/errors.hpp"
#include "run_support.hpp"

namespace opshape {

ControlVector project_budget_simplex(const Eigen::VectorXd& v, double budget) {
  if (!(budget > 0.0)) throw Error("budget must be positive");
  ControlVector clipped = v.cwiseMax(0.0);
  if (clipped.sum() <= budget) return clipped;

  // Onto {x >= 0, sum x = budget}: find the water level theta with
  // sum max(v - theta, 0) = budget.
  std::vector<double> sorted(v.data(), v.data() + v.size());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double running = 0.0, theta = 0.0;
  for (std::size_t r = 0; r < sorted.size(); ++r) {
    running += sorted[r];
    const double candidate = (running - budget) / static_cast<double>(r + 1);
    if (sorted[r] - candidate > 0.0) theta = candidate;
  }
  return (v.array() - theta).cwiseMax(0.0).matrix();
}

double StepSchedule::a(std::uint64_t k) const {
  const double kk = static_cast<double>(k);
  return A / std::max(1.0, std::ceil((1.0 + kk * std::log1p(kk)) / denom));
}

double StepSchedule::b(std::uint64_t k) const { return BlockSchedule{B, denom}(k); }

double BlockSchedule::operator()(std::uint64_t n) const {
  return A / std::max(1.0, std::ceil(static_cast<double>(n) / block));
}

ScheduleDiagnostics diagnose(const StepSchedule& schedule, std::uint64_t horizon) {
  ScheduleDiagnostics d;
  double sa = 0.0, sb = 0.0, sq = 0.0;
  std::uint64_t next_checkpoint = 10;
  double previous_a = schedule.a(0);
  for (std::uint64_t k = 0; k <= horizon; ++k) {
    const double a = schedule.a(k), b = schedule.b(k);
    if (a > previous_a) d.a_monotone_from = k;
    previous_a = a;
    sa += a;
    sb += b;
    sq += a * a + b * b;
    if (k == next_checkpoint || k == horizon) {
      d.checkpoints.push_back(k);
      d.sum_a.push_back(sa);
      d.sum_b.push_back(sb);
      d.sum_squares.push_back(sq);
      d.ratio_b_over_a.push_back(b / a);
      if (k == next_checkpoint) next_checkpoint *= 10;
    }
  }
  return d;
}

Eigen::VectorXd exact_gradient(const InteractionGraph& graph, const AgentPartition& partition, const ControlVector& u) {
  return OpinionModel(graph, partition).gradient(u);
}

double stationarity_residual(const ControlVector& u, const Eigen::VectorXd& gradient, double budget, double gamma) {
  if (u.size() == 0) return 0.0;
  return (project_budget_simplex(u + gamma * gradient, budget) - u).lpNorm<Eigen::Infinity>() / gamma;
}

ControlVector starting_control(const OpinionModel& model, const RunControl& control, double budget) {
  if (control.u0.size() == 0) return ControlVector::Zero(static_cast<Eigen::Index>(model.control_count()));
  model.check_control(control.u0);
  if ((control.u0.array() < 0.0).any() || control.u0.sum() > budget * (1.0 + 1e-12))
    throw Error("initial control is outside the budget set");
  return control.u0;
}

Trajectory run_exact_gd(const OpinionModel& model, double budget, std::uint64_t n_iters, const GdOptions& options,
                        const RunControl& control) {
  ControlVector u = starting_control(model, control, budget);
  detail::Recorder recorder(control, n_iters);
  recorder.record(0, u, model.payoff(u));
  for (std::uint64_t k = 0; k < n_iters; ++k) {
    detail::IterationTimer timer(control);
    const Eigen::VectorXd g = model.gradient(u);
    if (options.tolerance > 0.0 && stationarity_residual(u, g, budget) <= options.tolerance) {
      recorder.force(k, u, model.payoff(u));
      break;
    }
    u = project_budget_simplex(u + (options.gain / static_cast<double>(k + 1)) * g, budget);
    recorder.record_lazy(k + 1, u, [&] { return model.payoff(u); });
  }
  return recorder.finish();
}

ControlVector reference_optimum(const OpinionModel& model, double budget) {
  if (model.control_count() == 0) return {};
  RunControl control;
  control.record_every = UINT64_MAX;
  const auto traj = run_exact_gd(model, budget, 400000, GdOptions{100.0, 1e-13}, control);
  return traj.final().u;
}

}  // namespace opshape

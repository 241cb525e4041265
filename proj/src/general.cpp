#include "opshape/general.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "opshape/errors.hpp"
#include "run_support.hpp"

namespace opshape {

GeneralModel::GeneralModel(InteractionGraph graph, AgentPartition partition, std::vector<ResponseCurve> alpha,
                           std::vector<ResponseCurve> rewards)
    : graph_(std::move(graph)), partition_(std::move(partition)), alpha_(std::move(alpha)), rewards_(std::move(rewards)) {
  if (graph_.node_count() != partition_.node_count()) throw Error("partition and graph sizes differ");
  if (alpha_.size() != control_count() || rewards_.size() != control_count())
    throw Error("one alpha curve and one reward curve per controlled agent are required");

  // alpha_k(u) may vanish, so only stubborn agents and controlled agents with
  // a constant positive alpha are guaranteed leaks.
  const std::size_t n = node_count();
  std::vector<std::vector<NodeId>> incoming(n);
  for (NodeId i = 0; i < n; ++i)
    if (!partition_.is_stubborn(i))
      for (NodeId j : graph_.neighbors(i)) incoming[j].push_back(i);
  std::vector<bool> reaches(n, false);
  std::vector<NodeId> frontier;
  for (NodeId i = 0; i < n; ++i) {
    const std::ptrdiff_t k = partition_.control_index(i);
    const bool leaks = partition_.is_stubborn(i) ||
                       (k >= 0 && alpha_[static_cast<std::size_t>(k)].kind() == ResponseCurve::Kind::Constant &&
                        alpha_[static_cast<std::size_t>(k)].parameter() > 0.0);
    if (leaks) {
      reaches[i] = true;
      frontier.push_back(i);
    }
  }
  while (!frontier.empty()) {
    const NodeId j = frontier.back();
    frontier.pop_back();
    for (NodeId i : incoming[j])
      if (!reaches[i]) {
        reaches[i] = true;
        frontier.push_back(i);
      }
  }
  for (NodeId i = 0; i < n; ++i)
    if (!reaches[i])
      throw Infeasible("node " + std::to_string(i) + " may never be absorbed when alpha depends on the control");
}

GeneralModel GeneralModel::saturating_influence(InteractionGraph graph, AgentPartition partition, double scale) {
  std::vector<ResponseCurve> alpha(partition.control_count(), ResponseCurve::saturating(scale));
  std::vector<ResponseCurve> rewards;
  for (NodeId i : partition.controlled()) rewards.push_back(ResponseCurve::constant(partition.h(i)));
  return GeneralModel(std::move(graph), std::move(partition), std::move(alpha), std::move(rewards));
}

GeneralModel GeneralModel::from_base(InteractionGraph graph, AgentPartition partition) {
  std::vector<ResponseCurve> alpha;
  for (NodeId i : partition.controlled()) alpha.push_back(ResponseCurve::constant(partition.alpha(i)));
  std::vector<ResponseCurve> rewards = partition.rewards();
  return GeneralModel(std::move(graph), std::move(partition), std::move(alpha), std::move(rewards));
}

Eigen::VectorXd GeneralModel::alphas(const ControlVector& u) const {
  if (static_cast<std::size_t>(u.size()) != control_count()) throw Error("control vector has the wrong size");
  Eigen::VectorXd a = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(node_count()));
  for (std::size_t k = 0; k < control_count(); ++k)
    a[static_cast<Eigen::Index>(partition_.controlled()[k])] = alpha_[k].value(u[static_cast<Eigen::Index>(k)]);
  return a;
}

Eigen::MatrixXd GeneralModel::influence(const ControlVector& u) const {
  const Eigen::VectorXd a = alphas(u);
  Eigen::MatrixXd m = graph_.poll_matrix();
  for (NodeId i = 0; i < node_count(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    if (partition_.is_stubborn(i))
      m.row(r).setZero();
    else
      m.row(r) *= 1.0 - a[r];
  }
  return m;
}

Eigen::VectorXd GeneralModel::drive(const ControlVector& u) const {
  const Eigen::VectorXd a = alphas(u);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(node_count()));
  for (NodeId i : partition_.stubborn()) w[static_cast<Eigen::Index>(i)] = partition_.h(i);
  for (std::size_t k = 0; k < control_count(); ++k) {
    const auto i = static_cast<Eigen::Index>(partition_.controlled()[k]);
    w[i] = a[i] * rewards_[k].value(u[static_cast<Eigen::Index>(k)]);
  }
  return w;
}

Eigen::VectorXd GeneralModel::value(const ControlVector& u) const {
  const auto n = static_cast<Eigen::Index>(node_count());
  const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n) - influence(u);
  return system.partialPivLu().solve(drive(u));
}

double GeneralModel::local_derivative(std::size_t k, double u, double next_value) const {
  const double da = alpha_[k].derivative(u);
  return (alpha_[k].value(u) * rewards_[k].derivative(u) + da * rewards_[k].value(u)) - da * next_value;
}

GradientTable GeneralModel::gradient_table(const ControlVector& u) const {
  const auto n = static_cast<Eigen::Index>(node_count());
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(Eigen::MatrixXd::Identity(n, n) - influence(u));
  const Eigen::VectorXd v = lu.solve(drive(u));
  const Eigen::VectorXd pv = graph_.poll_matrix() * v;
  GradientTable rhs = GradientTable::Zero(n, static_cast<Eigen::Index>(control_count()));
  for (std::size_t k = 0; k < control_count(); ++k) {
    const auto i = static_cast<Eigen::Index>(partition_.controlled()[k]);
    rhs(i, static_cast<Eigen::Index>(k)) = local_derivative(k, u[static_cast<Eigen::Index>(k)], pv[i]);
  }
  return lu.solve(rhs);
}

Eigen::VectorXd GeneralModel::gradient(const ControlVector& u) const {
  return gradient_table(u).colwise().sum().transpose();
}

void value_update(const GeneralModel& model, const Eigen::VectorXd& before, Eigen::VectorXd& after, NodeId i,
                  NodeId probed, const ControlVector& u, double step) {
  const auto& partition = model.partition();
  if (partition.is_stubborn(i)) return;
  const auto ii = static_cast<Eigen::Index>(i);
  const std::ptrdiff_t k = partition.control_index(i);
  double alpha = 0.0, reward = 0.0;
  if (k >= 0) {
    alpha = model.alpha(static_cast<std::size_t>(k)).value(u[k]);
    reward = model.reward(static_cast<std::size_t>(k)).value(u[k]);
  }
  const double current = before[ii];
  after[ii] = current + step * (alpha * reward + (1.0 - alpha) * before[static_cast<Eigen::Index>(probed)] - current);
}

void general_grad_update(const GeneralModel& model, const GradientTable& before, GradientTable& after,
                         const Eigen::VectorXd& values, NodeId i, NodeId probed, const ControlVector& u, double step) {
  const auto& partition = model.partition();
  if (partition.is_stubborn(i)) return;
  const auto row = static_cast<Eigen::Index>(i);
  const auto polled = static_cast<Eigen::Index>(probed);
  const std::ptrdiff_t own = partition.control_index(i);
  const double alpha = own >= 0 ? model.alpha(static_cast<std::size_t>(own)).value(u[own]) : 0.0;
  for (Eigen::Index k = 0; k < before.cols(); ++k) {
    const double local = (k == own) ? model.local_derivative(static_cast<std::size_t>(k), u[k], values[polled]) : 0.0;
    const double current = before(row, k);
    after(row, k) = current + step * (local + (1.0 - alpha) * before(polled, k) - current);
  }
}

double annealing_sigma(std::uint64_t k, const StepSchedule& schedule, const AnnealOptions& anneal) {
  if (anneal.C == 0.0) return 0.0;
  const double denom = anneal.denom > 0.0 ? anneal.denom : schedule.denom;
  const double c = std::ceil(static_cast<double>(k) / denom);
  if (c < 3.0) return 0.0;
  return anneal.C / std::sqrt((1.0 / schedule.b(k)) * std::log(std::log(c)));
}

ControlVector annealed_slow_update(const ControlVector& u, const GradientTable& psi, std::uint64_t k,
                                   const StepSchedule& schedule, const AnnealOptions& anneal, double budget, Rng& rng) {
  if (u.size() == 0) return u;
  Eigen::VectorXd moved = u + schedule.b(k) * psi.colwise().sum().transpose();
  const double sigma = annealing_sigma(k, schedule, anneal);
  if (sigma > 0.0)
    for (Eigen::Index c = 0; c < moved.size(); ++c) moved[c] += sigma * rng.normal();
  return project_budget_simplex(moved, budget);
}

void known_p_updates(const GeneralModel& model, Eigen::VectorXd& values, GradientTable& psi, const ControlVector& u,
                     double step) {
  const auto& partition = model.partition();
  const Eigen::MatrixXd& p = model.graph().poll_matrix();
  const Eigen::VectorXd pv = p * values;
  const GradientTable ppsi = p * psi;
  const Eigen::VectorXd a = model.alphas(u);
  const Eigen::VectorXd w = model.drive(u);
  for (NodeId i = 0; i < model.node_count(); ++i) {
    if (partition.is_stubborn(i)) continue;
    const auto r = static_cast<Eigen::Index>(i);
    const std::ptrdiff_t own = partition.control_index(i);
    const double target = w[r] + (1.0 - a[r]) * pv[r];
    for (Eigen::Index k = 0; k < psi.cols(); ++k) {
      const double local = (k == own) ? model.local_derivative(static_cast<std::size_t>(k), u[k], pv[r]) : 0.0;
      psi(r, k) += step * (local + (1.0 - a[r]) * ppsi(r, k) - psi(r, k));
    }
    values[r] += step * (target - values[r]);
  }
}

GeneralResult run_general(const GeneralModel& model, double budget, const StepSchedule& schedule,
                          const ActivationModel& activation, std::uint64_t n_iters, std::uint64_t seed,
                          const GeneralOptions& options, const RunControl& control) {
  const auto& partition = model.partition();
  const auto n = static_cast<Eigen::Index>(model.node_count());
  ControlVector u = ControlVector::Zero(static_cast<Eigen::Index>(model.control_count()));
  if (control.u0.size() != 0) {
    if (control.u0.size() != u.size() || (control.u0.array() < 0.0).any() || control.u0.sum() > budget * (1 + 1e-12))
      throw Error("initial control is outside the budget set");
    u = control.u0;
  }

  GeneralResult result{{}, Eigen::VectorXd::Zero(n), GradientTable::Zero(n, u.size())};
  for (NodeId i : partition.stubborn()) result.values[static_cast<Eigen::Index>(i)] = partition.h(i);
  Eigen::VectorXd& values = result.values;
  GradientTable& psi = result.psi;
  Eigen::VectorXd next_values = values;
  GradientTable next_psi = psi;

  PollStream stream(model.graph(), partition, activation, seed);
  Rng noise(seed, Stream::Annealing);
  LocalClocks clocks(model.node_count());

  detail::Recorder recorder(control, n_iters);
  recorder.record(0, u, model.payoff(u));
  for (std::uint64_t k = 0; k < n_iters; ++k) {
    detail::IterationTimer timer(control);
    const GradientTable psi_before = psi;
    if (options.mode == GeneralMode::Sampled) {
      for (const PollEvent& ev : stream.next()) {
        const double step = schedule.a(clocks.advance(ev.poller));
        value_update(model, values, next_values, ev.poller, ev.polled, u, step);
        general_grad_update(model, psi, next_psi, values, ev.poller, ev.polled, u, step);
      }
      values = next_values;
      psi = next_psi;
    } else {
      known_p_updates(model, values, psi, u, schedule.a(k));
    }
    if (!options.freeze_control) u = annealed_slow_update(u, psi_before, k, schedule, options.anneal, budget, noise);
    recorder.record_lazy(k + 1, u, [&] { return model.payoff(u); });
  }
  result.trajectory = recorder.finish();
  return result;
}

ControlVector general_reference_optimum(const GeneralModel& model, double budget, std::uint64_t seed) {
  const auto m = static_cast<Eigen::Index>(model.control_count());
  if (m == 0) return {};
  std::vector<ControlVector> starts;
  starts.push_back(ControlVector::Constant(m, budget / static_cast<double>(m)));
  for (Eigen::Index k = 0; k < m; ++k) {
    ControlVector v = ControlVector::Zero(m);
    v[k] = budget;
    starts.push_back(v);
  }
  Rng rng(seed, Stream::Partition, 99);
  for (int r = 0; r < 8; ++r) {
    ControlVector v(m);
    for (Eigen::Index k = 0; k < m; ++k) v[k] = -std::log(1.0 - rng.uniform());
    starts.push_back(v * (budget * rng.uniform() / v.sum()));
  }

  ControlVector best;
  double best_payoff = -1.0;
  for (ControlVector u : starts) {
    for (std::uint64_t k = 0; k < 20000; ++k) {
      const Eigen::VectorXd g = model.gradient(u);
      if (stationarity_residual(u, g, budget) <= 1e-10) break;
      u = project_budget_simplex(u + (10.0 / static_cast<double>(k + 1)) * g, budget);
    }
    const double value = model.payoff(u);
    if (value > best_payoff) {
      best_payoff = value;
      best = u;
    }
  }
  return best;
}

}  // namespace opshape

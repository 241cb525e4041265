#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "opshape/dynamics.hpp"

namespace opshape {

/// Euclidean projection onto {x >= 0, sum x <= budget}, budget > 0.
ControlVector project_budget_simplex(const Eigen::VectorXd& v, double budget);

/// Two-time-scale step sizes
///   a(k) = A / ceil((1 + k ln(1 + k)) / denom)
///   b(k) = B / ceil(k / denom),  b(0) = B.
struct StepSchedule {
  double A = 0.6;
  double B = 0.6;
  double denom = 100.0;

  double a(std::uint64_t k) const;
  double b(std::uint64_t k) const;
};

/// A / ceil(n / block), with the n = 0 term equal to A. Used by the
/// stochastic-gradient schemes and for b(k).
struct BlockSchedule {
  double A = 0.6;
  double block = 100.0;

  double operator()(std::uint64_t n) const;
};

/// Finite-horizon evidence for the step-size conditions.
struct ScheduleDiagnostics {
  std::vector<std::uint64_t> checkpoints;
  std::vector<double> sum_a, sum_b, sum_squares, ratio_b_over_a;
  /// First k from which a(k) never increases up to the horizon.
  std::uint64_t a_monotone_from = 0;
};

ScheduleDiagnostics diagnose(const StepSchedule& schedule, std::uint64_t horizon);

/// Per-agent update counters nu(i, n).
class LocalClocks {
 public:
  explicit LocalClocks(std::size_t nodes = 0) : counts_(nodes, 0) {}
  /// Returns the count before this update and increments it.
  std::uint64_t advance(NodeId i) { return counts_[i]++; }
  std::uint64_t count(NodeId i) const { return counts_[i]; }
  const std::vector<std::uint64_t>& counts() const { return counts_; }

 private:
  std::vector<std::uint64_t> counts_;
};

Eigen::VectorXd exact_gradient(const InteractionGraph& graph, const AgentPartition& partition, const ControlVector& u);

/// ||Gamma(u + gamma g) - u||_inf / gamma: zero exactly at a constrained maximizer.
double stationarity_residual(const ControlVector& u, const Eigen::VectorXd& gradient, double budget,
                             double gamma = 1.0);

/// One recorded row of a learning run.
struct TrajectoryPoint {
  std::uint64_t k;
  ControlVector u;
  double payoff;
};

struct Trajectory {
  std::vector<TrajectoryPoint> points;
  const TrajectoryPoint& final() const { return points.back(); }
};

/// Shared knobs of every iterative driver.
struct RunControl {
  /// Empty means the zero control.
  ControlVector u0;
  /// Rows are kept for k = 0, every `record_every` iterations, and the last one.
  std::uint64_t record_every = 1;
  /// When set, receives the wall-clock duration of each iteration in seconds.
  std::vector<double>* iteration_seconds = nullptr;
};

struct GdOptions {
  /// Step gain / (k + 1).
  double gain = 1.0;
  /// Stop once the stationarity residual falls below this (0 disables).
  double tolerance = 0.0;
};

/// u(k+1) = Gamma(u(k) + gain/(k+1) * grad(u(k))).
Trajectory run_exact_gd(const OpinionModel& model, double budget, std::uint64_t n_iters, const GdOptions& options = {},
                        const RunControl& control = {});

/// Reference maximizer of the payoff: run_exact_gd with a large gain until the
/// stationarity residual is at round-off level.
ControlVector reference_optimum(const OpinionModel& model, double budget);

/// (optimum - payoff) / optimum.
inline double relative_gap(double payoff, double optimum) { return (optimum - payoff) / optimum; }

/// Resolves RunControl::u0 against the model (zero when empty), projected onto the budget set.
ControlVector starting_control(const OpinionModel& model, const RunControl& control, double budget);

}  // namespace opshape

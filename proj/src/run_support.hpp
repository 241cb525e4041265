#pragma once

#include <chrono>

#include "opshape/optim.hpp"

namespace opshape::detail {

/// Keeps k = 0, every `record_every`-th iterate and the last one.
class Recorder {
 public:
  Recorder(const RunControl& control, std::uint64_t n_iters)
      : every_(control.record_every == 0 ? 1 : control.record_every), last_(n_iters) {}

  template <typename PayoffFn>
  void record_lazy(std::uint64_t k, const ControlVector& u, PayoffFn&& payoff) {
    if (k == 0 || k == last_ || k % every_ == 0) traj_.points.push_back({k, u, payoff()});
  }
  void record(std::uint64_t k, const ControlVector& u, double payoff) {
    record_lazy(k, u, [payoff] { return payoff; });
  }
  /// Appends k even off-grid (early termination).
  void force(std::uint64_t k, const ControlVector& u, double payoff) {
    if (traj_.points.empty() || traj_.points.back().k != k) traj_.points.push_back({k, u, payoff});
  }
  Trajectory finish() { return std::move(traj_); }

 private:
  std::uint64_t every_;
  std::uint64_t last_;
  Trajectory traj_;
};

class IterationTimer {
 public:
  explicit IterationTimer(const RunControl& control)
      : sink_(control.iteration_seconds), start_(sink_ ? std::chrono::steady_clock::now() : std::chrono::steady_clock::time_point{}) {}
  ~IterationTimer() {
    if (sink_) sink_->push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count());
  }
  IterationTimer(const IterationTimer&) = delete;
  IterationTimer& operator=(const IterationTimer&) = delete;

 private:
  std::vector<double>* sink_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace opshape::detail

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "opshape/response.hpp"
#include "opshape/rng.hpp"

namespace opshape {

using NodeId = std::size_t;

struct Edge {
  NodeId src;
  NodeId dst;
  double weight;
};

/// Weighted graph together with its row-stochastic poll matrix P.
///
/// P is held densely (desk-scale networks) and also as per-row cumulative
/// tables over the positive entries, which is what samplers use.
class InteractionGraph {
 public:
  /// Builds P by row-normalizing the adjacency assembled from `edges`.
  /// When `directed` is false each edge also contributes its reverse.
  /// Throws DanglingNode for a node without outgoing weight.
  InteractionGraph(std::size_t node_count, std::vector<Edge> edges, bool directed,
                   std::vector<std::int64_t> labels = {});

  std::size_t node_count() const { return node_count_; }
  /// Edges as listed in the source, before mirroring.
  const std::vector<Edge>& edges() const { return edges_; }
  std::size_t edge_count() const { return edges_.size(); }
  bool directed() const { return directed_; }
  /// Original identifier of each node (the name map).
  const std::vector<std::int64_t>& labels() const { return labels_; }

  const Eigen::MatrixXd& poll_matrix() const { return poll_; }
  double p(NodeId i, NodeId j) const { return poll_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)); }

  std::span<const NodeId> neighbors(NodeId i) const {
    return {targets_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }
  std::span<const double> cumulative(NodeId i) const {
    return {cumulative_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }

  /// One poll target drawn from row i of P.
  NodeId sample_poll(NodeId i, Rng& rng) const { return neighbors(i)[rng.categorical(cumulative(i))]; }

 private:
  std::size_t node_count_;
  std::vector<Edge> edges_;
  bool directed_;
  std::vector<std::int64_t> labels_;
  Eigen::MatrixXd poll_;
  std::vector<std::size_t> offsets_;
  std::vector<NodeId> targets_;
  std::vector<double> cumulative_;
};

struct EdgeListOptions {
  /// nullopt: a third column is read as a weight when present.
  std::optional<bool> weighted;
  bool directed = false;
};

/// Reads `src dst [weight]` lines; `#` starts a comment. Node identifiers are
/// arbitrary integers, renumbered to 0..I-1 in increasing order, so 1-based
/// files map to 0-based nodes.
InteractionGraph load_edge_list(const std::filesystem::path& path, const EdgeListOptions& options = {});
InteractionGraph parse_edge_list(std::istream& in, const EdgeListOptions& options = {});

/// Divides each row by its sum. Throws DanglingNode on a zero-sum row.
Eigen::MatrixXd row_normalize(const Eigen::MatrixXd& adjacency);

enum class AgentClass : std::uint8_t { Controlled, Uncontrolled, Stubborn };

/// Split of the agents into controlled (S), uncontrolled (S1) and stubborn (S0).
///
/// `controlled()` fixes the order of control coordinates: u[k] acts on node
/// controlled()[k].
class AgentPartition {
 public:
  /// Validates disjointness, coverage, alpha in (0,1) on S and h in [0,1] on S0.
  /// `alpha` and `h` are indexed by node. Entries of `h` outside S0 are kept
  /// (the general model reads them as constant rewards) but must lie in [0,1].
  AgentPartition(std::size_t node_count, std::vector<NodeId> controlled, std::vector<NodeId> uncontrolled,
                 std::vector<NodeId> stubborn, std::vector<double> alpha, std::vector<double> h,
                 std::vector<ResponseCurve> rewards);

  std::size_t node_count() const { return cls_.size(); }
  std::size_t control_count() const { return controlled_.size(); }

  AgentClass cls(NodeId i) const { return cls_[i]; }
  bool is_stubborn(NodeId i) const { return cls_[i] == AgentClass::Stubborn; }
  bool is_controlled(NodeId i) const { return cls_[i] == AgentClass::Controlled; }

  const std::vector<NodeId>& controlled() const { return controlled_; }
  const std::vector<NodeId>& uncontrolled() const { return uncontrolled_; }
  const std::vector<NodeId>& stubborn() const { return stubborn_; }

  /// Index of node i among the controls, or -1.
  std::ptrdiff_t control_index(NodeId i) const { return control_index_[i]; }

  double alpha(NodeId i) const { return alpha_[i]; }
  const std::vector<double>& alphas() const { return alpha_; }
  double h(NodeId i) const { return h_[i]; }
  const std::vector<double>& hs() const { return h_; }

  /// Reward curve of control coordinate k.
  const ResponseCurve& reward(std::size_t k) const { return rewards_[k]; }
  const std::vector<ResponseCurve>& rewards() const { return rewards_; }

 private:
  std::vector<AgentClass> cls_;
  std::vector<NodeId> controlled_, uncontrolled_, stubborn_;
  std::vector<std::ptrdiff_t> control_index_;
  std::vector<double> alpha_;
  std::vector<double> h_;
  std::vector<ResponseCurve> rewards_;
};

struct PartitionSizes {
  std::size_t controlled;
  std::size_t uncontrolled;
  std::size_t stubborn;
};

/// Uniformly random class assignment. alpha = alpha_value on S, 0 elsewhere;
/// h(i) ~ U[0,1] i.i.d. for every node; rewards default to u/(u+0.1).
/// The partition is checked for feasibility before returning (Infeasible).
AgentPartition random_partition(const InteractionGraph& graph, PartitionSizes sizes, double alpha_value,
                                std::uint64_t seed, ResponseCurve reward = ResponseCurve::saturating(0.1));

/// a_ij = (1 - 1{i in S0})(1 - 1{i in S} alpha_i) p_ij.
Eigen::MatrixXd substochastic_matrix(const InteractionGraph& graph, const AgentPartition& partition);

/// Nodes that cannot reach a leaking row (stubborn, or controlled with alpha > 0)
/// through positive entries of A. Empty iff (Id - A) is invertible.
std::vector<NodeId> non_leaking_nodes(const InteractionGraph& graph, const AgentPartition& partition);

/// Throws Infeasible naming a non-leaking node, if any.
void require_feasible(const InteractionGraph& graph, const AgentPartition& partition);

struct ActivationModel {
  enum class Mode { Synchronous, Asynchronous };
  Mode mode = Mode::Synchronous;
  /// Per-node activation probability (asynchronous mode).
  std::vector<double> q;

  static ActivationModel synchronous() { return {}; }
  static ActivationModel asynchronous(std::vector<double> q) { return {Mode::Asynchronous, std::move(q)}; }
  static ActivationModel asynchronous(std::size_t nodes, double q) {
    return {Mode::Asynchronous, std::vector<double>(nodes, q)};
  }

  /// Throws ConfigError unless q_i in (0,1] for every non-stubborn agent.
  void validate(const AgentPartition& partition) const;
};

/// Non-stubborn agents activated this tick, in increasing node order.
std::vector<NodeId> draw_activated(const AgentPartition& partition, const ActivationModel& activation, Rng& rng);

}  // namespace opshape

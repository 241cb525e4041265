#include "opshape/network.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "opshape/errors.hpp"

namespace opshape {

namespace {

std::string node_name(const std::vector<std::int64_t>& labels, NodeId i) {
  if (i < labels.size()) return std::to_string(labels[i]) + " (index " + std::to_string(i) + ")";
  return std::to_string(i);
}

template <typename T>
bool parse_number(std::string_view token, T& out) {
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace

Eigen::MatrixXd row_normalize(const Eigen::MatrixXd& adjacency) {
  Eigen::MatrixXd out = adjacency;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double sum = out.row(i).sum();
    if (!(sum > 0.0))
      throw DanglingNode("row " + std::to_string(i) + " has zero total weight", static_cast<std::size_t>(i));
    out.row(i) /= sum;
  }
  return out;
}

InteractionGraph::InteractionGraph(std::size_t node_count, std::vector<Edge> edges, bool directed,
                                   std::vector<std::int64_t> labels)
    : node_count_(node_count), edges_(std::move(edges)), directed_(directed), labels_(std::move(labels)) {
  if (node_count_ == 0) throw Error("graph has no nodes");
  if (labels_.empty()) {
    labels_.resize(node_count_);
    for (std::size_t i = 0; i < node_count_; ++i) labels_[i] = static_cast<std::int64_t>(i);
  }
  const auto n = static_cast<Eigen::Index>(node_count_);
  Eigen::MatrixXd adjacency = Eigen::MatrixXd::Zero(n, n);
  for (const Edge& e : edges_) {
    if (e.src >= node_count_ || e.dst >= node_count_) throw Error("edge endpoint out of range");
    if (!(e.weight >= 0.0)) throw Error("negative edge weight");
    adjacency(static_cast<Eigen::Index>(e.src), static_cast<Eigen::Index>(e.dst)) += e.weight;
    if (!directed_ && e.src != e.dst)
      adjacency(static_cast<Eigen::Index>(e.dst), static_cast<Eigen::Index>(e.src)) += e.weight;
  }
  try {
    poll_ = row_normalize(adjacency);
  } catch (const DanglingNode& d) {
    throw DanglingNode("node " + node_name(labels_, d.node()) + " has no outgoing edge", d.node());
  }

  offsets_.assign(node_count_ + 1, 0);
  for (std::size_t i = 0; i < node_count_; ++i) {
    double running = 0.0;
    for (std::size_t j = 0; j < node_count_; ++j) {
      const double pij = p(i, j);
      if (pij > 0.0) {
        running += pij;
        targets_.push_back(j);
        cumulative_.push_back(running);
      }
    }
    offsets_[i + 1] = targets_.size();
  }
}

InteractionGraph parse_edge_list(std::istream& in, const EdgeListOptions& options) {
  struct RawEdge {
    std::int64_t src, dst;
    double weight;
  };
  std::vector<RawEdge> raw;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::vector<std::string> tokens;
    for (std::string t; fields >> t;) tokens.push_back(t);
    if (tokens.empty()) continue;
    if (tokens.size() < 2 || tokens.size() > 3)
      throw ParseError("line " + std::to_string(line_no) + ": expected `src dst [weight]`", line_no);
    RawEdge e{0, 0, 1.0};
    if (!parse_number(tokens[0], e.src) || !parse_number(tokens[1], e.dst))
      throw ParseError("line " + std::to_string(line_no) + ": node ids must be integers", line_no);
    if (options.weighted.value_or(true) && tokens.size() == 3) {
      if (!parse_number(tokens[2], e.weight) || !(e.weight >= 0.0))
        throw ParseError("line " + std::to_string(line_no) + ": weight must be a nonnegative number", line_no);
    } else if (options.weighted.value_or(false) && tokens.size() == 2) {
      throw ParseError("line " + std::to_string(line_no) + ": missing weight column", line_no);
    }
    raw.push_back(e);
  }
  if (raw.empty()) throw ParseError("edge list contains no edges", line_no);

  std::map<std::int64_t, NodeId> index;
  for (const RawEdge& e : raw) {
    index.emplace(e.src, 0);
    index.emplace(e.dst, 0);
  }
  std::vector<std::int64_t> labels;
  labels.reserve(index.size());
  for (auto& [label, id] : index) {
    id = labels.size();
    labels.push_back(label);
  }
  std::vector<Edge> edges;
  edges.reserve(raw.size());
  for (const RawEdge& e : raw) edges.push_back({index.at(e.src), index.at(e.dst), e.weight});
  const std::size_t n = labels.size();
  return InteractionGraph(n, std::move(edges), options.directed, std::move(labels));
}

InteractionGraph load_edge_list(const std::filesystem::path& path, const EdgeListOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open edge list " + path.string());
  return parse_edge_list(in, options);
}

AgentPartition::AgentPartition(std::size_t node_count, std::vector<NodeId> controlled,
                               std::vector<NodeId> uncontrolled, std::vector<NodeId> stubborn,
                               std::vector<double> alpha, std::vector<double> h, std::vector<ResponseCurve> rewards)
    : cls_(node_count, AgentClass::Uncontrolled),
      controlled_(std::move(controlled)),
      uncontrolled_(std::move(uncontrolled)),
      stubborn_(std::move(stubborn)),
      control_index_(node_count, -1),
      alpha_(std::move(alpha)),
      h_(std::move(h)),
      rewards_(std::move(rewards)) {
  if (controlled_.size() + uncontrolled_.size() + stubborn_.size() != node_count)
    throw Error("partition sizes do not sum to the node count");
  if (alpha_.size() != node_count || h_.size() != node_count) throw Error("alpha and h must be indexed by node");
  if (rewards_.size() != controlled_.size()) throw Error("one reward curve per controlled agent is required");

  std::vector<bool> seen(node_count, false);
  auto claim = [&](const std::vector<NodeId>& set, AgentClass c) {
    for (NodeId i : set) {
      if (i >= node_count) throw Error("partition names node " + std::to_string(i) + " outside the graph");
      if (seen[i]) throw Error("node " + std::to_string(i) + " appears in more than one class");
      seen[i] = true;
      cls_[i] = c;
    }
  };
  claim(controlled_, AgentClass::Controlled);
  claim(uncontrolled_, AgentClass::Uncontrolled);
  claim(stubborn_, AgentClass::Stubborn);

  for (std::size_t k = 0; k < controlled_.size(); ++k) control_index_[controlled_[k]] = static_cast<std::ptrdiff_t>(k);
  for (NodeId i = 0; i < node_count; ++i) {
    if (cls_[i] == AgentClass::Controlled) {
      if (!(alpha_[i] > 0.0 && alpha_[i] < 1.0))
        throw Error("alpha of controlled node " + std::to_string(i) + " must lie in (0,1)");
    } else if (alpha_[i] != 0.0) {
      throw Error("alpha must be 0 outside the controlled set (node " + std::to_string(i) + ")");
    }
    if (!(h_[i] >= 0.0 && h_[i] <= 1.0)) throw Error("h(" + std::to_string(i) + ") must lie in [0,1]");
  }
}

Eigen::MatrixXd substochastic_matrix(const InteractionGraph& graph, const AgentPartition& partition) {
  Eigen::MatrixXd a = graph.poll_matrix();
  for (NodeId i = 0; i < graph.node_count(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    if (partition.is_stubborn(i))
      a.row(row).setZero();
    else if (partition.is_controlled(i))
      a.row(row) *= 1.0 - partition.alpha(i);
  }
  return a;
}

std::vector<NodeId> non_leaking_nodes(const InteractionGraph& graph, const AgentPartition& partition) {
  const std::size_t n = graph.node_count();
  // Reverse reachability from rows whose sum in A is below one.
  std::vector<std::vector<NodeId>> incoming(n);
  for (NodeId i = 0; i < n; ++i) {
    if (partition.is_stubborn(i)) continue;
    for (NodeId j : graph.neighbors(i)) incoming[j].push_back(i);
  }
  std::vector<bool> reaches(n, false);
  std::vector<NodeId> frontier;
  for (NodeId i = 0; i < n; ++i) {
    if (partition.is_stubborn(i) || partition.alpha(i) > 0.0) {
      reaches[i] = true;
      frontier.push_back(i);
    }
  }
  while (!frontier.empty()) {
    const NodeId j = frontier.back();
    frontier.pop_back();
    for (NodeId i : incoming[j]) {
      if (!reaches[i]) {
        reaches[i] = true;
        frontier.push_back(i);
      }
    }
  }
  std::vector<NodeId> stuck;
  for (NodeId i = 0; i < n; ++i)
    if (!reaches[i]) stuck.push_back(i);
  return stuck;
}

void require_feasible(const InteractionGraph& graph, const AgentPartition& partition) {
  if (graph.node_count() != partition.node_count()) throw Error("partition and graph sizes differ");
  const auto stuck = non_leaking_nodes(graph, partition);
  if (!stuck.empty())
    throw Infeasible("node " + node_name(graph.labels(), stuck.front()) +
                     " cannot reach a stubborn or influenced agent; (Id - A) is singular");
}

AgentPartition random_partition(const InteractionGraph& graph, PartitionSizes sizes, double alpha_value,
                                std::uint64_t seed, ResponseCurve reward) {
  const std::size_t n = graph.node_count();
  if (sizes.controlled + sizes.uncontrolled + sizes.stubborn != n)
    throw ConfigError("partition sizes " + std::to_string(sizes.controlled) + "+" + std::to_string(sizes.uncontrolled) +
                      "+" + std::to_string(sizes.stubborn) + " do not sum to " + std::to_string(n) + " nodes");
  if (!(alpha_value > 0.0 && alpha_value < 1.0)) throw ConfigError("alpha must lie in (0,1)");

  Rng rng(seed, Stream::Partition);
  std::vector<NodeId> order(n);
  for (NodeId i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(std::span<NodeId>(order));

  auto take = [&](std::size_t from, std::size_t count) {
    std::vector<NodeId> part(order.begin() + static_cast<std::ptrdiff_t>(from),
                             order.begin() + static_cast<std::ptrdiff_t>(from + count));
    std::sort(part.begin(), part.end());
    return part;
  };
  auto s = take(0, sizes.controlled);
  auto s1 = take(sizes.controlled, sizes.uncontrolled);
  auto s0 = take(sizes.controlled + sizes.uncontrolled, sizes.stubborn);

  std::vector<double> alpha(n, 0.0);
  for (NodeId i : s) alpha[i] = alpha_value;
  std::vector<double> h(n);
  for (double& v : h) v = rng.uniform();

  AgentPartition partition(n, std::move(s), std::move(s1), std::move(s0), std::move(alpha), std::move(h),
                           std::vector<ResponseCurve>(sizes.controlled, reward));
  require_feasible(graph, partition);
  return partition;
}

void ActivationModel::validate(const AgentPartition& partition) const {
  if (mode == Mode::Synchronous) return;
  if (q.size() != partition.node_count()) throw ConfigError("activation probabilities must be given per node");
  for (NodeId i = 0; i < q.size(); ++i)
    if (!partition.is_stubborn(i) && !(q[i] > 0.0 && q[i] <= 1.0))
      throw ConfigError("activation probability of node " + std::to_string(i) + " must lie in (0,1]");
}

std::vector<NodeId> draw_activated(const AgentPartition& partition, const ActivationModel& activation, Rng& rng) {
  std::vector<NodeId> active;
  for (NodeId i = 0; i < partition.node_count(); ++i) {
    if (partition.is_stubborn(i)) continue;
    if (activation.mode == ActivationModel::Mode::Synchronous || rng.bernoulli(activation.q[i])) active.push_back(i);
  }
  return active;
}

}  // namespace opshape

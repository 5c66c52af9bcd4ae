#pragma once

#include "simrec/common.hpp"
#include "simrec/rng.hpp"

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace simrec {

using Edge = std::pair<NodeId, NodeId>;

/// Simple graph in compressed adjacency form. Undirected by default; in a
/// directed network neighbors(v) lists the nodes v can pass content to.
class DiffusionNetwork {
 public:
  DiffusionNetwork() = default;

  /// Self-loops and repeated edges are dropped. Undirected graphs treat
  /// (u, v) and (v, u) as the same edge.
  static DiffusionNetwork from_edges(NodeId n, std::vector<Edge> edges, double alpha = 0.0,
                                     bool directed = false);

  NodeId size() const { return static_cast<NodeId>(offsets_.empty() ? 0 : offsets_.size() - 1); }
  std::int64_t num_edges() const {
    return static_cast<std::int64_t>(directed_ ? adjacency_.size() : adjacency_.size() / 2);
  }
  /// Over the final edge set: 2 |E| / n, or the mean out-degree |E| / n when directed.
  double mean_degree() const;
  double alpha() const { return alpha_; }
  bool directed() const { return directed_; }

  std::span<const NodeId> neighbors(NodeId v) const {
    return {adjacency_.data() + offsets_[static_cast<std::size_t>(v)],
            adjacency_.data() + offsets_[static_cast<std::size_t>(v) + 1]};
  }
  std::int64_t degree(NodeId v) const {
    return offsets_[static_cast<std::size_t>(v) + 1] - offsets_[static_cast<std::size_t>(v)];
  }

  /// Sorted; undirected edges are listed once with u < v.
  std::vector<Edge> edges() const;

  /// "u v" per line, sorted, preceded by a "# nodes N alpha A directed D" comment.
  void save(const std::string& path) const;
  /// Reads the save() format; without the comment the node count is max id + 1.
  static DiffusionNetwork load(const std::string& path);

 private:
  std::vector<std::int64_t> offsets_;
  std::vector<NodeId> adjacency_;
  double alpha_ = 0.0;
  bool directed_ = false;
};

/// Configuration-model graph on a power-law degree sequence. The directed
/// variant draws out-degrees from the power law, gives in-degrees by an
/// independent shuffle of the same sequence, and wires out-stubs to in-stubs
/// uniformly.
DiffusionNetwork build_graph(NodeId n, double alpha, RngStream& rng, bool directed = false);

/// beta = r / mean degree, clamped to [0, 1] with a warning.
double beta_for_r(double mean_degree, double r);
inline double beta_for_r(const DiffusionNetwork& graph, double r) {
  return beta_for_r(graph.mean_degree(), r);
}

/// Infection tree of one cascade. nodes[0] is the seed; parent[j] indexes
/// into nodes and is smaller than j (-1 for the seed).
struct DiffusionTree {
  std::vector<NodeId> nodes;
  std::vector<std::int32_t> parent;

  std::size_t size() const { return nodes.size(); }
  NodeId root() const { return nodes.front(); }
};

/// Scratch space reused across cascades on graphs of the same size. Resetting
/// is O(1), so a cascade only touches memory for the nodes it reaches.
class CascadeWorkspace {
 public:
  explicit CascadeWorkspace(NodeId n = 0) : stamp_(static_cast<std::size_t>(n), 0) {}
  void begin(NodeId n);
  bool visited(NodeId v) const { return stamp_[static_cast<std::size_t>(v)] == epoch_; }
  void mark(NodeId v) { stamp_[static_cast<std::size_t>(v)] = epoch_; }

 private:
  std::vector<std::uint32_t> stamp_;
  std::uint32_t epoch_ = 0;
};

/// Generation-synchronous SIR from `seed`. Each newly infected node tries
/// every still-susceptible neighbour once with probability beta; nodes of a
/// generation act in ascending id order, so the lowest-id infector wins.
DiffusionTree simulate_cascade(const DiffusionNetwork& graph, NodeId seed, double beta, RngStream& rng,
                               CascadeWorkspace* workspace = nullptr);

/// Mean shortest-path distance over all unordered node pairs of the tree.
double structural_virality(const DiffusionTree& tree);

struct CascadeRecord {
  std::int64_t trial = 0;
  std::int64_t size = 0;
  double virality = 0.0;
};

struct CascadeStats {
  std::int64_t trials = 0;
  std::int64_t threshold = 100;
  std::int64_t popular = 0;
  double p_popular = 0.0;
  double mean_virality = 0.0;  ///< NaN-free: 0 when nothing was popular
  double sd_virality = 0.0;
  double correlation = 0.0;    ///< size vs virality over popular cascades
  double mean_size = 0.0;
  std::vector<CascadeRecord> popular_cascades;  ///< ascending trial
};

struct CascadeBatchOptions {
  std::int64_t threshold = 100;
  int workers = 1;
};

/// `trials` cascades from uniform seeds, trial j on graph j mod |graphs| with
/// stream rng.fork(j). Results do not depend on the worker count.
CascadeStats run_cascade_batch(std::span<const DiffusionNetwork> graphs, double r, std::int64_t trials,
                               const RngStream& rng, const CascadeBatchOptions& options = {});

}  // namespace simrec

#include "simrec/diffusion.hpp"

#include "simrec/numerics.hpp"
#include "simrec/serialize.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

namespace simrec {

DiffusionNetwork DiffusionNetwork::from_edges(NodeId n, std::vector<Edge> edges, double alpha,
                                              bool directed) {
  if (n < 0) throw ConfigError("from_edges: negative node count");
  for (auto& e : edges) {
    if (e.first < 0 || e.second < 0 || e.first >= n || e.second >= n)
      throw ConfigError("from_edges: node id out of range");
    if (!directed && e.first > e.second) std::swap(e.first, e.second);
  }
  std::erase_if(edges, [](const Edge& e) { return e.first == e.second; });
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  DiffusionNetwork g;
  g.alpha_ = alpha;
  g.directed_ = directed;
  g.offsets_.assign(static_cast<std::size_t>(n) + 1, 0);
  for (const auto& [u, v] : edges) {
    ++g.offsets_[static_cast<std::size_t>(u) + 1];
    if (!directed) ++g.offsets_[static_cast<std::size_t>(v) + 1];
  }
  for (std::size_t j = 1; j < g.offsets_.size(); ++j) g.offsets_[j] += g.offsets_[j - 1];
  g.adjacency_.resize(directed ? edges.size() : 2 * edges.size());
  std::vector<std::int64_t> fill(g.offsets_.begin(), g.offsets_.end() - 1);
  for (const auto& [u, v] : edges) {
    g.adjacency_[static_cast<std::size_t>(fill[static_cast<std::size_t>(u)]++)] = v;
    if (!directed) g.adjacency_[static_cast<std::size_t>(fill[static_cast<std::size_t>(v)]++)] = u;
  }
  // Sort every list so iteration order is canonical.
  for (NodeId v = 0; v < n; ++v)
    std::sort(g.adjacency_.begin() + g.offsets_[static_cast<std::size_t>(v)],
              g.adjacency_.begin() + g.offsets_[static_cast<std::size_t>(v) + 1]);
  return g;
}

double DiffusionNetwork::mean_degree() const {
  if (size() == 0) return 0.0;
  return static_cast<double>(adjacency_.size()) / static_cast<double>(size());
}

std::vector<Edge> DiffusionNetwork::edges() const {
  std::vector<Edge> out;
  out.reserve(static_cast<std::size_t>(num_edges()));
  for (NodeId u = 0; u < size(); ++u)
    for (NodeId v : neighbors(u))
      if (directed_ || u < v) out.emplace_back(u, v);
  return out;
}

void DiffusionNetwork::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  out << "# nodes " << size() << " alpha " << format_double(alpha_) << " directed " << (directed_ ? 1 : 0)
      << '\n';
  for (const auto& [u, v] : edges()) out << u << ' ' << v << '\n';
  if (!out) throw ConfigError("failed writing '" + path + "'");
}

DiffusionNetwork DiffusionNetwork::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::vector<Edge> edges;
  NodeId n = -1;
  double alpha = 0.0;
  int directed = 0;
  NodeId max_id = -1;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    if (line[0] == '#') {
      std::string hash, key;
      fields >> hash;
      while (fields >> key) {
        if (key == "nodes") fields >> n;
        else if (key == "alpha") fields >> alpha;
        else if (key == "directed") fields >> directed;
      }
      continue;
    }
    long long u = 0, v = 0;
    if (!(fields >> u >> v)) throw ConfigError(path + ":" + std::to_string(line_no) + ": expected 'u v'");
    edges.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
    max_id = std::max({max_id, static_cast<NodeId>(u), static_cast<NodeId>(v)});
  }
  if (n < 0) n = max_id + 1;
  return from_edges(n, std::move(edges), alpha, directed != 0);
}

DiffusionNetwork build_graph(NodeId n, double alpha, RngStream& rng, bool directed) {
  if (!(alpha > 1.0)) throw DomainError("build_graph: alpha must be > 1");
  if (n < 100) throw ConfigError("build_graph: need at least 100 nodes");
  const std::vector<std::int64_t> degrees = sample_power_law_degrees(n, alpha, rng);
  std::vector<NodeId> stubs;
  std::int64_t total = 0;
  for (auto d : degrees) total += d;
  stubs.reserve(static_cast<std::size_t>(total));
  for (NodeId v = 0; v < n; ++v)
    for (std::int64_t k = 0; k < degrees[static_cast<std::size_t>(v)]; ++k) stubs.push_back(v);
  // Fisher-Yates with our own bounded draws keeps the wiring platform-independent.
  const auto shuffle = [&rng](auto& v) {
    for (std::size_t j = v.size(); j > 1; --j) std::swap(v[j - 1], v[rng.below(j)]);
  };
  std::vector<Edge> edges;
  if (!directed) {
    shuffle(stubs);
    edges.reserve(stubs.size() / 2);
    for (std::size_t j = 0; j + 1 < stubs.size(); j += 2) edges.emplace_back(stubs[j], stubs[j + 1]);
  } else {
    // stubs holds out-stubs; in-degrees are the same sequence over shuffled nodes.
    std::vector<NodeId> owner(static_cast<std::size_t>(n));
    std::iota(owner.begin(), owner.end(), 0);
    shuffle(owner);
    std::vector<NodeId> in_stubs;
    in_stubs.reserve(stubs.size());
    for (NodeId v = 0; v < n; ++v)
      for (std::int64_t k = 0; k < degrees[static_cast<std::size_t>(v)]; ++k)
        in_stubs.push_back(owner[static_cast<std::size_t>(v)]);
    shuffle(in_stubs);
    edges.reserve(stubs.size());
    for (std::size_t j = 0; j < stubs.size(); ++j) edges.emplace_back(stubs[j], in_stubs[j]);
  }
  return DiffusionNetwork::from_edges(n, std::move(edges), alpha, directed);
}

double beta_for_r(double mean_degree, double r) {
  if (!(mean_degree > 0.0)) throw DomainError("beta_for_r: mean degree must be positive");
  if (!(r > 0.0)) throw DomainError("beta_for_r: r must be positive");
  const double beta = r / mean_degree;
  if (beta > 1.0) {
    warn("beta_for_r: r / mean degree = " + std::to_string(beta) + " exceeds 1, clamped");
    return 1.0;
  }
  return beta;
}

void CascadeWorkspace::begin(NodeId n) {
  if (stamp_.size() != static_cast<std::size_t>(n)) {
    stamp_.assign(static_cast<std::size_t>(n), 0);
    epoch_ = 0;
  }
  if (++epoch_ == 0) {
    std::fill(stamp_.begin(), stamp_.end(), 0);
    epoch_ = 1;
  }
}

DiffusionTree simulate_cascade(const DiffusionNetwork& graph, NodeId seed, double beta, RngStream& rng,
                               CascadeWorkspace* workspace) {
  if (seed < 0 || seed >= graph.size()) throw ConfigError("simulate_cascade: seed out of range");
  if (!(beta >= 0.0 && beta <= 1.0)) throw DomainError("simulate_cascade: beta must lie in [0, 1]");
  CascadeWorkspace local;
  CascadeWorkspace& ws = workspace ? *workspace : local;
  ws.begin(graph.size());

  DiffusionTree tree;
  tree.nodes.push_back(seed);
  tree.parent.push_back(-1);
  ws.mark(seed);

  // Generation as (node, index in tree), sorted by node id.
  std::vector<std::pair<NodeId, std::int32_t>> current{{seed, 0}};
  std::vector<std::pair<NodeId, std::int32_t>> next;
  while (!current.empty()) {
    next.clear();
    for (const auto& [u, index] : current) {
      for (NodeId v : graph.neighbors(u)) {
        if (ws.visited(v)) continue;
        if (!rng.bernoulli(beta)) continue;
        ws.mark(v);
        const auto child = static_cast<std::int32_t>(tree.nodes.size());
        tree.nodes.push_back(v);
        tree.parent.push_back(index);
        next.emplace_back(v, child);
      }
    }
    std::sort(next.begin(), next.end());
    std::swap(current, next);
  }
  return tree;
}

double structural_virality(const DiffusionTree& tree) {
  const std::size_t n = tree.size();
  if (n < 2) throw DomainError("structural_virality: tree needs at least two nodes");
  std::vector<std::int64_t> subtree(n, 1);
  double wiener = 0.0;
  for (std::size_t j = n - 1; j > 0; --j) {
    const auto p = tree.parent[j];
    if (p < 0 || static_cast<std::size_t>(p) >= j)
      throw ConfigError("structural_virality: parents must precede children");
    // The edge above j separates subtree[j] nodes from the rest.
    wiener += static_cast<double>(subtree[j]) * static_cast<double>(static_cast<std::int64_t>(n) - subtree[j]);
    subtree[static_cast<std::size_t>(p)] += subtree[j];
  }
  const double nd = static_cast<double>(n);
  return wiener / (nd * (nd - 1.0) / 2.0);
}

CascadeStats run_cascade_batch(std::span<const DiffusionNetwork> graphs, double r, std::int64_t trials,
                               const RngStream& rng, const CascadeBatchOptions& options) {
  if (graphs.empty()) throw ConfigError("run_cascade_batch: no graphs");
  if (trials < 1) throw ConfigError("run_cascade_batch: trials must be >= 1");
  if (options.threshold < 2) throw ConfigError("run_cascade_batch: threshold must be >= 2");
  std::vector<double> betas;
  for (const auto& g : graphs) betas.push_back(beta_for_r(g, r));

  std::vector<std::int64_t> sizes(static_cast<std::size_t>(trials));
  std::vector<double> virality(static_cast<std::size_t>(trials), 0.0);
  std::atomic<std::int64_t> next{0};
  constexpr std::int64_t kChunk = 256;
  auto worker = [&] {
    CascadeWorkspace ws;
    for (;;) {
      const std::int64_t begin = next.fetch_add(kChunk);
      if (begin >= trials) return;
      const std::int64_t end = std::min(trials, begin + kChunk);
      for (std::int64_t j = begin; j < end; ++j) {
        const std::size_t g = static_cast<std::size_t>(j) % graphs.size();
        RngStream trial_rng = rng.fork(static_cast<std::uint64_t>(j));
        const auto seed = static_cast<NodeId>(trial_rng.below(static_cast<std::uint64_t>(graphs[g].size())));
        const DiffusionTree tree = simulate_cascade(graphs[g], seed, betas[g], trial_rng, &ws);
        sizes[static_cast<std::size_t>(j)] = static_cast<std::int64_t>(tree.size());
        if (static_cast<std::int64_t>(tree.size()) >= options.threshold)
          virality[static_cast<std::size_t>(j)] = structural_virality(tree);
      }
    }
  };
  const int workers = std::max(1, options.workers);
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  CascadeStats stats;
  stats.trials = trials;
  stats.threshold = options.threshold;
  double size_sum = 0.0;
  std::vector<double> pop_size, pop_vir;
  for (std::int64_t j = 0; j < trials; ++j) {
    const auto s = sizes[static_cast<std::size_t>(j)];
    size_sum += static_cast<double>(s);
    if (s < options.threshold) continue;
    const double v = virality[static_cast<std::size_t>(j)];
    stats.popular_cascades.push_back({j, s, v});
    pop_size.push_back(static_cast<double>(s));
    pop_vir.push_back(v);
  }
  stats.popular = static_cast<std::int64_t>(stats.popular_cascades.size());
  stats.p_popular = static_cast<double>(stats.popular) / static_cast<double>(trials);
  stats.mean_size = size_sum / static_cast<double>(trials);
  if (!pop_vir.empty()) {
    double sum = 0.0;
    for (double v : pop_vir) sum += v;
    stats.mean_virality = sum / static_cast<double>(pop_vir.size());
    if (pop_vir.size() > 1) {
      double ss = 0.0;
      for (double v : pop_vir) ss += (v - stats.mean_virality) * (v - stats.mean_virality);
      stats.sd_virality = std::sqrt(ss / static_cast<double>(pop_vir.size() - 1));
      stats.correlation = pearson_correlation(pop_size, pop_vir);
    }
  }
  return stats;
}

}  // namespace simrec

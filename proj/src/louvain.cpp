#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "conflict/graph_cluster.hpp"
#include "conflict/rng.hpp"

namespace conflict {

namespace {

// Compressed adjacency of one aggregation level. Self-loops hold the weight
// of edges already folded inside a node and only enter through `degree`.
struct LevelGraph {
  std::vector<std::size_t> offsets{0};
  std::vector<std::uint32_t> targets;
  std::vector<double> weights;
  std::vector<double> loops;
  std::vector<double> degree;
  double total = 0.0;  // m, each undirected edge once

  std::size_t size() const { return loops.size(); }
};

struct WeightedPair {
  std::uint32_t a;
  std::uint32_t b;
  double w;
};

LevelGraph from_pairs(std::size_t n, std::vector<WeightedPair> pairs, std::vector<double> loops) {
  std::sort(pairs.begin(), pairs.end(), [](const WeightedPair& x, const WeightedPair& y) {
    return x.a != y.a ? x.a < y.a : x.b < y.b;
  });
  // merge parallel edges
  std::vector<WeightedPair> merged;
  for (const auto& p : pairs) {
    if (!merged.empty() && merged.back().a == p.a && merged.back().b == p.b) {
      merged.back().w += p.w;
    } else {
      merged.push_back(p);
    }
  }

  LevelGraph g;
  g.loops = std::move(loops);
  g.degree.assign(n, 0.0);
  std::vector<std::size_t> count(n, 0);
  for (const auto& p : merged) {
    ++count[p.a];
    ++count[p.b];
  }
  g.offsets.resize(n + 1, 0);
  for (std::size_t v = 0; v < n; ++v) g.offsets[v + 1] = g.offsets[v] + count[v];
  g.targets.resize(g.offsets[n]);
  g.weights.resize(g.offsets[n]);
  std::vector<std::size_t> fill(g.offsets.begin(), g.offsets.end() - 1);
  for (const auto& p : merged) {
    g.targets[fill[p.a]] = p.b;
    g.weights[fill[p.a]++] = p.w;
    g.targets[fill[p.b]] = p.a;
    g.weights[fill[p.b]++] = p.w;
    g.degree[p.a] += p.w;
    g.degree[p.b] += p.w;
    g.total += p.w;
  }
  for (std::size_t v = 0; v < n; ++v) {
    g.degree[v] += 2.0 * g.loops[v];
    g.total += g.loops[v];
  }
  return g;
}

LevelGraph from_graph(const SimilarityGraph& graph) {
  std::vector<WeightedPair> pairs;
  pairs.reserve(graph.edges.size());
  for (const Edge& e : graph.edges) pairs.push_back({e.i, e.j, e.weight});
  return from_pairs(graph.node_count(), std::move(pairs),
                    std::vector<double>(graph.node_count(), 0.0));
}

double level_modularity(const LevelGraph& g, const std::vector<std::uint32_t>& comm,
                        std::uint32_t communities, double resolution) {
  std::vector<double> inner(communities, 0.0);
  std::vector<double> total(communities, 0.0);
  for (std::size_t v = 0; v < g.size(); ++v) {
    inner[comm[v]] += g.loops[v];
    total[comm[v]] += g.degree[v];
    for (std::size_t e = g.offsets[v]; e < g.offsets[v + 1]; ++e) {
      if (g.targets[e] > v && comm[g.targets[e]] == comm[v]) inner[comm[v]] += g.weights[e];
    }
  }
  double q = 0.0;
  for (std::uint32_t c = 0; c < communities; ++c) {
    const double share = total[c] / (2.0 * g.total);
    q += inner[c] / g.total - resolution * share * share;
  }
  return q;
}

// Repeated passes of single-node moves in a seeded order until a full pass
// moves nothing. Returns canonical community labels and their count.
std::uint32_t local_moves(const LevelGraph& g, double resolution, Rng& rng,
                          std::vector<std::uint32_t>& comm) {
  const std::size_t n = g.size();
  comm.resize(n);
  std::iota(comm.begin(), comm.end(), 0U);
  std::vector<double> total(g.degree);

  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0U);
  rng.shuffle(order);

  std::vector<double> link(n, -1.0);
  std::vector<std::uint32_t> touched;
  const double two_m = 2.0 * g.total;
  constexpr double kTieSlack = 1e-12;

  for (bool moved = true; moved;) {
    moved = false;
    for (std::uint32_t v : order) {
      const std::uint32_t own = comm[v];
      const double k = g.degree[v];
      for (std::size_t e = g.offsets[v]; e < g.offsets[v + 1]; ++e) {
        const std::uint32_t c = comm[g.targets[e]];
        if (link[c] < 0.0) {
          link[c] = 0.0;
          touched.push_back(c);
        }
        link[c] += g.weights[e];
      }
      total[own] -= k;

      std::uint32_t best = own;
      double best_gain = std::max(link[own], 0.0) - resolution * total[own] * k / two_m;
      for (std::uint32_t c : touched) {
        const double gain = link[c] - resolution * total[c] * k / two_m;
        if (gain > best_gain + kTieSlack) {
          best = c;
          best_gain = gain;
        }
      }
      total[best] += k;
      if (best != own) {
        comm[v] = best;
        moved = true;
      }
      for (std::uint32_t c : touched) link[c] = -1.0;
      touched.clear();
    }
  }

  Partition canonical(comm);
  comm = canonical.labels();
  return canonical.community_count();
}

LevelGraph aggregate(const LevelGraph& g, const std::vector<std::uint32_t>& comm,
                     std::uint32_t communities) {
  std::vector<double> loops(communities, 0.0);
  std::vector<WeightedPair> pairs;
  for (std::size_t v = 0; v < g.size(); ++v) {
    loops[comm[v]] += g.loops[v];
    for (std::size_t e = g.offsets[v]; e < g.offsets[v + 1]; ++e) {
      const std::uint32_t u = g.targets[e];
      if (u <= v) continue;
      const std::uint32_t a = comm[v];
      const std::uint32_t b = comm[u];
      if (a == b) {
        loops[a] += g.weights[e];
      } else {
        pairs.push_back({std::min(a, b), std::max(a, b), g.weights[e]});
      }
    }
  }
  return from_pairs(communities, std::move(pairs), std::move(loops));
}

}  // namespace

Partition louvain(const SimilarityGraph& graph, const LouvainOptions& options) {
  const std::size_t n = graph.node_count();
  if (n == 0) throw std::invalid_argument("louvain needs a non-empty graph");

  std::vector<std::uint32_t> membership(n);
  std::iota(membership.begin(), membership.end(), 0U);

  LevelGraph level = from_graph(graph);
  if (level.total <= 0.0) return Partition(membership);

  Rng rng(options.seed);
  double quality = level_modularity(level, membership, static_cast<std::uint32_t>(n),
                                    options.resolution);
  std::vector<std::uint32_t> comm;
  for (;;) {
    const std::uint32_t communities = local_moves(level, options.resolution, rng, comm);
    if (communities == level.size()) break;
    const double next = level_modularity(level, comm, communities, options.resolution);
    for (auto& m : membership) m = comm[m];
    if (next - quality <= options.min_gain) break;
    quality = next;
    level = aggregate(level, comm, communities);
  }
  return Partition(membership);
}

}  // namespace conflict

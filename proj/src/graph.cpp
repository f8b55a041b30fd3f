#include "conflict/graph_cluster.hpp"

#include <algorithm>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace conflict {

EdgeRanking::EdgeRanking(const SimilarityMatrix& sim) : ids_(sim.ids()) {
  const std::size_t n = sim.size();
  order_.reserve(sim.upper().size());
  std::size_t at = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      order_.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j),
                        sim.upper()[at++]});
    }
  }
  std::sort(order_.begin(), order_.end(), [](const Edge& a, const Edge& b) {
    if (a.weight != b.weight) return a.weight < b.weight;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  });
}

std::size_t EdgeRanking::dropped_at(int cutoff_pct) const {
  if (cutoff_pct < 0 || cutoff_pct >= 100) {
    throw std::domain_error("cutoff percentage must lie in [0, 100), got " +
                            std::to_string(cutoff_pct));
  }
  return static_cast<std::size_t>(static_cast<std::uint64_t>(cutoff_pct) * order_.size() / 100);
}

SimilarityGraph EdgeRanking::graph_at(int cutoff_pct) const {
  const std::size_t drop = dropped_at(cutoff_pct);
  SimilarityGraph g;
  g.node_ids = ids_;
  g.edges.assign(order_.begin() + static_cast<std::ptrdiff_t>(drop), order_.end());
  std::sort(g.edges.begin(), g.edges.end(), [](const Edge& a, const Edge& b) {
    return a.i != b.i ? a.i < b.i : a.j < b.j;
  });
  return g;
}

SimilarityGraph build_pruned_graph(const SimilarityMatrix& sim, int cutoff_pct) {
  if (cutoff_pct < 0 || cutoff_pct >= 100) {
    throw std::domain_error("cutoff percentage must lie in [0, 100), got " +
                            std::to_string(cutoff_pct));
  }
  return EdgeRanking(sim).graph_at(cutoff_pct);
}

Partition::Partition(const std::vector<std::uint32_t>& labels) {
  std::unordered_map<std::uint32_t, std::uint32_t> remap;
  labels_.reserve(labels.size());
  for (std::uint32_t label : labels) {
    auto [it, inserted] = remap.emplace(label, static_cast<std::uint32_t>(remap.size()));
    labels_.push_back(it->second);
  }
  communities_ = static_cast<std::uint32_t>(remap.size());
}

std::vector<std::size_t> Partition::community_sizes() const {
  std::vector<std::size_t> sizes(communities_, 0);
  for (std::uint32_t c : labels_) ++sizes[c];
  return sizes;
}

double modularity(const SimilarityGraph& g, const Partition& p, double resolution) {
  if (p.size() != g.node_count()) {
    throw std::domain_error("partition does not cover the graph");
  }
  double m = 0.0;
  std::vector<double> degree(g.node_count(), 0.0);
  std::vector<double> inner(p.community_count(), 0.0);
  for (const Edge& e : g.edges) {
    m += e.weight;
    degree[e.i] += e.weight;
    degree[e.j] += e.weight;
    if (p[e.i] == p[e.j]) inner[p[e.i]] += e.weight;
  }
  if (m <= 0.0) throw std::domain_error("modularity undefined for zero total edge weight");

  std::vector<double> total(p.community_count(), 0.0);
  for (std::size_t v = 0; v < g.node_count(); ++v) total[p[v]] += degree[v];
  double q = 0.0;
  for (std::size_t c = 0; c < total.size(); ++c) {
    const double share = total[c] / (2.0 * m);
    q += inner[c] / m - resolution * share * share;
  }
  return q;
}

double adjusted_rand_index(const Partition& p, const Partition& q) {
  if (p.size() != q.size()) {
    throw std::domain_error("ARI needs partitions over the same node set");
  }
  auto pairs = [](double x) { return x * (x - 1.0) / 2.0; };

  std::unordered_map<std::uint64_t, std::size_t> cells;
  for (std::size_t v = 0; v < p.size(); ++v) {
    ++cells[static_cast<std::uint64_t>(p[v]) << 32 | q[v]];
  }
  double index = 0.0;
  for (const auto& [key, count] : cells) index += pairs(static_cast<double>(count));
  double row_pairs = 0.0;
  for (std::size_t s : p.community_sizes()) row_pairs += pairs(static_cast<double>(s));
  double col_pairs = 0.0;
  for (std::size_t s : q.community_sizes()) col_pairs += pairs(static_cast<double>(s));

  const double total = pairs(static_cast<double>(p.size()));
  if (total == 0.0) return 1.0;
  const double expected = row_pairs * col_pairs / total;
  const double max_index = (row_pairs + col_pairs) / 2.0;
  // both all-singletons or both one block: identical partitions
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

FilteredPartition drop_small_clusters(const Partition& p, std::size_t min_size) {
  const auto sizes = p.community_sizes();
  std::vector<std::optional<std::uint32_t>> renumber(sizes.size());
  FilteredPartition out;
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    if (sizes[c] >= min_size) renumber[c] = out.community_count++;
  }
  out.labels.reserve(p.size());
  for (std::size_t v = 0; v < p.size(); ++v) {
    out.labels.push_back(renumber[p[v]]);
    if (!renumber[p[v]]) out.removed.push_back(v);
  }
  return out;
}

void write_partition_tsv(std::ostream& out, const std::vector<std::string>& node_ids,
                         const FilteredPartition& p) {
  for (std::size_t v = 0; v < node_ids.size(); ++v) {
    out << node_ids[v] << '\t';
    if (p.labels[v]) {
      out << *p.labels[v];
    } else {
      out << '-';
    }
    out << '\n';
  }
}

LabeledClusters read_partition_tsv(std::istream& in) {
  LabeledClusters clusters;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw std::invalid_argument("partition line " + std::to_string(line_no) + ": missing tab");
    }
    clusters.node_ids.push_back(line.substr(0, tab));
    const std::string label = line.substr(tab + 1);
    if (label == "-") {
      clusters.labels.emplace_back();
      continue;
    }
    try {
      std::size_t used = 0;
      const unsigned long value = std::stoul(label, &used);
      if (used != label.size()) throw std::invalid_argument(label);
      clusters.labels.emplace_back(static_cast<std::uint32_t>(value));
    } catch (const std::logic_error&) {
      throw std::invalid_argument("partition line " + std::to_string(line_no) +
                                  ": bad community '" + label + "'");
    }
  }
  return clusters;
}

}  // namespace conflict

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "conflict/embedding.hpp"

namespace conflict {

struct Edge {
  std::uint32_t i = 0;  // i < j
  std::uint32_t j = 0;
  double weight = 0.0;

  bool operator==(const Edge&) const = default;
};

/// Undirected weighted graph without self-loops, edges sorted by (i, j).
struct SimilarityGraph {
  std::vector<std::string> node_ids;
  std::vector<Edge> edges;

  std::size_t node_count() const { return node_ids.size(); }
};

/// Every pair of a similarity matrix in pruning order: ascending weight,
/// ties broken by ascending (i, j).
class EdgeRanking {
 public:
  explicit EdgeRanking(const SimilarityMatrix& sim);

  std::size_t pair_count() const { return order_.size(); }
  /// Number of lowest-ranked edges a cutoff percentage removes.
  std::size_t dropped_at(int cutoff_pct) const;
  /// Throws std::domain_error unless 0 <= cutoff_pct < 100.
  SimilarityGraph graph_at(int cutoff_pct) const;

 private:
  std::vector<std::string> ids_;
  std::vector<Edge> order_;
};

SimilarityGraph build_pruned_graph(const SimilarityMatrix& sim, int cutoff_pct);

/// Total assignment node -> community, ids contiguous from 0 in order of
/// first appearance.
class Partition {
 public:
  Partition() = default;
  /// Relabels arbitrary labels into canonical form.
  explicit Partition(const std::vector<std::uint32_t>& labels);

  std::size_t size() const { return labels_.size(); }
  std::uint32_t community_count() const { return communities_; }
  std::uint32_t operator[](std::size_t node) const { return labels_[node]; }
  const std::vector<std::uint32_t>& labels() const { return labels_; }
  std::vector<std::size_t> community_sizes() const;

  bool operator==(const Partition&) const = default;

 private:
  std::vector<std::uint32_t> labels_;
  std::uint32_t communities_ = 0;
};

/// Weighted modularity with resolution `resolution` (1 = plain modularity).
/// Throws std::domain_error when the graph has zero total weight or the
/// partition does not cover the graph.
double modularity(const SimilarityGraph& g, const Partition& p, double resolution = 1.0);

struct LouvainOptions {
  std::uint64_t seed = 0;
  double resolution = 1.0;
  double min_gain = 1e-9;
};

/// Two-phase greedy modularity optimisation (local moves, then community
/// aggregation) repeated until a level gains no more than `min_gain`.
Partition louvain(const SimilarityGraph& g, const LouvainOptions& options = {});

/// Permutation-model ARI. Throws std::domain_error on size mismatch.
double adjusted_rand_index(const Partition& p, const Partition& q);

struct SweepRow {
  int cutoff_pct = 0;
  std::uint32_t cluster_count = 0;
  std::optional<double> ari_vs_previous;
};

struct SweepReport {
  std::vector<SweepRow> rows;
  std::vector<Partition> partitions;  // aligned with rows
  int chosen_cutoff = 0;
};

struct SweepOptions {
  std::vector<int> cutoffs{0, 10, 20, 30, 40, 50, 60, 70, 80, 90};
  std::uint64_t seed = 0;  // each cutoff runs with seed + cutoff
  double resolution = 1.0;
  std::optional<int> forced_cutoff;
};

/// Prune-and-cluster at every cutoff; picks the smallest cutoff whose ARI
/// against the previous cutoff is maximal unless a cutoff is forced.
SweepReport stability_sweep(const SimilarityMatrix& sim, const SweepOptions& options = {});

/// TSV: cutoff_pct, cluster_count, ari ("-" on the first row).
void write_sweep_tsv(std::ostream& out, const SweepReport& report);
/// Markdown table laid out with cutoffs as columns.
void write_sweep_markdown(std::ostream& out, const SweepReport& report, const std::string& label);

struct FilteredPartition {
  std::vector<std::optional<std::uint32_t>> labels;  // nullopt: unclustered
  std::vector<std::size_t> removed;                   // node indices
  std::uint32_t community_count = 0;
};

/// Removes communities smaller than `min_size`; survivors keep their
/// relative order and are renumbered from 0.
FilteredPartition drop_small_clusters(const Partition& p, std::size_t min_size = 26);

/// TSV `node_id<TAB>community`; unclustered nodes are written as "-".
void write_partition_tsv(std::ostream& out, const std::vector<std::string>& node_ids,
                         const FilteredPartition& p);

struct LabeledClusters {
  std::vector<std::string> node_ids;
  std::vector<std::optional<std::uint32_t>> labels;
};

LabeledClusters read_partition_tsv(std::istream& in);

}  // namespace conflict

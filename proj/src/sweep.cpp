#include <algorithm>
#include <iomanip>
#include <ostream>
#include <stdexcept>

#include "conflict/graph_cluster.hpp"

namespace conflict {

SweepReport stability_sweep(const SimilarityMatrix& sim, const SweepOptions& options) {
  if (options.cutoffs.empty()) throw std::invalid_argument("sweep needs at least one cutoff");
  for (std::size_t k = 1; k < options.cutoffs.size(); ++k) {
    if (options.cutoffs[k] <= options.cutoffs[k - 1]) {
      throw std::invalid_argument("sweep cutoffs must be strictly increasing");
    }
  }
  if (options.forced_cutoff &&
      std::find(options.cutoffs.begin(), options.cutoffs.end(), *options.forced_cutoff) ==
          options.cutoffs.end()) {
    throw std::invalid_argument("forced cutoff " + std::to_string(*options.forced_cutoff) +
                                " is not among the sweep cutoffs");
  }

  const EdgeRanking ranking(sim);
  SweepReport report;
  for (int cutoff : options.cutoffs) {
    const SimilarityGraph g = ranking.graph_at(cutoff);
    LouvainOptions lo;
    lo.seed = options.seed + static_cast<std::uint64_t>(cutoff);
    lo.resolution = options.resolution;
    Partition p = louvain(g, lo);

    SweepRow row;
    row.cutoff_pct = cutoff;
    row.cluster_count = p.community_count();
    if (!report.partitions.empty()) {
      row.ari_vs_previous = adjusted_rand_index(report.partitions.back(), p);
    }
    report.rows.push_back(row);
    report.partitions.push_back(std::move(p));
  }

  if (options.forced_cutoff) {
    report.chosen_cutoff = *options.forced_cutoff;
  } else {
    report.chosen_cutoff = report.rows.front().cutoff_pct;
    double best = -2.0;
    for (const auto& row : report.rows) {
      if (row.ari_vs_previous && *row.ari_vs_previous > best) {
        best = *row.ari_vs_previous;
        report.chosen_cutoff = row.cutoff_pct;
      }
    }
  }
  return report;
}

void write_sweep_tsv(std::ostream& out, const SweepReport& report) {
  out << "cutoff_pct\tcluster_count\tari\n";
  for (const auto& row : report.rows) {
    out << row.cutoff_pct << '\t' << row.cluster_count << '\t';
    if (row.ari_vs_previous) {
      out << std::fixed << std::setprecision(4) << *row.ari_vs_previous;
    } else {
      out << '-';
    }
    out << '\n';
  }
  out << "# chosen_cutoff=" << report.chosen_cutoff << '\n';
}

void write_sweep_markdown(std::ostream& out, const SweepReport& report,
                          const std::string& label) {
  out << "| Cutoff % |";
  for (const auto& row : report.rows) out << ' ' << row.cutoff_pct << " |";
  out << "\n|---|";
  for (std::size_t k = 0; k < report.rows.size(); ++k) out << "---|";
  out << "\n| Number of " << label << " Clusters |";
  for (const auto& row : report.rows) out << ' ' << row.cluster_count << " |";
  out << "\n| " << label << " ARI |";
  for (const auto& row : report.rows) {
    if (row.ari_vs_previous) {
      out << ' ' << std::fixed << std::setprecision(2) << *row.ari_vs_previous << " |";
    } else {
      out << " - |";
    }
  }
  out << '\n';
}

}  // namespace conflict

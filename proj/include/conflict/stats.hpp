#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "conflict/annotation.hpp"

namespace conflict {

/// Binary confusion counts with YTA (1) as the positive class.
struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
  void add(bool gold, bool predicted);
  bool operator==(const ConfusionCounts&) const = default;
};

double accuracy(const ConfusionCounts& c);
/// F1 pooled over both classes from global counts.
double micro_f1(const ConfusionCounts& c);
/// Unweighted mean of the YTA and NTA F1; a class with no gold and no
/// predicted examples contributes 0.
double macro_f1(const ConfusionCounts& c);

struct MetricsReport {
  std::string group;  // "All", a cluster name or an aspect value
  ConfusionCounts counts;
  double accuracy = 0.0;
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  // Each post weighted 1 / (its verdict count); present when post ids are given.
  std::optional<double> post_weighted_accuracy;
  std::optional<double> post_weighted_macro_f1;
};

struct Evaluation {
  std::vector<MetricsReport> reports;  // "All" first, then groups sorted by name
  std::vector<std::string> warnings;
};

/// Predictions and golds are 0/1 per verdict; `groups` names each verdict's
/// group. Groups listed in `expected_groups` without members are omitted with
/// a warning. Throws std::invalid_argument on misaligned inputs.
Evaluation evaluate(std::span<const unsigned char> predictions,
                    std::span<const unsigned char> golds,
                    std::span<const std::string> groups,
                    std::span<const std::string> expected_groups = {},
                    std::span<const std::string> post_ids = {});

/// TSV with one row per report.
void write_metrics_tsv(std::ostream& out, const std::vector<MetricsReport>& reports);
/// Rows per group with F1% / Acc% columns, one decimal.
void write_metrics_markdown(std::ostream& out, const std::vector<MetricsReport>& reports,
                            const std::string& title);

struct PermutationOptions {
  std::uint64_t resamples = 100000;
  std::uint64_t seed = 0;
  std::uint64_t exact_limit = 200000;  // enumerate when C(n_a + n_b, n_a) <= this
};

struct PermutationResult {
  double p_value = 1.0;
  bool exact = false;
  double observed_difference = 0.0;  // mean(a) - mean(b)
};

/// One-sided unpaired permutation test of mean(a) > mean(b) on 0/1 vectors.
/// Monte-Carlo p-values are (1 + hits) / (1 + resamples).
PermutationResult permutation_test(std::span<const unsigned char> a,
                                   std::span<const unsigned char> b,
                                   const PermutationOptions& options = {});

/// The same one-sided test on real-valued units, e.g. per-post accuracy.
/// Exact mode enumerates every assignment of units to group a.
PermutationResult permutation_test_means(std::span<const double> a, std::span<const double> b,
                                         const PermutationOptions& options = {});

/// Rows (NTA, YTA) by columns (aspect value 1, aspect value 2).
struct ContingencyTable2x2 {
  std::array<std::array<std::uint64_t, 2>, 2> counts{};

  std::uint64_t row(std::size_t r) const { return counts[r][0] + counts[r][1]; }
  std::uint64_t col(std::size_t c) const { return counts[0][c] + counts[1][c]; }
  /// A row or column with no observations.
  bool degenerate() const { return row(0) == 0 || row(1) == 0 || col(0) == 0 || col(1) == 0; }
};

/// Probabilities of every table sharing the margins of `t`, ordered by the
/// top-left cell from its minimum feasible value.
std::vector<double> hypergeometric_tables(const ContingencyTable2x2& t);

/// Two-sided Fisher exact test (minimum-likelihood rule). Degenerate tables
/// return 1.
double fisher_exact(const ContingencyTable2x2& t);

struct VerdictCounts {
  std::size_t yta = 0;
  std::size_t nta = 0;
};

/// |yta1/nta1 - yta2/nta2| * 100; nullopt when either group has no NTA.
std::optional<double> verdict_ratio_difference(const VerdictCounts& first,
                                               const VerdictCounts& second);

/// One scored verdict of an annotated post.
struct ScoredVerdict {
  std::string post_id;
  unsigned char gold = 0;
  unsigned char predicted = 0;
};

struct DyadResult {
  Aspect aspect = Aspect::Disagreement;
  std::array<MetricsReport, 2> values;      // per merged value, in merged_labels order
  std::array<VerdictCounts, 2> verdicts{};  // gold verdict counts per value
  std::optional<PermutationResult> permutation;       // verdicts as units
  std::optional<PermutationResult> post_permutation;  // per-post accuracy as units
  std::size_t better_value = 0;  // value tested as the easier one
  std::optional<double> fisher_p;
  std::optional<double> ratio_difference_pct;
  std::vector<std::string> warnings;
};

/// Splits verdicts by each aspect's gold value (tied or unlabelled posts are
/// left out) and compares the two values: accuracy-based permutation test
/// with the higher-accuracy value as the alternative (once over verdicts and
/// once over per-post accuracies), Fisher's test on
/// verdict counts and the YTA/NTA ratio difference.
std::vector<DyadResult> dyad_analysis(const std::vector<ScoredVerdict>& verdicts,
                                      const std::vector<GoldLabels>& gold,
                                      const PermutationOptions& options = {});

void write_dyad_markdown(std::ostream& out, const std::vector<DyadResult>& dyads);
void write_dyad_tsv(std::ostream& out, const std::vector<DyadResult>& dyads);

}  // namespace conflict

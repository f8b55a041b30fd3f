#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "conflict/corpus.hpp"
#include "conflict/embedding.hpp"

namespace conflict {

/// One verdict as classifier input. `embedding` views a row of the
/// EmbeddingMatrix passed to build_examples, which must outlive it.
struct TrainingExample {
  std::string verdict_id;
  std::string post_id;
  std::string input_text;  // situation + " " + scrubbed comment
  std::span<const float> embedding;
  unsigned char label = 0;  // YTA = 1, NTA = 0
};

struct MissingEmbeddingError : std::runtime_error {
  explicit MissingEmbeddingError(std::vector<std::string> missing_ids);
  std::vector<std::string> ids;
};

/// Classifier input: the situation and the scrubbed comment joined by a
/// space, with verdict phrases removed from the situation as well.
std::string verdict_input_text(std::string_view situation, std::string_view scrubbed_comment,
                               const VerdictLexicon& lexicon);

/// One example per verdict, in verdict order. Throws MissingEmbeddingError
/// listing every verdict id without a row, and std::logic_error if a
/// lexicon phrase survives in an input text.
std::vector<TrainingExample> build_examples(const std::vector<Post>& posts,
                                            const std::vector<VerdictRecord>& verdicts,
                                            const EmbeddingMatrix& embeddings,
                                            const VerdictLexicon& lexicon);

enum class Split { Train, Validation, Test };
enum class StratifyBy { FullTextCluster, SituationCluster };

std::string_view to_string(Split s);
std::string_view to_string(StratifyBy s);

struct SplitRatios {
  unsigned train = 70;
  unsigned validation = 20;
  unsigned test = 10;  // percentages, must sum to 100
};

/// Post-level split; every verdict of a post follows its post.
struct SplitSpec {
  StratifyBy stratify_by = StratifyBy::FullTextCluster;
  std::vector<std::string> post_ids;
  std::vector<Split> splits;  // aligned with post_ids
  std::vector<std::string> warnings;

  std::vector<std::string> members(Split s) const;
  std::optional<Split> split_of(const std::string& post_id) const;
};

/// Within each stratum (one per community plus one for unclustered posts)
/// ids are sorted, shuffled with `seed`, and cut at the rounded ratios.
/// Throws std::invalid_argument on misaligned input, duplicate ids or
/// ratios not summing to 100.
SplitSpec stratified_split(std::span<const std::string> post_ids,
                           std::span<const std::optional<std::uint32_t>> clusters,
                           std::uint32_t community_count, StratifyBy stratify_by,
                           const SplitRatios& ratios, std::uint64_t seed);

/// TSV `post_id<TAB>split` with split in {train, val, test}.
void write_split_tsv(std::ostream& out, const SplitSpec& spec);
SplitSpec read_split_tsv(std::istream& in, StratifyBy stratify_by);

inline constexpr double kProbabilityClamp = 1e-7;

struct FocalLoss {
  double loss = 0.0;
  double gradient = 0.0;  // d loss / d z, where p_true = sigmoid(z)
};

/// -alpha (1 - p)^gamma log p with p clamped to [1e-7, 1 - 1e-7]. The
/// gradient is the closed form evaluated at the clamped p.
FocalLoss focal_loss(double p_true, double alpha, double gamma);

struct TrainConfig {
  int epochs = 10;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double focal_gamma = 2.0;
  std::optional<double> focal_alpha;  // YTA weight (NTA gets 1 - alpha); unset: inverse frequency
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

struct ProbeModel {
  std::vector<double> weights;
  double bias = 0.0;

  bool operator==(const ProbeModel&) const = default;
};

/// sigmoid(w . x + b). Throws std::domain_error on a dimension mismatch.
double predict(const ProbeModel& model, std::span<const float> embedding);
inline unsigned char predict_label(const ProbeModel& model, std::span<const float> embedding) {
  return predict(model, embedding) > 0.5 ? 1 : 0;
}

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;  // mean focal loss over the epoch
  double val_macro_f1 = 0.0;
  double val_accuracy = 0.0;
};

struct TrainResult {
  ProbeModel model;  // parameters from the epoch with the best validation macro F1
  int best_epoch = 0;
  std::vector<EpochMetrics> epochs;
  std::vector<std::string> warnings;
};

struct TrainingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Mini-batch Adam on mean focal loss. An empty validation set falls back
/// to scoring the training set. A single-class training set yields zero
/// weights and a bias saturated toward that class.
TrainResult train_probe(const std::vector<TrainingExample>& train,
                        const std::vector<TrainingExample>& validation,
                        const TrainConfig& config);

/// PRB1: "PRB1", u32 dim, dim weights then bias as float64, little-endian.
void write_model(std::ostream& out, const ProbeModel& model);
ProbeModel load_model(std::istream& in);

}  // namespace conflict

#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace conflict {

enum class Aspect { Disagreement, Emotion, Interference, Duration, Manifestation, NumPeople };

inline constexpr std::size_t kAspectCount = 6;
inline constexpr std::array<Aspect, kAspectCount> kAspects{
    Aspect::Disagreement, Aspect::Emotion,       Aspect::Interference,
    Aspect::Duration,     Aspect::Manifestation, Aspect::NumPeople};

/// CSV column name, e.g. "num_people".
std::string_view column_name(Aspect a);
/// Display name, e.g. "Num. People".
std::string_view display_name(Aspect a);

/// Union of raw and merged label spellings across all aspects.
enum class Label {
  Mild, Strong, Intense,     // disagreement, emotion
  None, Somewhat, Strongly,  // interference (raw)
  Once, Longer,              // duration
  Manifest, Perceived,       // manifestation
  One, Multiple              // number of people
};

std::string_view to_string(Label l);
std::optional<Label> parse_label(std::string_view text);

std::span<const Label> raw_labels(Aspect a);
/// The two merged values; index 0 maps to 0 in binary vectors.
std::array<Label, 2> merged_labels(Aspect a);
bool is_three_way(Aspect a);

/// Collapses a raw label to its binary value. Already-merged labels map to
/// themselves. Throws std::domain_error for labels foreign to the aspect.
Label merge_label(Aspect a, Label raw);
/// Position of a merged label within merged_labels(a).
std::size_t merged_index(Aspect a, Label merged);

struct AnnotationRecord {
  std::string post_id;
  std::string annotator_id;
  std::array<Label, kAspectCount> labels{};
  bool attention_check_1_pass = true;
  bool attention_check_2_pass = true;

  bool passed_checks() const { return attention_check_1_pass && attention_check_2_pass; }
  Label label(Aspect a) const { return labels[static_cast<std::size_t>(a)]; }
};

struct AnnotationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Header: post_id,annotator_id,disagreement,emotion,interference,duration,
/// manifestation,num_people,attn1,attn2.
std::vector<AnnotationRecord> read_annotations_csv(std::istream& in);
void write_annotations_csv(std::ostream& out, const std::vector<AnnotationRecord>& records);

/// Binary MCC of `b` against `a`; 0 when any confusion marginal is empty.
/// Throws std::domain_error on a length mismatch or empty input.
double matthews_correlation(std::span<const unsigned char> a, std::span<const unsigned char> b);

struct AspectAgreement {
  Aspect aspect = Aspect::Disagreement;
  double raw_mcc = 0.0;     // macro one-vs-rest for three-way aspects
  double merged_mcc = 0.0;  // binary MCC on merged labels
};

struct AgreementReport {
  std::array<AspectAgreement, kAspectCount> aspects{};
  std::size_t post_count = 0;
  std::vector<std::string> warnings;
};

/// Agreement over posts carrying exactly two records that pass both
/// attention checks; other posts are skipped with a warning.
AgreementReport agreement_report(const std::vector<AnnotationRecord>& records);

struct LabelShare {
  Label label = Label::Mild;
  std::size_t count = 0;
  double percent = 0.0;
};

struct AspectDistribution {
  Aspect aspect = Aspect::Disagreement;
  std::array<LabelShare, 2> shares{};
  std::size_t total = 0;
};

using Distribution = std::array<AspectDistribution, kAspectCount>;

/// Per-aspect counts of each raw label over records passing both checks.
std::array<std::map<Label, std::size_t>, kAspectCount> raw_label_counts(
    const std::vector<AnnotationRecord>& records);

/// Folds raw counts into merged counts.
std::array<std::array<std::size_t, 2>, kAspectCount> merge_counts(
    const std::array<std::map<Label, std::size_t>, kAspectCount>& raw);

/// Counts merged labels directly, record by record.
std::array<std::array<std::size_t, 2>, kAspectCount> merged_label_counts(
    const std::vector<AnnotationRecord>& records);

struct GoldLabels {
  std::string post_id;
  std::array<std::optional<Label>, kAspectCount> labels{};  // nullopt: tied vote
  std::size_t annotators = 0;

  const std::optional<Label>& label(Aspect a) const {
    return labels[static_cast<std::size_t>(a)];
  }
};

Distribution label_distribution(const std::vector<AnnotationRecord>& records);
/// Tied aspects are left out of that aspect's counts.
Distribution label_distribution(const std::vector<GoldLabels>& gold);

struct Consolidation {
  std::vector<GoldLabels> gold;  // posts in first-appearance order
  std::vector<std::string> warnings;
};

/// Majority vote per aspect over merged labels of records passing both checks.
Consolidation consolidate(const std::vector<AnnotationRecord>& records);

/// TSV with one column per aspect; tied aspects are written as "TIE".
void write_gold_tsv(std::ostream& out, const std::vector<GoldLabels>& gold);
std::vector<GoldLabels> read_gold_tsv(std::istream& in);

}  // namespace conflict

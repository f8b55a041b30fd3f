#include "conflict/annotation.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <unordered_map>

namespace conflict {

namespace {

constexpr std::array<Label, 3> kStrength{Label::Mild, Label::Strong, Label::Intense};
constexpr std::array<Label, 3> kInterference{Label::None, Label::Somewhat, Label::Strongly};
constexpr std::array<Label, 2> kDuration{Label::Once, Label::Longer};
constexpr std::array<Label, 2> kManifestation{Label::Manifest, Label::Perceived};
constexpr std::array<Label, 2> kPeople{Label::One, Label::Multiple};

constexpr std::array<std::pair<Label, std::string_view>, 12> kLabelNames{{
    {Label::Mild, "Mild"},
    {Label::Strong, "Strong"},
    {Label::Intense, "Intense"},
    {Label::None, "None"},
    {Label::Somewhat, "Somewhat"},
    {Label::Strongly, "Strongly"},
    {Label::Once, "Once"},
    {Label::Longer, "Longer"},
    {Label::Manifest, "Manifest"},
    {Label::Perceived, "Perceived"},
    {Label::One, "One"},
    {Label::Multiple, "Multiple"},
}};

std::size_t idx(Aspect a) { return static_cast<std::size_t>(a); }

}  // namespace

std::string_view column_name(Aspect a) {
  constexpr std::array<std::string_view, kAspectCount> names{
      "disagreement", "emotion", "interference", "duration", "manifestation", "num_people"};
  return names[idx(a)];
}

std::string_view display_name(Aspect a) {
  constexpr std::array<std::string_view, kAspectCount> names{
      "Disagreement", "Emotion", "Interference", "Duration", "Manifestation", "Num. People"};
  return names[idx(a)];
}

std::string_view to_string(Label l) {
  for (const auto& [label, name] : kLabelNames) {
    if (label == l) return name;
  }
  return "?";
}

std::optional<Label> parse_label(std::string_view text) {
  for (const auto& [label, name] : kLabelNames) {
    if (name == text) return label;
  }
  return std::nullopt;
}

std::span<const Label> raw_labels(Aspect a) {
  switch (a) {
    case Aspect::Disagreement:
    case Aspect::Emotion:
      return kStrength;
    case Aspect::Interference:
      return kInterference;
    case Aspect::Duration:
      return kDuration;
    case Aspect::Manifestation:
      return kManifestation;
    case Aspect::NumPeople:
      return kPeople;
  }
  return {};
}

std::array<Label, 2> merged_labels(Aspect a) {
  switch (a) {
    case Aspect::Disagreement:
    case Aspect::Emotion:
    case Aspect::Interference:
      return {Label::Mild, Label::Strong};
    case Aspect::Duration:
      return kDuration;
    case Aspect::Manifestation:
      return kManifestation;
    case Aspect::NumPeople:
      return kPeople;
  }
  return {};
}

bool is_three_way(Aspect a) { return raw_labels(a).size() == 3; }

Label merge_label(Aspect a, Label raw) {
  const auto merged = merged_labels(a);
  if (std::find(merged.begin(), merged.end(), raw) != merged.end()) return raw;
  switch (a) {
    case Aspect::Disagreement:
    case Aspect::Emotion:
      if (raw == Label::Intense) return Label::Strong;
      break;
    case Aspect::Interference:
      if (raw == Label::None || raw == Label::Somewhat) return Label::Mild;
      if (raw == Label::Strongly) return Label::Strong;
      break;
    default:
      break;
  }
  throw std::domain_error("label " + std::string(to_string(raw)) + " is not valid for " +
                          std::string(column_name(a)));
}

std::size_t merged_index(Aspect a, Label merged) {
  const auto values = merged_labels(a);
  if (merged == values[0]) return 0;
  if (merged == values[1]) return 1;
  throw std::domain_error("label " + std::string(to_string(merged)) + " is not a merged " +
                          std::string(column_name(a)) + " value");
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char c = line[k];
    if (quoted) {
      if (c == '"' && k + 1 < line.size() && line[k + 1] == '"') {
        fields.back().push_back('"');
        ++k;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back().push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back().push_back(c);
    }
  }
  for (auto& f : fields) {
    const auto first = f.find_first_not_of(" \t");
    const auto last = f.find_last_not_of(" \t");
    f = first == std::string::npos ? std::string() : f.substr(first, last - first + 1);
  }
  return fields;
}

bool parse_check(const std::string& text, std::size_t line_no) {
  if (text == "pass") return true;
  if (text == "fail") return false;
  throw AnnotationError("annotations line " + std::to_string(line_no) +
                        ": attention check must be pass|fail, got '" + text + "'");
}

}  // namespace

std::vector<AnnotationRecord> read_annotations_csv(std::istream& in) {
  static const std::vector<std::string> kHeader{
      "post_id", "annotator_id", "disagreement", "emotion", "interference",
      "duration", "manifestation", "num_people", "attn1", "attn2"};

  std::string line;
  if (!std::getline(in, line)) throw AnnotationError("annotations: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (split_csv_line(line) != kHeader) throw AnnotationError("annotations: unexpected header");

  std::vector<AnnotationRecord> records;
  for (std::size_t line_no = 2; std::getline(in, line); ++line_no) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto fields = split_csv_line(line);
    const std::string where = "annotations line " + std::to_string(line_no);
    if (fields.size() != kHeader.size()) {
      throw AnnotationError(where + ": expected " + std::to_string(kHeader.size()) +
                            " fields, got " + std::to_string(fields.size()));
    }
    AnnotationRecord record;
    record.post_id = fields[0];
    record.annotator_id = fields[1];
    if (record.post_id.empty() || record.annotator_id.empty()) {
      throw AnnotationError(where + ": empty post or annotator id");
    }
    for (Aspect a : kAspects) {
      const std::string& text = fields[2 + idx(a)];
      const auto label = parse_label(text);
      const auto legal = raw_labels(a);
      if (!label || std::find(legal.begin(), legal.end(), *label) == legal.end()) {
        throw AnnotationError(where + ": '" + text + "' is not a " +
                              std::string(column_name(a)) + " label");
      }
      record.labels[idx(a)] = *label;
    }
    record.attention_check_1_pass = parse_check(fields[8], line_no);
    record.attention_check_2_pass = parse_check(fields[9], line_no);
    records.push_back(std::move(record));
  }
  return records;
}

void write_annotations_csv(std::ostream& out, const std::vector<AnnotationRecord>& records) {
  out << "post_id,annotator_id,disagreement,emotion,interference,duration,manifestation,"
         "num_people,attn1,attn2\n";
  for (const auto& r : records) {
    out << r.post_id << ',' << r.annotator_id;
    for (Aspect a : kAspects) out << ',' << to_string(r.label(a));
    out << ',' << (r.attention_check_1_pass ? "pass" : "fail") << ','
        << (r.attention_check_2_pass ? "pass" : "fail") << '\n';
  }
}

double matthews_correlation(std::span<const unsigned char> a, std::span<const unsigned char> b) {
  if (a.size() != b.size()) throw std::domain_error("MCC needs equal-length vectors");
  if (a.empty()) throw std::domain_error("MCC needs non-empty vectors");
  double tp = 0, tn = 0, fp = 0, fn = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const bool truth = a[k] != 0;
    const bool pred = b[k] != 0;
    if (truth && pred) {
      ++tp;
    } else if (!truth && !pred) {
      ++tn;
    } else if (pred) {
      ++fp;
    } else {
      ++fn;
    }
  }
  const double denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  if (denom == 0.0) return 0.0;
  return (tp * tn - fp * fn) / std::sqrt(denom);
}

namespace {

// Valid records grouped by post, posts in first-appearance order.
std::vector<std::pair<std::string, std::vector<const AnnotationRecord*>>> group_valid(
    const std::vector<AnnotationRecord>& records, std::vector<std::string>* dropped_posts) {
  std::vector<std::pair<std::string, std::vector<const AnnotationRecord*>>> groups;
  std::unordered_map<std::string, std::size_t> at;
  for (const auto& r : records) {
    auto [it, inserted] = at.emplace(r.post_id, groups.size());
    if (inserted) groups.emplace_back(r.post_id, std::vector<const AnnotationRecord*>{});
    if (r.passed_checks()) groups[it->second].second.push_back(&r);
  }
  if (dropped_posts) {
    for (const auto& [post, members] : groups) {
      if (members.empty()) dropped_posts->push_back(post);
    }
  }
  std::erase_if(groups, [](const auto& g) { return g.second.empty(); });
  return groups;
}

}  // namespace

AgreementReport agreement_report(const std::vector<AnnotationRecord>& records) {
  AgreementReport report;
  std::vector<std::string> dropped;
  const auto groups = group_valid(records, &dropped);
  for (const auto& post : dropped) {
    report.warnings.push_back("post " + post + ": no record passed the attention checks");
  }

  std::vector<std::pair<const AnnotationRecord*, const AnnotationRecord*>> pairs;
  for (const auto& [post, members] : groups) {
    if (members.size() != 2) {
      report.warnings.push_back("post " + post + ": " + std::to_string(members.size()) +
                                " valid annotators, excluded from agreement");
      continue;
    }
    pairs.emplace_back(members[0], members[1]);
  }
  report.post_count = pairs.size();
  if (pairs.empty()) {
    report.warnings.push_back("no doubly annotated posts; agreement not computed");
  }

  for (Aspect a : kAspects) {
    AspectAgreement& out = report.aspects[idx(a)];
    out.aspect = a;
    if (pairs.empty()) continue;

    std::vector<unsigned char> first;
    std::vector<unsigned char> second;
    for (const auto& [x, y] : pairs) {
      first.push_back(static_cast<unsigned char>(merged_index(a, merge_label(a, x->label(a)))));
      second.push_back(static_cast<unsigned char>(merged_index(a, merge_label(a, y->label(a)))));
    }
    out.merged_mcc = matthews_correlation(first, second);

    if (!is_three_way(a)) {
      out.raw_mcc = out.merged_mcc;
      continue;
    }
    double sum = 0.0;
    std::size_t used = 0;
    for (Label label : raw_labels(a)) {
      bool seen = false;
      for (std::size_t k = 0; k < pairs.size(); ++k) {
        first[k] = pairs[k].first->label(a) == label;
        second[k] = pairs[k].second->label(a) == label;
        seen = seen || first[k] || second[k];
      }
      if (!seen) continue;
      sum += matthews_correlation(first, second);
      ++used;
    }
    out.raw_mcc = used ? sum / static_cast<double>(used) : 0.0;
  }
  return report;
}

std::array<std::map<Label, std::size_t>, kAspectCount> raw_label_counts(
    const std::vector<AnnotationRecord>& records) {
  std::array<std::map<Label, std::size_t>, kAspectCount> counts;
  for (const auto& r : records) {
    if (!r.passed_checks()) continue;
    for (Aspect a : kAspects) ++counts[idx(a)][r.label(a)];
  }
  return counts;
}

std::array<std::array<std::size_t, 2>, kAspectCount> merge_counts(
    const std::array<std::map<Label, std::size_t>, kAspectCount>& raw) {
  std::array<std::array<std::size_t, 2>, kAspectCount> merged{};
  for (Aspect a : kAspects) {
    for (const auto& [label, count] : raw[idx(a)]) {
      merged[idx(a)][merged_index(a, merge_label(a, label))] += count;
    }
  }
  return merged;
}

std::array<std::array<std::size_t, 2>, kAspectCount> merged_label_counts(
    const std::vector<AnnotationRecord>& records) {
  std::array<std::array<std::size_t, 2>, kAspectCount> merged{};
  for (const auto& r : records) {
    if (!r.passed_checks()) continue;
    for (Aspect a : kAspects) ++merged[idx(a)][merged_index(a, merge_label(a, r.label(a)))];
  }
  return merged;
}

namespace {

Distribution to_distribution(const std::array<std::array<std::size_t, 2>, kAspectCount>& counts) {
  Distribution dist{};
  for (Aspect a : kAspects) {
    auto& d = dist[idx(a)];
    d.aspect = a;
    const auto values = merged_labels(a);
    d.total = counts[idx(a)][0] + counts[idx(a)][1];
    for (std::size_t k = 0; k < 2; ++k) {
      d.shares[k].label = values[k];
      d.shares[k].count = counts[idx(a)][k];
      d.shares[k].percent =
          d.total ? 100.0 * static_cast<double>(counts[idx(a)][k]) / static_cast<double>(d.total)
                  : 0.0;
    }
  }
  return dist;
}

}  // namespace

Distribution label_distribution(const std::vector<AnnotationRecord>& records) {
  const auto counts = merged_label_counts(records);
  if (counts[0][0] + counts[0][1] == 0) {
    throw std::invalid_argument("label distribution needs at least one valid record");
  }
  return to_distribution(counts);
}

Distribution label_distribution(const std::vector<GoldLabels>& gold) {
  if (gold.empty()) throw std::invalid_argument("label distribution needs gold labels");
  std::array<std::array<std::size_t, 2>, kAspectCount> counts{};
  for (const auto& g : gold) {
    for (Aspect a : kAspects) {
      if (const auto& label = g.label(a)) ++counts[idx(a)][merged_index(a, *label)];
    }
  }
  return to_distribution(counts);
}

Consolidation consolidate(const std::vector<AnnotationRecord>& records) {
  Consolidation out;
  std::vector<std::string> dropped;
  const auto groups = group_valid(records, &dropped);
  for (const auto& post : dropped) {
    out.warnings.push_back("post " + post + ": no valid annotation, excluded");
  }
  for (const auto& [post, members] : groups) {
    GoldLabels g;
    g.post_id = post;
    g.annotators = members.size();
    for (Aspect a : kAspects) {
      std::array<std::size_t, 2> votes{};
      for (const auto* r : members) ++votes[merged_index(a, merge_label(a, r->label(a)))];
      if (votes[0] != votes[1]) {
        g.labels[idx(a)] = merged_labels(a)[votes[1] > votes[0] ? 1 : 0];
      }
    }
    out.gold.push_back(std::move(g));
  }
  return out;
}

void write_gold_tsv(std::ostream& out, const std::vector<GoldLabels>& gold) {
  out << "post_id";
  for (Aspect a : kAspects) out << '\t' << column_name(a);
  out << "\tannotators\n";
  for (const auto& g : gold) {
    out << g.post_id;
    for (Aspect a : kAspects) {
      out << '\t' << (g.label(a) ? to_string(*g.label(a)) : std::string_view("TIE"));
    }
    out << '\t' << g.annotators << '\n';
  }
}

std::vector<GoldLabels> read_gold_tsv(std::istream& in) {
  std::vector<GoldLabels> gold;
  std::string line;
  bool header = true;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<std::string> fields(1);
    for (char c : line) {
      if (c == '\t') {
        fields.emplace_back();
      } else {
        fields.back().push_back(c);
      }
    }
    const std::string where = "gold line " + std::to_string(line_no);
    if (fields.size() != kAspectCount + 2) throw AnnotationError(where + ": wrong field count");
    GoldLabels g;
    g.post_id = fields[0];
    for (Aspect a : kAspects) {
      const std::string& text = fields[1 + idx(a)];
      if (text == "TIE") continue;
      const auto label = parse_label(text);
      const auto values = merged_labels(a);
      if (!label || (*label != values[0] && *label != values[1])) {
        throw AnnotationError(where + ": bad " + std::string(column_name(a)) + " value '" +
                              text + "'");
      }
      g.labels[idx(a)] = *label;
    }
    g.annotators = std::stoul(fields[kAspectCount + 1]);
    gold.push_back(std::move(g));
  }
  return gold;
}

}  // namespace conflict

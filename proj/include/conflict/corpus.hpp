#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace conflict {

struct Comment {
  std::string id;
  std::string post_id;
  std::string body;

  bool operator==(const Comment&) const = default;
};

struct Post {
  std::string id;
  std::string title;
  std::string situation;  // title without the verdict-question prefix
  std::string body;
  std::vector<Comment> comments;

  bool operator==(const Post&) const = default;
};

enum class Verdict { Nta = 0, Yta = 1 };

std::string_view to_string(Verdict v);

struct VerdictRecord {
  std::string comment_id;
  std::string post_id;
  Verdict verdict = Verdict::Nta;
  std::string scrubbed_text;

  /// Key used for verdict-level embeddings: "<post_id>/<comment_id>".
  std::string id() const { return post_id + "/" + comment_id; }
};

/// Verdict phrases, matched case-insensitively on whole words.
class VerdictLexicon {
 public:
  /// Throws std::invalid_argument if either list is empty or they overlap.
  VerdictLexicon(std::vector<std::string> yta_patterns,
                 std::vector<std::string> nta_patterns);

  static VerdictLexicon default_lexicon();
  /// JSON object {"yta": [...], "nta": [...]}.
  static VerdictLexicon from_json(std::istream& in);

  const std::vector<std::string>& yta_patterns() const { return yta_; }
  const std::vector<std::string>& nta_patterns() const { return nta_; }

 private:
  std::vector<std::string> yta_;
  std::vector<std::string> nta_;
};

struct SituationOptions {
  std::string prefix = "AITA for";
  bool strip_wibta = false;  // also strip "WIBTA for"
};

std::string extract_situation(std::string_view title,
                              const SituationOptions& options = {});

enum class MatchOutcome { NoVerdict, Yta, Nta, Ambiguous };

struct VerdictMatch {
  MatchOutcome outcome = MatchOutcome::NoVerdict;
  std::string scrubbed_text;
};

/// Classifies a comment body and strips every lexicon phrase from it.
VerdictMatch match_verdict(std::string_view body, const VerdictLexicon& lexicon);

/// True if any YTA or NTA phrase occurs in the text.
bool contains_lexicon_token(std::string_view text, const VerdictLexicon& lexicon);

/// Returns a record only for single-polarity comments.
std::optional<VerdictRecord> extract_verdict(const Comment& comment,
                                             const VerdictLexicon& lexicon);

struct CorpusError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RecordError {
  std::size_t line = 0;  // 1-based
  std::string message;
};

struct ParsedCorpus {
  std::vector<Post> posts;
  std::vector<RecordError> errors;
};

/// Reads one JSON post per line. Malformed lines are collected in `errors`;
/// a duplicate post id throws CorpusError.
ParsedCorpus parse_corpus(std::istream& in, const SituationOptions& options = {});

void write_corpus(std::ostream& out, const std::vector<Post>& posts);

struct CorpusStats {
  std::size_t post_count = 0;
  std::size_t comment_count = 0;
  std::size_t verdict_count = 0;
  std::size_t nta_count = 0;
  std::size_t yta_count = 0;
  std::size_t ambiguous_count = 0;
  std::size_t no_verdict_count = 0;

  bool operator==(const CorpusStats&) const = default;
};

CorpusStats corpus_stats(const std::vector<Post>& posts, const VerdictLexicon& lexicon);

/// key=value lines, one per field.
void write_stats(std::ostream& out, const CorpusStats& stats);

/// All single-polarity verdicts in corpus order.
std::vector<VerdictRecord> mine_verdicts(const std::vector<Post>& posts,
                                         const VerdictLexicon& lexicon);

}  // namespace conflict

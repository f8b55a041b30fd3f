#include "conflict/corpus.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <unordered_set>
#include <utility>

#include "json.hpp"

namespace conflict {

namespace {

constexpr std::size_t npos = std::string_view::npos;

bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

char ascii_lower(unsigned char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c);
}

// U+2000..U+207F (dashes, curly quotes, ellipsis) encode as E2 80 xx / E2 81 xx.
bool general_punctuation_at(std::string_view s, std::size_t pos) {
  return pos + 2 < s.size() && static_cast<unsigned char>(s[pos]) == 0xE2 &&
         (static_cast<unsigned char>(s[pos + 1]) == 0x80 ||
          static_cast<unsigned char>(s[pos + 1]) == 0x81);
}

bool word_byte_at(std::string_view s, std::size_t pos) {
  const auto c = static_cast<unsigned char>(s[pos]);
  if (c < 0x80) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
           c == '_';
  }
  for (std::size_t back = 0; back <= 2 && back <= pos; ++back) {
    if (general_punctuation_at(s, pos - back)) return false;
  }
  return true;
}

bool boundary_before(std::string_view s, std::size_t pos) {
  return pos == 0 || !word_byte_at(s, pos - 1);
}

bool boundary_after(std::string_view s, std::size_t pos) {
  return pos >= s.size() || !word_byte_at(s, pos);
}

// Lowercases, collapses inner whitespace, trims.
std::string normalize_pattern(std::string_view raw) {
  std::string out;
  bool pending_space = false;
  for (unsigned char c : raw) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(ascii_lower(c));
  }
  return out;
}

// End offset of `pattern` matched at `pos`, or npos. A space in the pattern
// matches one or more whitespace bytes; an apostrophe also matches U+2018/U+2019.
std::size_t match_at(std::string_view text, std::size_t pos, std::string_view pattern) {
  std::size_t t = pos;
  for (std::size_t p = 0; p < pattern.size(); ++p) {
    const char pc = pattern[p];
    if (pc == ' ') {
      if (t >= text.size() || !is_space(static_cast<unsigned char>(text[t]))) return npos;
      while (t < text.size() && is_space(static_cast<unsigned char>(text[t]))) ++t;
      continue;
    }
    if (t >= text.size()) return npos;
    if (pc == '\'') {
      if (text[t] == '\'') {
        ++t;
        continue;
      }
      if (t + 2 < text.size() && static_cast<unsigned char>(text[t]) == 0xE2 &&
          static_cast<unsigned char>(text[t + 1]) == 0x80 &&
          (static_cast<unsigned char>(text[t + 2]) == 0x98 ||
           static_cast<unsigned char>(text[t + 2]) == 0x99)) {
        t += 3;
        continue;
      }
      return npos;
    }
    if (ascii_lower(static_cast<unsigned char>(text[t])) != pc) return npos;
    ++t;
  }
  return t;
}

struct Span {
  std::size_t begin;
  std::size_t end;
};

std::vector<Span> find_spans(std::string_view text, const std::vector<std::string>& patterns) {
  std::vector<Span> spans;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (!boundary_before(text, i)) continue;
    for (const auto& pattern : patterns) {
      const std::size_t end = match_at(text, i, pattern);
      if (end != npos && boundary_after(text, end)) spans.push_back({i, end});
    }
  }
  return spans;
}

bool trailing_punct(char c) {
  return c == ',' || c == '.' || c == ';' || c == ':' || c == '!' || c == '?' || c == '-';
}

std::string collapse_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (unsigned char c : text) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(c));
  }
  return out;
}

// Removes one round of matched spans, plus punctuation directly trailing them.
std::string remove_spans(std::string_view text, std::vector<Span> spans) {
  std::sort(spans.begin(), spans.end(),
            [](const Span& a, const Span& b) { return a.begin < b.begin; });
  std::string out;
  std::size_t cursor = 0;
  for (Span span : spans) {
    if (span.end <= cursor) continue;
    span.begin = std::max(span.begin, cursor);
    std::size_t k = span.end;
    while (k < text.size() && is_space(static_cast<unsigned char>(text[k]))) ++k;
    if (k < text.size() && trailing_punct(text[k])) {
      while (k < text.size() && trailing_punct(text[k])) ++k;
      span.end = k;
    }
    out.append(text.substr(cursor, span.begin - cursor));
    out.push_back(' ');
    cursor = span.end;
  }
  out.append(text.substr(cursor));
  return out;
}

std::string_view trim(std::string_view text) {
  while (!text.empty() && is_space(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && is_space(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  return text;
}

std::vector<std::string> normalized(std::vector<std::string> patterns, const char* which) {
  std::vector<std::string> out;
  for (auto& p : patterns) {
    auto n = normalize_pattern(p);
    if (n.empty()) throw std::invalid_argument(std::string("empty ") + which + " pattern");
    if (std::find(out.begin(), out.end(), n) == out.end()) out.push_back(std::move(n));
  }
  if (out.empty()) throw std::invalid_argument(std::string("no ") + which + " patterns");
  return out;
}

}  // namespace

std::string_view to_string(Verdict v) { return v == Verdict::Yta ? "YTA" : "NTA"; }

VerdictLexicon::VerdictLexicon(std::vector<std::string> yta_patterns,
                               std::vector<std::string> nta_patterns)
    : yta_(normalized(std::move(yta_patterns), "YTA")),
      nta_(normalized(std::move(nta_patterns), "NTA")) {
  for (const auto& p : yta_) {
    if (std::find(nta_.begin(), nta_.end(), p) != nta_.end()) {
      throw std::invalid_argument("pattern '" + p + "' listed under both verdicts");
    }
  }
}

VerdictLexicon VerdictLexicon::default_lexicon() {
  return VerdictLexicon({"YTA", "you're the asshole", "you are the asshole"},
                        {"NTA", "not the asshole", "not an asshole"});
}

VerdictLexicon VerdictLexicon::from_json(std::istream& in) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
    return VerdictLexicon(doc.at("yta").get<std::vector<std::string>>(),
                          doc.at("nta").get<std::vector<std::string>>());
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("lexicon: ") + e.what());
  }
}

std::string extract_situation(std::string_view title, const SituationOptions& options) {
  std::vector<std::string> prefixes{normalize_pattern(options.prefix)};
  if (options.strip_wibta) prefixes.push_back("wibta for");

  std::string text(trim(title));
  for (bool stripped = true; stripped;) {
    stripped = false;
    for (const auto& prefix : prefixes) {
      if (prefix.empty()) continue;
      const std::size_t end = match_at(text, 0, prefix);
      if (end != npos && boundary_after(text, end)) {
        text = std::string(trim(std::string_view(text).substr(end)));
        stripped = true;
      }
    }
  }
  return text;
}

VerdictMatch match_verdict(std::string_view body, const VerdictLexicon& lexicon) {
  const bool yta = !find_spans(body, lexicon.yta_patterns()).empty();
  const bool nta = !find_spans(body, lexicon.nta_patterns()).empty();

  VerdictMatch match;
  if (yta && nta) {
    match.outcome = MatchOutcome::Ambiguous;
  } else if (yta) {
    match.outcome = MatchOutcome::Yta;
  } else if (nta) {
    match.outcome = MatchOutcome::Nta;
  }

  // Removing a phrase can splice a new one together, so scrub to a fixed point.
  std::string text(body);
  for (;;) {
    auto spans = find_spans(text, lexicon.yta_patterns());
    auto more = find_spans(text, lexicon.nta_patterns());
    spans.insert(spans.end(), more.begin(), more.end());
    if (spans.empty()) break;
    text = remove_spans(text, std::move(spans));
  }
  match.scrubbed_text = collapse_whitespace(text);
  return match;
}

bool contains_lexicon_token(std::string_view text, const VerdictLexicon& lexicon) {
  return !find_spans(text, lexicon.yta_patterns()).empty() ||
         !find_spans(text, lexicon.nta_patterns()).empty();
}

std::optional<VerdictRecord> extract_verdict(const Comment& comment,
                                             const VerdictLexicon& lexicon) {
  auto match = match_verdict(comment.body, lexicon);
  if (match.outcome != MatchOutcome::Yta && match.outcome != MatchOutcome::Nta) {
    return std::nullopt;
  }
  VerdictRecord record;
  record.comment_id = comment.id;
  record.post_id = comment.post_id;
  record.verdict = match.outcome == MatchOutcome::Yta ? Verdict::Yta : Verdict::Nta;
  record.scrubbed_text = std::move(match.scrubbed_text);
  return record;
}

namespace {

std::string required_string(const nlohmann::json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw std::invalid_argument(std::string("missing field '") + key + "'");
  if (!it->is_string()) {
    throw std::invalid_argument(std::string("field '") + key + "' is not a string");
  }
  return it->get<std::string>();
}

Post parse_post(std::string_view line, const SituationOptions& options) {
  const auto doc = nlohmann::json::parse(line);
  if (!doc.is_object()) throw std::invalid_argument("record is not a JSON object");

  Post post;
  post.id = required_string(doc, "id");
  if (post.id.empty()) throw std::invalid_argument("empty post id");
  post.title = required_string(doc, "title");
  if (trim(post.title).empty()) throw std::invalid_argument("empty title");
  post.body = required_string(doc, "body");
  post.situation = extract_situation(post.title, options);

  auto comments = doc.find("comments");
  if (comments == doc.end() || !comments->is_array()) {
    throw std::invalid_argument("field 'comments' missing or not an array");
  }
  std::unordered_set<std::string> seen;
  for (const auto& c : *comments) {
    if (!c.is_object()) throw std::invalid_argument("comment is not an object");
    Comment comment{required_string(c, "id"), post.id, required_string(c, "body")};
    if (comment.id.empty()) throw std::invalid_argument("empty comment id");
    if (!seen.insert(comment.id).second) {
      throw std::invalid_argument("duplicate comment id '" + comment.id + "'");
    }
    post.comments.push_back(std::move(comment));
  }
  return post;
}

}  // namespace

ParsedCorpus parse_corpus(std::istream& in, const SituationOptions& options) {
  ParsedCorpus corpus;
  std::unordered_set<std::string> ids;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    Post post;
    try {
      post = parse_post(line, options);
    } catch (const nlohmann::json::exception& e) {
      corpus.errors.push_back({line_no, e.what()});
      continue;
    } catch (const std::invalid_argument& e) {
      corpus.errors.push_back({line_no, e.what()});
      continue;
    }
    if (!ids.insert(post.id).second) {
      throw CorpusError("line " + std::to_string(line_no) + ": duplicate post id '" +
                        post.id + "'");
    }
    corpus.posts.push_back(std::move(post));
  }
  return corpus;
}

void write_corpus(std::ostream& out, const std::vector<Post>& posts) {
  for (const auto& post : posts) {
    nlohmann::ordered_json doc;
    doc["id"] = post.id;
    doc["title"] = post.title;
    doc["body"] = post.body;
    doc["comments"] = nlohmann::ordered_json::array();
    for (const auto& c : post.comments) {
      doc["comments"].push_back({{"id", c.id}, {"body", c.body}});
    }
    out << doc.dump() << '\n';
  }
}

CorpusStats corpus_stats(const std::vector<Post>& posts, const VerdictLexicon& lexicon) {
  CorpusStats stats;
  stats.post_count = posts.size();
  for (const auto& post : posts) {
    for (const auto& comment : post.comments) {
      ++stats.comment_count;
      switch (match_verdict(comment.body, lexicon).outcome) {
        case MatchOutcome::Yta:
          ++stats.yta_count;
          break;
        case MatchOutcome::Nta:
          ++stats.nta_count;
          break;
        case MatchOutcome::Ambiguous:
          ++stats.ambiguous_count;
          break;
        case MatchOutcome::NoVerdict:
          ++stats.no_verdict_count;
          break;
      }
    }
  }
  stats.verdict_count = stats.yta_count + stats.nta_count;
  return stats;
}

void write_stats(std::ostream& out, const CorpusStats& stats) {
  out << "post_count=" << stats.post_count << '\n'
      << "comment_count=" << stats.comment_count << '\n'
      << "verdict_count=" << stats.verdict_count << '\n'
      << "nta_count=" << stats.nta_count << '\n'
      << "yta_count=" << stats.yta_count << '\n'
      << "ambiguous_count=" << stats.ambiguous_count << '\n'
      << "no_verdict_count=" << stats.no_verdict_count << '\n';
}

std::vector<VerdictRecord> mine_verdicts(const std::vector<Post>& posts,
                                         const VerdictLexicon& lexicon) {
  std::vector<VerdictRecord> records;
  for (const auto& post : posts) {
    for (const auto& comment : post.comments) {
      if (auto record = extract_verdict(comment, lexicon)) records.push_back(std::move(*record));
    }
  }
  return records;
}

}  // namespace conflict

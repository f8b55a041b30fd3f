#include "conflict/classifier.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "conflict/rng.hpp"
#include "conflict/stats.hpp"

namespace conflict {

namespace {

std::string missing_message(const std::vector<std::string>& ids) {
  constexpr std::size_t kShown = 10;
  std::string msg = std::to_string(ids.size()) + " verdict id(s) have no embedding row:";
  for (std::size_t k = 0; k < ids.size() && k < kShown; ++k) msg += " " + ids[k];
  if (ids.size() > kShown) msg += " ...";
  return msg;
}

}  // namespace

MissingEmbeddingError::MissingEmbeddingError(std::vector<std::string> missing_ids)
    : std::runtime_error(missing_message(missing_ids)), ids(std::move(missing_ids)) {}

std::string verdict_input_text(std::string_view situation, std::string_view scrubbed_comment,
                               const VerdictLexicon& lexicon) {
  // titles can carry verdict phrases too
  std::string text = match_verdict(situation, lexicon).scrubbed_text;
  if (!text.empty() && !scrubbed_comment.empty()) text += ' ';
  text += scrubbed_comment;
  return text;
}

std::vector<TrainingExample> build_examples(const std::vector<Post>& posts,
                                            const std::vector<VerdictRecord>& verdicts,
                                            const EmbeddingMatrix& embeddings,
                                            const VerdictLexicon& lexicon) {
  std::unordered_map<std::string, const Post*> by_id;
  for (const auto& p : posts) by_id.emplace(p.id, &p);

  std::vector<std::string> missing;
  std::vector<TrainingExample> out;
  out.reserve(verdicts.size());
  for (const auto& v : verdicts) {
    auto post = by_id.find(v.post_id);
    if (post == by_id.end()) {
      throw std::invalid_argument("verdict " + v.id() + " refers to unknown post");
    }
    const std::string id = v.id();
    const auto row = embeddings.index_of(id);
    if (!row) {
      missing.push_back(id);
      continue;
    }
    TrainingExample ex;
    ex.verdict_id = id;
    ex.post_id = v.post_id;
    ex.input_text = verdict_input_text(post->second->situation, v.scrubbed_text, lexicon);
    if (contains_lexicon_token(ex.input_text, lexicon)) {
      throw std::logic_error("lexicon phrase survived scrubbing in " + id);
    }
    ex.embedding = embeddings.row(*row);
    ex.label = v.verdict == Verdict::Yta ? 1 : 0;
    out.push_back(std::move(ex));
  }
  if (!missing.empty()) throw MissingEmbeddingError(std::move(missing));
  return out;
}

std::string_view to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Validation: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

std::string_view to_string(StratifyBy s) {
  return s == StratifyBy::FullTextCluster ? "full_text" : "situation";
}

std::vector<std::string> SplitSpec::members(Split s) const {
  std::vector<std::string> out;
  for (std::size_t k = 0; k < post_ids.size(); ++k) {
    if (splits[k] == s) out.push_back(post_ids[k]);
  }
  return out;
}

std::optional<Split> SplitSpec::split_of(const std::string& post_id) const {
  auto it = std::find(post_ids.begin(), post_ids.end(), post_id);
  if (it == post_ids.end()) return std::nullopt;
  return splits[static_cast<std::size_t>(it - post_ids.begin())];
}

SplitSpec stratified_split(std::span<const std::string> post_ids,
                           std::span<const std::optional<std::uint32_t>> clusters,
                           std::uint32_t community_count, StratifyBy stratify_by,
                           const SplitRatios& ratios, std::uint64_t seed) {
  if (post_ids.size() != clusters.size()) {
    throw std::invalid_argument("every post needs a cluster label");
  }
  if (ratios.train + ratios.validation + ratios.test != 100) {
    throw std::invalid_argument("split ratios must sum to 100");
  }

  // strata 0..community_count-1 are clusters, the last one is unclustered
  std::vector<std::vector<std::size_t>> strata(community_count + 1);
  std::unordered_set<std::string_view> seen;
  for (std::size_t k = 0; k < post_ids.size(); ++k) {
    if (!seen.insert(post_ids[k]).second) {
      throw std::invalid_argument("duplicate post id " + post_ids[k]);
    }
    const auto& c = clusters[k];
    if (c && *c >= community_count) {
      throw std::invalid_argument("cluster label out of range for post " + post_ids[k]);
    }
    strata[c ? *c : community_count].push_back(k);
  }

  SplitSpec spec;
  spec.stratify_by = stratify_by;
  spec.post_ids.assign(post_ids.begin(), post_ids.end());
  spec.splits.assign(post_ids.size(), Split::Train);

  Rng rng(seed);
  for (std::size_t s = 0; s < strata.size(); ++s) {
    auto& members = strata[s];
    if (members.empty()) {
      if (s < community_count) spec.warnings.push_back("cluster " + std::to_string(s) + " is empty");
      continue;
    }
    std::sort(members.begin(), members.end(),
              [&](std::size_t a, std::size_t b) { return post_ids[a] < post_ids[b]; });
    rng.shuffle(members);
    const std::size_t n = members.size();
    const std::size_t n_train = (ratios.train * n + 50) / 100;
    const std::size_t n_val = std::min(n - n_train, (ratios.validation * n + 50) / 100);
    for (std::size_t k = 0; k < n; ++k) {
      spec.splits[members[k]] =
          k < n_train ? Split::Train : k < n_train + n_val ? Split::Validation : Split::Test;
    }
  }
  return spec;
}

void write_split_tsv(std::ostream& out, const SplitSpec& spec) {
  out << "post_id\tsplit\n";
  for (std::size_t k = 0; k < spec.post_ids.size(); ++k) {
    out << spec.post_ids[k] << '\t' << to_string(spec.splits[k]) << '\n';
  }
}

SplitSpec read_split_tsv(std::istream& in, StratifyBy stratify_by) {
  SplitSpec spec;
  spec.stratify_by = stratify_by;
  std::string line;
  std::size_t line_no = 0;
  std::unordered_set<std::string> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (line == "post_id\tsplit") continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw std::invalid_argument("split file line " + std::to_string(line_no) + ": expected 2 columns");
    }
    std::string id = line.substr(0, tab);
    const std::string name = line.substr(tab + 1);
    Split s;
    if (name == "train") {
      s = Split::Train;
    } else if (name == "val") {
      s = Split::Validation;
    } else if (name == "test") {
      s = Split::Test;
    } else {
      throw std::invalid_argument("split file line " + std::to_string(line_no) +
                                  ": unknown split '" + name + "'");
    }
    if (!seen.insert(id).second) {
      throw std::invalid_argument("split file line " + std::to_string(line_no) +
                                  ": post " + id + " listed twice");
    }
    spec.post_ids.push_back(std::move(id));
    spec.splits.push_back(s);
  }
  return spec;
}

FocalLoss focal_loss(double p_true, double alpha, double gamma) {
  const double p = std::clamp(p_true, kProbabilityClamp, 1.0 - kProbabilityClamp);
  const double q = 1.0 - p;
  const double log_p = std::log(p);
  const double mod = std::pow(q, gamma);
  FocalLoss f;
  f.loss = -alpha * mod * log_p;
  // dp/dz = p q; d/dp[-(q^g) log p] = g q^(g-1) log p - q^g / p
  f.gradient = alpha * mod * (gamma * p * log_p - q);
  return f;
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("train config: " + msg); };
  if (epochs < 1) fail("epochs must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) fail("learning_rate must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) fail("beta1 must be in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) fail("beta2 must be in [0, 1)");
  if (!(epsilon > 0.0)) fail("epsilon must be > 0");
  if (!(focal_gamma >= 0.0) || !std::isfinite(focal_gamma)) fail("focal_gamma must be >= 0");
  if (focal_alpha && !(*focal_alpha > 0.0 && *focal_alpha < 1.0)) {
    fail("focal_alpha must be in (0, 1)");
  }
  if (batch_size == 0) fail("batch_size must be >= 1");
}

namespace {

double score(const ProbeModel& m, std::span<const float> x) {
  double s = m.bias;
  for (std::size_t k = 0; k < x.size(); ++k) s += m.weights[k] * static_cast<double>(x[k]);
  return s;
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

struct Scores {
  double macro_f1;
  double accuracy;
};

Scores score_set(const ProbeModel& m, const std::vector<TrainingExample>& set) {
  ConfusionCounts c;
  for (const auto& ex : set) c.add(ex.label != 0, predict_label(m, ex.embedding));
  return {macro_f1(c), accuracy(c)};
}

}  // namespace

double predict(const ProbeModel& model, std::span<const float> embedding) {
  if (embedding.size() != model.weights.size()) {
    throw std::domain_error("embedding dim " + std::to_string(embedding.size()) +
                            " does not match model dim " + std::to_string(model.weights.size()));
  }
  return sigmoid(score(model, embedding));
}

TrainResult train_probe(const std::vector<TrainingExample>& train,
                        const std::vector<TrainingExample>& validation,
                        const TrainConfig& config) {
  config.validate();
  if (train.empty()) throw std::invalid_argument("training set is empty");
  const std::size_t dim = train.front().embedding.size();
  if (dim == 0) throw std::invalid_argument("training embeddings are empty");
  for (const auto* set : {&train, &validation}) {
    for (const auto& ex : *set) {
      if (ex.embedding.size() != dim) {
        throw std::invalid_argument("example " + ex.verdict_id + " has embedding dim " +
                                    std::to_string(ex.embedding.size()) + ", expected " +
                                    std::to_string(dim));
      }
    }
  }

  std::size_t positives = 0;
  for (const auto& ex : train) positives += ex.label != 0;
  const std::size_t negatives = train.size() - positives;
  std::array<double, 2> alpha{};  // indexed by label
  if (config.focal_alpha) {
    alpha = {1.0 - *config.focal_alpha, *config.focal_alpha};
  } else {
    const double n = static_cast<double>(train.size());
    alpha[0] = negatives ? n / (2.0 * static_cast<double>(negatives)) : 0.0;
    alpha[1] = positives ? n / (2.0 * static_cast<double>(positives)) : 0.0;
  }

  const auto& scored = validation.empty() ? train : validation;
  TrainResult result;
  if (positives == 0 || negatives == 0) {
    // one class only: the likelihood optimum is a saturated bias
    const double logit = std::log((1.0 - kProbabilityClamp) / kProbabilityClamp);
    result.model.weights.assign(dim, 0.0);
    result.model.bias = positives ? logit : -logit;
    const double p = sigmoid(std::abs(result.model.bias));
    const double loss = focal_loss(p, alpha[positives ? 1 : 0], config.focal_gamma).loss;
    const Scores sc = score_set(result.model, scored);
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
      result.epochs.push_back({epoch, loss, sc.macro_f1, sc.accuracy});
    }
    result.best_epoch = 1;
    result.warnings.push_back(std::string("training split holds only ") + (positives ? "YTA" : "NTA") +
                              " verdicts; the probe predicts that label everywhere");
    return result;
  }

  Rng rng(config.seed);
  ProbeModel model;
  model.weights.resize(dim);
  for (auto& w : model.weights) w = (rng.uniform() * 2.0 - 1.0) * 1e-3;

  // Adam state, parameter dim holds the bias
  std::vector<double> m1(dim + 1, 0.0);
  std::vector<double> m2(dim + 1, 0.0);
  std::vector<double> grad(dim + 1, 0.0);
  std::uint64_t step = 0;

  double best_f1 = -1.0;
  std::vector<std::size_t> order(train.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t b = start; b < end; ++b) {
        const auto& ex = train[order[b]];
        const double s = score(model, ex.embedding);
        const double sign = ex.label ? 1.0 : -1.0;
        const FocalLoss fl = focal_loss(sigmoid(sign * s), alpha[ex.label ? 1 : 0], config.focal_gamma);
        if (!std::isfinite(fl.loss) || !std::isfinite(fl.gradient)) {
          std::ostringstream msg;
          msg << "non-finite loss at epoch " << epoch << ", example " << ex.verdict_id
              << " (score " << s << ')';
          throw TrainingError(msg.str());
        }
        loss_sum += fl.loss;
        const double g = sign * fl.gradient;
        for (std::size_t k = 0; k < dim; ++k) grad[k] += g * static_cast<double>(ex.embedding[k]);
        grad[dim] += g;
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      ++step;
      const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
      for (std::size_t k = 0; k <= dim; ++k) {
        const double gk = grad[k] * inv;
        m1[k] = config.beta1 * m1[k] + (1.0 - config.beta1) * gk;
        m2[k] = config.beta2 * m2[k] + (1.0 - config.beta2) * gk * gk;
        const double update =
            config.learning_rate * (m1[k] / c1) / (std::sqrt(m2[k] / c2) + config.epsilon);
        (k < dim ? model.weights[k] : model.bias) -= update;
      }
    }
    const Scores sc = score_set(model, scored);
    const double mean_loss = loss_sum / static_cast<double>(train.size());
    if (!std::isfinite(mean_loss)) {
      throw TrainingError("non-finite mean loss at epoch " + std::to_string(epoch));
    }
    result.epochs.push_back({epoch, mean_loss, sc.macro_f1, sc.accuracy});
    if (sc.macro_f1 > best_f1) {
      best_f1 = sc.macro_f1;
      result.model = model;
      result.best_epoch = epoch;
    }
  }
  return result;
}

namespace {

static_assert(std::endian::native == std::endian::little, "PRB1 I/O assumes a little-endian host");

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& in, std::uint64_t& offset) {
  T v;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw FormatError("truncated PRB1 model", offset);
  offset += sizeof v;
  return v;
}

}  // namespace

void write_model(std::ostream& out, const ProbeModel& model) {
  out.write("PRB1", 4);
  put(out, static_cast<std::uint32_t>(model.weights.size()));
  for (double w : model.weights) put(out, w);
  put(out, model.bias);
}

ProbeModel load_model(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "PRB1", 4) != 0) {
    throw FormatError("bad PRB1 magic", 0);
  }
  std::uint64_t offset = 4;
  const auto dim = get<std::uint32_t>(in, offset);
  if (dim == 0) throw FormatError("PRB1 model has zero dim", 4);
  ProbeModel m;
  m.weights.reserve(dim);
  for (std::uint32_t k = 0; k <= dim; ++k) {
    const std::uint64_t at = offset;
    const auto v = get<double>(in, offset);
    if (!std::isfinite(v)) throw FormatError("non-finite PRB1 parameter", at);
    if (k < dim) {
      m.weights.push_back(v);
    } else {
      m.bias = v;
    }
  }
  return m;
}

}  // namespace conflict

#include "conflict/config.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace conflict {

namespace {

struct KeySpec {
  std::string_view key;
  std::string_view fallback;
  bool required = false;
};

// clang-format off
constexpr std::array kSchema{
    KeySpec{"paths.corpus", ""},
    KeySpec{"paths.lexicon", ""},
    KeySpec{"paths.situation_embeddings", ""},
    KeySpec{"paths.full_text_embeddings", ""},
    KeySpec{"paths.input_embeddings", ""},
    KeySpec{"paths.annotations", ""},
    KeySpec{"paths.splits", ""},
    KeySpec{"paths.output_dir", "", true},
    KeySpec{"corpus.prefix", "AITA for"},
    KeySpec{"corpus.strip_wibta", "false"},
    KeySpec{"cluster.cutoff_min", "0"},
    KeySpec{"cluster.cutoff_max", "90"},
    KeySpec{"cluster.cutoff_step", "10"},
    KeySpec{"cluster.situation_cutoff", "auto"},
    KeySpec{"cluster.full_text_cutoff", "auto"},
    KeySpec{"cluster.min_cluster_size", "26"},
    KeySpec{"cluster.resolution", "1"},
    KeySpec{"cluster.seed", "", true},
    KeySpec{"split.train", "70"},
    KeySpec{"split.val", "20"},
    KeySpec{"split.test", "10"},
    KeySpec{"split.stratify_by", "full_text"},
    KeySpec{"split.seed", "", true},
    KeySpec{"train.epochs", "10"},
    KeySpec{"train.learning_rate", "1e-4"},
    KeySpec{"train.beta1", "0.9"},
    KeySpec{"train.beta2", "0.999"},
    KeySpec{"train.epsilon", "1e-8"},
    KeySpec{"train.focal_gamma", "2"},
    KeySpec{"train.focal_alpha", "balanced"},
    KeySpec{"train.batch_size", "32"},
    KeySpec{"train.seed", "", true},
    KeySpec{"analyze.resamples", "100000"},
    KeySpec{"analyze.exact_limit", "200000"},
    KeySpec{"analyze.seed", "", true},
};
// clang-format on

bool known(std::string_view key) {
  return std::any_of(kSchema.begin(), kSchema.end(), [&](const KeySpec& s) { return s.key == key; });
}

class Values {
 public:
  explicit Values(std::map<std::string, std::string> v) : v_(std::move(v)) {}

  const std::string& text(const std::string& key) const { return v_.at(key); }

  template <class T>
  T integer(const std::string& key) const {
    const std::string& s = text(key);
    T out{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc() || ptr != s.data() + s.size()) fail(key, "an integer");
    return out;
  }

  double real(const std::string& key) const {
    const std::string& s = text(key);
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(out)) fail(key, "a number");
    return out;
  }

  bool boolean(const std::string& key) const {
    const std::string& s = text(key);
    if (s == "true") return true;
    if (s == "false") return false;
    fail(key, "true or false");
  }

  std::optional<int> cutoff(const std::string& key) const {
    if (text(key) == "auto") return std::nullopt;
    return integer<int>(key);
  }

  [[noreturn]] static void fail(const std::string& key, const char* expected) {
    throw ConfigError("config key " + key + " must be " + expected);
  }

 private:
  std::map<std::string, std::string> v_;
};

std::filesystem::path resolve(const std::string& value, const std::filesystem::path& base) {
  if (value.empty()) return {};
  std::filesystem::path p(value);
  return p.is_absolute() || base.empty() ? p : base / p;
}

}  // namespace

std::vector<int> ClusterConfig::cutoffs() const {
  std::vector<int> out;
  for (int c = cutoff_min; c <= cutoff_max; c += cutoff_step) out.push_back(c);
  return out;
}

PipelineConfig parse_config(std::string_view text, const std::vector<std::string>& overrides,
                            const std::filesystem::path& base_dir) {
  boost::property_tree::ptree tree;
  try {
    std::istringstream in{std::string(text)};
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("config line " + std::to_string(e.line()) + ": " + e.message());
  }

  std::map<std::string, std::string> values;
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      if (!body.data().empty()) throw ConfigError("config key " + section + " is outside a section");
      continue;
    }
    for (const auto& [key, node] : body) {
      const std::string full = section + "." + key;
      if (!known(full)) throw ConfigError("unknown config key " + full);
      values[full] = node.data();
    }
  }
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + o + "' is not key=value");
    std::string key = o.substr(0, eq);
    if (!known(key)) throw ConfigError("unknown config key " + key);
    values[key] = o.substr(eq + 1);
  }
  for (const auto& spec : kSchema) {
    const std::string key(spec.key);
    auto it = values.find(key);
    if (it == values.end() || (spec.required && it->second.empty())) {
      if (spec.required) throw ConfigError("config key " + key + " is required");
      values[key] = std::string(spec.fallback);
    }
  }

  PipelineConfig cfg;
  for (const auto& [k, v] : values) cfg.canonical += k + " = " + v + "\n";
  cfg.sha256 = sha256_hex(cfg.canonical);

  const Values v(std::move(values));
  auto& p = cfg.paths;
  p.corpus = resolve(v.text("paths.corpus"), base_dir);
  p.lexicon = resolve(v.text("paths.lexicon"), base_dir);
  p.situation_embeddings = resolve(v.text("paths.situation_embeddings"), base_dir);
  p.full_text_embeddings = resolve(v.text("paths.full_text_embeddings"), base_dir);
  p.input_embeddings = resolve(v.text("paths.input_embeddings"), base_dir);
  p.annotations = resolve(v.text("paths.annotations"), base_dir);
  p.splits = resolve(v.text("paths.splits"), base_dir);
  p.output_dir = resolve(v.text("paths.output_dir"), base_dir);

  cfg.situation.prefix = v.text("corpus.prefix");
  cfg.situation.strip_wibta = v.boolean("corpus.strip_wibta");

  auto& c = cfg.cluster;
  c.cutoff_min = v.integer<int>("cluster.cutoff_min");
  c.cutoff_max = v.integer<int>("cluster.cutoff_max");
  c.cutoff_step = v.integer<int>("cluster.cutoff_step");
  if (c.cutoff_min < 0 || c.cutoff_max >= 100 || c.cutoff_min > c.cutoff_max || c.cutoff_step <= 0) {
    throw ConfigError("cluster cutoffs need 0 <= cutoff_min <= cutoff_max < 100 and cutoff_step > 0");
  }
  c.situation_cutoff = v.cutoff("cluster.situation_cutoff");
  c.full_text_cutoff = v.cutoff("cluster.full_text_cutoff");
  const auto sweep = c.cutoffs();
  for (const auto& forced : {c.situation_cutoff, c.full_text_cutoff}) {
    if (forced && std::find(sweep.begin(), sweep.end(), *forced) == sweep.end()) {
      throw ConfigError("forced cutoff " + std::to_string(*forced) + " is not on the sweep grid");
    }
  }
  c.min_cluster_size = v.integer<std::size_t>("cluster.min_cluster_size");
  c.resolution = v.real("cluster.resolution");
  if (!(c.resolution > 0.0)) throw ConfigError("cluster.resolution must be > 0");
  c.seed = v.integer<std::uint64_t>("cluster.seed");

  auto& s = cfg.split;
  s.ratios.train = v.integer<unsigned>("split.train");
  s.ratios.validation = v.integer<unsigned>("split.val");
  s.ratios.test = v.integer<unsigned>("split.test");
  if (s.ratios.train + s.ratios.validation + s.ratios.test != 100) {
    throw ConfigError("split.train + split.val + split.test must be 100");
  }
  const std::string& strat = v.text("split.stratify_by");
  if (strat == "full_text") {
    s.stratify_by = StratifyBy::FullTextCluster;
  } else if (strat == "situation") {
    s.stratify_by = StratifyBy::SituationCluster;
  } else {
    Values::fail("split.stratify_by", "full_text or situation");
  }
  s.seed = v.integer<std::uint64_t>("split.seed");

  auto& t = cfg.train;
  t.epochs = v.integer<int>("train.epochs");
  t.learning_rate = v.real("train.learning_rate");
  t.beta1 = v.real("train.beta1");
  t.beta2 = v.real("train.beta2");
  t.epsilon = v.real("train.epsilon");
  t.focal_gamma = v.real("train.focal_gamma");
  if (v.text("train.focal_alpha") != "balanced") t.focal_alpha = v.real("train.focal_alpha");
  t.batch_size = v.integer<std::size_t>("train.batch_size");
  t.seed = v.integer<std::uint64_t>("train.seed");
  try {
    t.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  cfg.permutation.resamples = v.integer<std::uint64_t>("analyze.resamples");
  cfg.permutation.exact_limit = v.integer<std::uint64_t>("analyze.exact_limit");
  cfg.permutation.seed = v.integer<std::uint64_t>("analyze.seed");
  if (cfg.permutation.resamples == 0) throw ConfigError("analyze.resamples must be > 0");
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& file,
                           const std::vector<std::string>& overrides) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + file.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), overrides, file.parent_path());
}

namespace {

struct DigestDeleter {
  void operator()(EVP_MD_CTX* ctx) const { EVP_MD_CTX_free(ctx); }
};

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) {
      throw std::runtime_error("SHA-256 initialisation failed");
    }
  }
  void update(const void* data, std::size_t n) {
    if (EVP_DigestUpdate(ctx_.get(), data, n) != 1) throw std::runtime_error("SHA-256 update failed");
  }
  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx_.get(), md.data(), &len) != 1) {
      throw std::runtime_error("SHA-256 finalisation failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int k = 0; k < len; ++k) {
      out += kHex[md[k] >> 4];
      out += kHex[md[k] & 0xF];
    }
    return out;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, DigestDeleter> ctx_;
};

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  Sha256 h;
  h.update(bytes.data(), bytes.size());
  return h.hex();
}

std::string sha256_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + file.string());
  Sha256 h;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

}  // namespace conflict

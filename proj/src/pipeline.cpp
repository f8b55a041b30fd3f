#include "conflict/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include <CLI11.hpp>
#include <json.hpp>

#include "conflict/annotation.hpp"
#include "conflict/classifier.hpp"
#include "conflict/corpus.hpp"
#include "conflict/embedding.hpp"
#include "conflict/graph_cluster.hpp"
#include "conflict/stats.hpp"

namespace conflict {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Subcommand s) { return kSubcommandNames[static_cast<int>(s)]; }

namespace {

std::string fixed(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

std::string escape_field(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char ch : text) {
    switch (ch) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out += ch;
    }
  }
  return out;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> cols;
  std::size_t start = 0;
  for (;;) {
    const auto tab = line.find('\t', start);
    cols.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) return cols;
    start = tab + 1;
  }
}

class Stage {
 public:
  Stage(Subcommand sub, const PipelineConfig& cfg, std::ostream& log)
      : sub_(sub), cfg_(cfg), log_(log), dir_(cfg.paths.output_dir / std::string(to_string(sub))) {}

  const PipelineConfig& config() const { return cfg_; }

  /// A configured input file; hashed into the manifest.
  const fs::path& input(const std::string& role, const fs::path& path, const std::string& key) {
    if (path.empty()) {
      throw PipelineError("config", key + " must be set for " + std::string(to_string(sub_)));
    }
    check_exists(role, path);
    inputs_[role] = {{"path", path.generic_string()}, {"sha256", sha256_file(path)}};
    return path;
  }

  /// An artifact of an earlier stage.
  fs::path artifact(Subcommand producer, const std::string& name) {
    const fs::path path = cfg_.paths.output_dir / std::string(to_string(producer)) / name;
    if (!fs::is_regular_file(path)) {
      throw PipelineError("missing_artifact",
                          std::string(to_string(producer)) + " artifact " + path.generic_string() +
                              " not found; run `conflictctl " + std::string(to_string(producer)) +
                              "` first",
                          path);
    }
    inputs_[std::string(to_string(producer)) + "/" + name] = {
        {"path", path.generic_string()}, {"sha256", sha256_file(path)}};
    return path;
  }

  std::string header() const { return "# config_sha256=" + cfg_.sha256 + "\n"; }
  std::string markdown_header() const { return "<!-- config_sha256=" + cfg_.sha256 + " -->\n"; }

  void write(const std::string& name, const std::string& content) {
    fs::create_directories(dir_);
    const fs::path path = dir_ / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
    out.close();
    if (!out) throw PipelineError("io", "cannot write " + path.generic_string(), path);
    outputs_[name] = sha256_hex(content);
    log_ << "wrote " << path.generic_string() << '\n';
  }

  void warn(std::string message) { warnings_.push_back(std::move(message)); }

  void finish() {
    std::string text = header();
    for (const auto& w : warnings_) text += w + "\n";
    write("warnings.txt", text);
    const json manifest = {{"subcommand", std::string(to_string(sub_))},
                           {"config_sha256", cfg_.sha256},
                           {"inputs", inputs_},
                           {"outputs", outputs_}};
    write("manifest.json", manifest.dump(2) + "\n");
  }

 private:
  static void check_exists(const std::string& role, const fs::path& path) {
    if (!fs::is_regular_file(path)) {
      throw PipelineError("missing_input", role + " not found: " + path.generic_string(), path);
    }
  }

  Subcommand sub_;
  const PipelineConfig& cfg_;
  std::ostream& log_;
  fs::path dir_;
  json inputs_ = json::object();
  json outputs_ = json::object();
  std::vector<std::string> warnings_;
};

template <class F>
auto guarded(const fs::path& path, F&& body) {
  try {
    return body();
  } catch (const PipelineError&) {
    throw;
  } catch (const FormatError& e) {
    throw PipelineError("format", path.generic_string() + ": " + e.what(), path);
  } catch (const std::exception& e) {
    throw PipelineError("data", path.generic_string() + ": " + e.what(), path);
  }
}

std::ifstream open_binary(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PipelineError("io", "cannot open " + path.generic_string(), path);
  return in;
}

VerdictLexicon load_lexicon(Stage& st) {
  const auto& p = st.config().paths.lexicon;
  if (p.empty()) return VerdictLexicon::default_lexicon();
  st.input("lexicon", p, "paths.lexicon");
  return guarded(p, [&] {
    auto in = open_binary(p);
    return VerdictLexicon::from_json(in);
  });
}

std::vector<Post> load_posts(Stage& st) {
  const auto& p = st.input("corpus", st.config().paths.corpus, "paths.corpus");
  ParsedCorpus parsed = guarded(p, [&] {
    auto in = open_binary(p);
    return parse_corpus(in, st.config().situation);
  });
  for (const auto& e : parsed.errors) {
    st.warn("corpus line " + std::to_string(e.line) + " skipped: " + e.message);
  }
  return std::move(parsed.posts);
}

EmbeddingMatrix load_matrix(Stage& st, const std::string& role, const fs::path& path,
                            const std::string& key) {
  st.input(role, path, key);
  return guarded(path, [&] {
    auto in = open_binary(path);
    return load_embeddings(in);
  });
}

std::string kind_name(StratifyBy s) { return std::string(to_string(s)); }

LabeledClusters load_partition(Stage& st, StratifyBy kind) {
  const fs::path p = st.artifact(Subcommand::Cluster, kind_name(kind) + "_partition.tsv");
  return guarded(p, [&] {
    auto in = open_binary(p);
    return read_partition_tsv(in);
  });
}

SplitSpec load_split(Stage& st) {
  const auto& cfg = st.config();
  fs::path p;
  if (!cfg.paths.splits.empty()) {
    p = st.input("splits", cfg.paths.splits, "paths.splits");
  } else {
    p = st.artifact(Subcommand::Split, kind_name(cfg.split.stratify_by) + "_split.tsv");
  }
  return guarded(p, [&] {
    auto in = open_binary(p);
    return read_split_tsv(in, cfg.split.stratify_by);
  });
}

std::vector<TrainingExample> load_examples(Stage& st, const std::vector<Post>& posts,
                                           const EmbeddingMatrix& m, const VerdictLexicon& lexicon) {
  const auto verdicts = mine_verdicts(posts, lexicon);
  try {
    return build_examples(posts, verdicts, m, lexicon);
  } catch (const MissingEmbeddingError& e) {
    throw PipelineError("data", std::string("input embeddings: ") + e.what(),
                        st.config().paths.input_embeddings);
  }
}

std::array<std::vector<TrainingExample>, 3> by_split(Stage& st,
                                                     std::vector<TrainingExample> examples,
                                                     const SplitSpec& split) {
  std::unordered_map<std::string, Split> assignment;
  for (std::size_t k = 0; k < split.post_ids.size(); ++k) assignment[split.post_ids[k]] = split.splits[k];
  std::array<std::vector<TrainingExample>, 3> out;
  std::size_t unassigned = 0;
  for (auto& ex : examples) {
    auto it = assignment.find(ex.post_id);
    if (it == assignment.end()) {
      ++unassigned;
      continue;
    }
    out[static_cast<std::size_t>(it->second)].push_back(std::move(ex));
  }
  if (unassigned) {
    st.warn(std::to_string(unassigned) + " verdict(s) belong to posts missing from the split file");
  }
  return out;
}

void ingest(Stage& st) {
  const auto lexicon = load_lexicon(st);
  const auto posts = load_posts(st);

  std::ostringstream stats;
  stats << st.header();
  write_stats(stats, corpus_stats(posts, lexicon));
  st.write("stats.txt", stats.str());

  std::unordered_map<std::string, const Post*> by_id;
  for (const auto& p : posts) by_id.emplace(p.id, &p);
  std::ostringstream table;
  table << st.header() << "verdict_id\tpost_id\tcomment_id\tverdict\tinput_text\n";
  for (const auto& v : mine_verdicts(posts, lexicon)) {
    table << escape_field(v.id()) << '\t' << escape_field(v.post_id) << '\t'
          << escape_field(v.comment_id) << '\t' << to_string(v.verdict) << '\t'
          << escape_field(verdict_input_text(by_id.at(v.post_id)->situation, v.scrubbed_text, lexicon))
          << '\n';
  }
  st.write("verdicts.tsv", table.str());
}

void cluster(Stage& st) {
  const auto& cfg = st.config();
  struct Kind {
    StratifyBy kind;
    fs::path path;
    std::string key;
    std::optional<int> forced;
  };
  const std::array<Kind, 2> kinds{{
      {StratifyBy::SituationCluster, cfg.paths.situation_embeddings, "paths.situation_embeddings",
       cfg.cluster.situation_cutoff},
      {StratifyBy::FullTextCluster, cfg.paths.full_text_embeddings, "paths.full_text_embeddings",
       cfg.cluster.full_text_cutoff},
  }};
  if (cfg.paths.situation_embeddings.empty() && cfg.paths.full_text_embeddings.empty()) {
    throw PipelineError("config",
                        "cluster needs paths.situation_embeddings or paths.full_text_embeddings");
  }
  for (const auto& k : kinds) {
    if (k.path.empty()) continue;
    const std::string name = kind_name(k.kind);
    const auto m = load_matrix(st, name + "_embeddings", k.path, k.key);
    SweepOptions opts;
    opts.cutoffs = cfg.cluster.cutoffs();
    opts.seed = cfg.cluster.seed;
    opts.resolution = cfg.cluster.resolution;
    opts.forced_cutoff = k.forced;
    const SweepReport report = guarded(k.path, [&] {
      if (m.size() < 2) throw std::invalid_argument("clustering needs at least 2 embeddings");
      return stability_sweep(pairwise_similarity(m), opts);
    });

    std::ostringstream tsv;
    tsv << st.header();
    write_sweep_tsv(tsv, report);
    st.write(name + "_sweep.tsv", tsv.str());

    std::ostringstream md;
    md << st.markdown_header();
    write_sweep_markdown(md, report, name == "situation" ? "Situation" : "Full text");
    st.write(name + "_sweep.md", md.str());

    const auto at = std::find_if(report.rows.begin(), report.rows.end(),
                                 [&](const SweepRow& r) { return r.cutoff_pct == report.chosen_cutoff; });
    const Partition& chosen = report.partitions[static_cast<std::size_t>(at - report.rows.begin())];
    const FilteredPartition filtered = drop_small_clusters(chosen, cfg.cluster.min_cluster_size);

    std::ostringstream part;
    part << st.header();
    write_partition_tsv(part, m.ids(), filtered);
    st.write(name + "_partition.tsv", part.str());

    std::ostringstream summary;
    summary << st.header() << "nodes=" << m.size() << "\nchosen_cutoff=" << report.chosen_cutoff
            << "\nchosen_by=" << (k.forced ? "config" : "persistence")
            << "\nclusters_at_cutoff=" << chosen.community_count()
            << "\nclusters_after_min_size=" << filtered.community_count
            << "\nunclustered_nodes=" << filtered.removed.size() << '\n';
    st.write(name + "_summary.txt", summary.str());
    if (filtered.community_count == 0) {
      st.warn(name + ": no cluster reaches min_cluster_size " +
              std::to_string(cfg.cluster.min_cluster_size));
    }
  }
}

void agree(Stage& st) {
  const auto& path = st.input("annotations", st.config().paths.annotations, "paths.annotations");
  const auto records = guarded(path, [&] {
    auto in = open_binary(path);
    return read_annotations_csv(in);
  });

  const AgreementReport report = agreement_report(records);
  for (const auto& w : report.warnings) st.warn(w);
  std::ostringstream tsv;
  std::ostringstream md;
  tsv << st.header() << "aspect\traw_mcc\tmerged_mcc\n";
  md << st.markdown_header() << "| Aspect | MCC | MCC (merged) |\n|---|---|---|\n";
  for (const auto& a : report.aspects) {
    tsv << column_name(a.aspect) << '\t' << fixed(a.raw_mcc, 4) << '\t' << fixed(a.merged_mcc, 4)
        << '\n';
    md << "| " << display_name(a.aspect) << " | " << fixed(a.raw_mcc, 2) << " | "
       << (is_three_way(a.aspect) ? fixed(a.merged_mcc, 2) : "-") << " |\n";
  }
  md << "\nPosts with two valid annotations: " << report.post_count << '\n';
  st.write("agreement.tsv", tsv.str());
  st.write("agreement.md", md.str());

  const Consolidation cons = consolidate(records);
  for (const auto& w : cons.warnings) st.warn(w);
  std::ostringstream gold;
  gold << st.header();
  write_gold_tsv(gold, cons.gold);
  st.write("gold.tsv", gold.str());

  std::ostringstream dist;
  dist << st.header() << "source\taspect\tlabel\tcount\tpercent\n";
  auto emit = [&](const char* source, const Distribution& d) {
    for (const auto& ad : d) {
      for (const auto& share : ad.shares) {
        dist << source << '\t' << column_name(ad.aspect) << '\t' << to_string(share.label) << '\t'
             << share.count << '\t' << fixed(share.percent, 1) << '\n';
      }
    }
  };
  emit("annotations", label_distribution(records));
  emit("gold", label_distribution(cons.gold));
  st.write("distribution.tsv", dist.str());
}

void split(Stage& st) {
  const auto& cfg = st.config();
  const auto posts = load_posts(st);
  std::vector<std::string> ids;
  ids.reserve(posts.size());
  for (const auto& p : posts) ids.push_back(p.id);

  std::ostringstream summary;
  summary << st.header() << "stratify_by\tstratum\ttrain\tval\ttest\n";
  for (StratifyBy kind : {StratifyBy::SituationCluster, StratifyBy::FullTextCluster}) {
    const std::string name = kind_name(kind);
    const LabeledClusters part = load_partition(st, kind);
    std::unordered_map<std::string, std::optional<std::uint32_t>> label_of;
    std::uint32_t communities = 0;
    for (std::size_t k = 0; k < part.node_ids.size(); ++k) {
      label_of.emplace(part.node_ids[k], part.labels[k]);
      if (part.labels[k]) communities = std::max(communities, *part.labels[k] + 1);
    }
    std::vector<std::optional<std::uint32_t>> labels;
    labels.reserve(ids.size());
    std::size_t absent = 0;
    for (const auto& id : ids) {
      auto it = label_of.find(id);
      if (it == label_of.end()) ++absent;
      labels.push_back(it == label_of.end() ? std::nullopt : it->second);
    }
    if (absent) {
      st.warn(name + ": " + std::to_string(absent) +
              " post(s) missing from the partition are treated as unclustered");
    }
    const SplitSpec spec =
        stratified_split(ids, labels, communities, kind, cfg.split.ratios, cfg.split.seed);
    for (const auto& w : spec.warnings) st.warn(name + ": " + w);

    std::ostringstream tsv;
    tsv << st.header();
    write_split_tsv(tsv, spec);
    st.write(name + "_split.tsv", tsv.str());

    std::vector<std::array<std::size_t, 3>> counts(communities + 1);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      counts[labels[k] ? *labels[k] : communities][static_cast<std::size_t>(spec.splits[k])]++;
    }
    for (std::size_t s = 0; s < counts.size(); ++s) {
      summary << name << '\t' << (s < communities ? "cluster_" + std::to_string(s) : "unclustered")
              << '\t' << counts[s][0] << '\t' << counts[s][1] << '\t' << counts[s][2] << '\n';
    }
  }
  st.write("split_summary.tsv", summary.str());
}

void train(Stage& st) {
  const auto& cfg = st.config();
  const auto lexicon = load_lexicon(st);
  const auto posts = load_posts(st);
  const auto m = load_matrix(st, "input_embeddings", cfg.paths.input_embeddings,
                             "paths.input_embeddings");
  const SplitSpec spec = load_split(st);
  auto sets = by_split(st, load_examples(st, posts, m, lexicon), spec);
  const auto& train_set = sets[static_cast<std::size_t>(Split::Train)];
  const auto& val_set = sets[static_cast<std::size_t>(Split::Validation)];
  if (train_set.empty()) throw PipelineError("data", "the train split has no verdicts");
  if (val_set.empty()) st.warn("validation split is empty; model selection scores the train split");

  const TrainResult result = guarded(cfg.paths.input_embeddings,
                                     [&] { return train_probe(train_set, val_set, cfg.train); });

  for (const auto& w : result.warnings) st.warn(w);
  std::ostringstream model;
  write_model(model, result.model);
  st.write("model.prb1", model.str());

  std::ostringstream epochs;
  epochs << st.header() << "epoch\ttrain_loss\tval_macro_f1\tval_accuracy\tselected\n";
  for (const auto& e : result.epochs) {
    epochs << e.epoch << '\t' << fixed(e.train_loss, 6) << '\t' << fixed(e.val_macro_f1, 4) << '\t'
           << fixed(e.val_accuracy, 4) << '\t' << (e.epoch == result.best_epoch ? "yes" : "no")
           << '\n';
  }
  st.write("epochs.tsv", epochs.str());

  // majority class of the training split, scored on validation
  std::size_t yta = 0;
  for (const auto& ex : train_set) yta += ex.label;
  const bool majority = 2 * yta > train_set.size();
  ConfusionCounts baseline;
  for (const auto& ex : val_set.empty() ? train_set : val_set) baseline.add(ex.label != 0, majority);

  std::ostringstream summary;
  summary << st.header() << "stratify_by=" << kind_name(spec.stratify_by)
          << "\ntrain_examples=" << train_set.size() << "\nval_examples=" << val_set.size()
          << "\ndim=" << m.dim() << "\nbest_epoch=" << result.best_epoch
          << "\nmajority_baseline_val_macro_f1=" << fixed(macro_f1(baseline), 4) << '\n';
  st.write("summary.txt", summary.str());
}

void evaluate_stage(Stage& st) {
  const auto& cfg = st.config();
  const fs::path model_path = st.artifact(Subcommand::Train, "model.prb1");
  const ProbeModel model = guarded(model_path, [&] {
    auto in = open_binary(model_path);
    return load_model(in);
  });
  const auto lexicon = load_lexicon(st);
  const auto posts = load_posts(st);
  const auto m = load_matrix(st, "input_embeddings", cfg.paths.input_embeddings,
                             "paths.input_embeddings");
  if (m.dim() != model.weights.size()) {
    throw PipelineError("data",
                        "input embeddings have dim " + std::to_string(m.dim()) +
                            " but the model expects " + std::to_string(model.weights.size()),
                        cfg.paths.input_embeddings);
  }
  const SplitSpec spec = load_split(st);
  auto sets = by_split(st, load_examples(st, posts, m, lexicon), spec);
  const auto& test_set = sets[static_cast<std::size_t>(Split::Test)];

  const LabeledClusters part = load_partition(st, spec.stratify_by);
  std::unordered_map<std::string, std::string> group_of;
  std::uint32_t communities = 0;
  for (std::size_t k = 0; k < part.node_ids.size(); ++k) {
    const auto& l = part.labels[k];
    group_of[part.node_ids[k]] = l ? "cluster_" + std::to_string(*l) : "unclustered";
    if (l) communities = std::max(communities, *l + 1);
  }
  std::vector<std::string> expected;
  for (std::uint32_t c = 0; c < communities; ++c) expected.push_back("cluster_" + std::to_string(c));

  std::vector<unsigned char> preds;
  std::vector<unsigned char> golds;
  std::vector<std::string> groups;
  std::vector<std::string> post_ids;
  std::ostringstream predictions;
  predictions << st.header() << "verdict_id\tpost_id\tgold\tpredicted\tprobability\n";
  for (const auto& ex : test_set) {
    const double p = predict(model, ex.embedding);
    const unsigned char label = p > 0.5 ? 1 : 0;
    preds.push_back(label);
    golds.push_back(ex.label);
    auto g = group_of.find(ex.post_id);
    groups.push_back(g == group_of.end() ? "unclustered" : g->second);
    post_ids.push_back(ex.post_id);
    predictions << escape_field(ex.verdict_id) << '\t' << escape_field(ex.post_id) << '\t'
                << int{ex.label} << '\t' << int{label} << '\t' << fixed(p, 6) << '\n';
  }
  st.write("predictions.tsv", predictions.str());

  const Evaluation ev = evaluate(preds, golds, groups, expected, post_ids);
  for (const auto& w : ev.warnings) st.warn(w);
  std::ostringstream tsv;
  tsv << st.header() << "# stratify_by=" << kind_name(spec.stratify_by) << '\n';
  write_metrics_tsv(tsv, ev.reports);
  st.write("metrics.tsv", tsv.str());
  std::ostringstream md;
  md << st.markdown_header();
  write_metrics_markdown(md, ev.reports, "Split by " + kind_name(spec.stratify_by) + " clusters");
  st.write("metrics.md", md.str());
}

std::vector<ScoredVerdict> read_predictions(const fs::path& path) {
  auto in = open_binary(path);
  std::vector<ScoredVerdict> out;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    if (line.empty() || line.front() == '#' || line.rfind("verdict_id\t", 0) == 0) continue;
    const auto cols = split_tabs(line);
    if (cols.size() != 5 || (cols[2] != "0" && cols[2] != "1") || (cols[3] != "0" && cols[3] != "1")) {
      throw std::invalid_argument("predictions line " + std::to_string(line_no) + " is malformed");
    }
    out.push_back({cols[1], static_cast<unsigned char>(cols[2] == "1"),
                   static_cast<unsigned char>(cols[3] == "1")});
  }
  return out;
}

void analyze(Stage& st) {
  const fs::path pred_path = st.artifact(Subcommand::Evaluate, "predictions.tsv");
  const fs::path gold_path = st.artifact(Subcommand::Agree, "gold.tsv");
  const auto verdicts = guarded(pred_path, [&] { return read_predictions(pred_path); });
  const auto gold = guarded(gold_path, [&] {
    auto in = open_binary(gold_path);
    return read_gold_tsv(in);
  });

  std::unordered_map<std::string, bool> annotated;
  for (const auto& g : gold) annotated[g.post_id] = true;
  std::size_t covered = 0;
  for (const auto& v : verdicts) covered += annotated.contains(v.post_id);
  if (covered == 0) st.warn("no predicted verdict belongs to an annotated post");

  const auto dyads = dyad_analysis(verdicts, gold, st.config().permutation);
  for (const auto& d : dyads) {
    for (const auto& w : d.warnings) st.warn(w);
  }
  std::ostringstream tsv;
  tsv << st.header() << "# annotated_verdicts=" << covered << '\n';
  write_dyad_tsv(tsv, dyads);
  st.write("dyads.tsv", tsv.str());
  std::ostringstream md;
  md << st.markdown_header();
  write_dyad_markdown(md, dyads);
  st.write("dyads.md", md.str());
}

}  // namespace

void run(Subcommand sub, const PipelineConfig& config, std::ostream& log) {
  Stage st(sub, config, log);
  switch (sub) {
    case Subcommand::Ingest: ingest(st); break;
    case Subcommand::Cluster: cluster(st); break;
    case Subcommand::Agree: agree(st); break;
    case Subcommand::Split: split(st); break;
    case Subcommand::Train: train(st); break;
    case Subcommand::Evaluate: evaluate_stage(st); break;
    case Subcommand::Analyze: analyze(st); break;
  }
  st.finish();
}

namespace {

void report_error(std::ostream& err, const std::string& kind, const std::string& message,
                  const std::string& subcommand, const fs::path& path = {}) {
  json j = {{"error", kind}, {"message", message}};
  if (!subcommand.empty()) j["subcommand"] = subcommand;
  if (!path.empty()) j["path"] = path.generic_string();
  err << j.dump() << '\n';
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Interpersonal-conflict corpus pipeline", "conflictctl"};
  app.require_subcommand(1);
  std::string config_path;
  std::vector<std::string> overrides;
  const std::map<std::string, std::string> help{
      {"ingest", "parse the corpus, mine verdicts, write stats"},
      {"cluster", "stability sweep and partitions for situation / full-text embeddings"},
      {"agree", "annotator agreement, label distributions and gold labels"},
      {"split", "post-level stratified train/val/test splits for both clusterings"},
      {"train", "train the focal-loss probe"},
      {"evaluate", "score the probe on the test split, overall and per cluster"},
      {"analyze", "aspect dyad significance and verdict-ratio tables"},
  };
  for (std::string_view name : kSubcommandNames) {
    auto* sc = app.add_subcommand(std::string(name), help.at(std::string(name)));
    sc->add_option("--config", config_path, "pipeline config file")->required();
    sc->add_option("--set", overrides, "override a config key (section.key=value)");
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    report_error(err, "usage", e.what(), "");
    return 2;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  const auto sub = static_cast<Subcommand>(
      std::find(std::begin(kSubcommandNames), std::end(kSubcommandNames), name) -
      std::begin(kSubcommandNames));
  try {
    const PipelineConfig cfg = load_config(config_path, overrides);
    run(sub, cfg, out);
  } catch (const ConfigError& e) {
    report_error(err, "config", e.what(), name, config_path);
    return 1;
  } catch (const PipelineError& e) {
    report_error(err, e.kind, e.what(), name, e.path);
    return 1;
  } catch (const std::exception& e) {
    report_error(err, "internal", e.what(), name);
    return 1;
  }
  return 0;
}

}  // namespace conflict

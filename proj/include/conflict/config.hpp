#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "conflict/classifier.hpp"
#include "conflict/corpus.hpp"
#include "conflict/stats.hpp"

namespace conflict {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PathConfig {
  // empty when not configured; relative paths resolve against the config file
  std::filesystem::path corpus;
  std::filesystem::path lexicon;
  std::filesystem::path situation_embeddings;
  std::filesystem::path full_text_embeddings;
  std::filesystem::path input_embeddings;
  std::filesystem::path annotations;
  std::filesystem::path splits;
  std::filesystem::path output_dir;
};

struct ClusterConfig {
  int cutoff_min = 0;
  int cutoff_max = 90;
  int cutoff_step = 10;
  std::optional<int> situation_cutoff;  // unset: persistence rule
  std::optional<int> full_text_cutoff;
  std::size_t min_cluster_size = 26;
  double resolution = 1.0;
  std::uint64_t seed = 0;

  std::vector<int> cutoffs() const;
};

struct SplitConfig {
  SplitRatios ratios;
  std::uint64_t seed = 0;
  StratifyBy stratify_by = StratifyBy::FullTextCluster;  // split used by train/evaluate
};

struct PipelineConfig {
  PathConfig paths;
  SituationOptions situation;
  ClusterConfig cluster;
  SplitConfig split;
  TrainConfig train;
  PermutationOptions permutation;

  /// Every known key with its effective value, sorted, one `key = value` per line.
  std::string canonical;
  /// SHA-256 of `canonical`, lowercase hex.
  std::string sha256;
};

/// Parses `[section]` / `key = value` text. Overrides are `section.key=value`
/// and win over the file. Unknown keys, malformed values and missing seeds
/// throw ConfigError.
PipelineConfig parse_config(std::string_view text, const std::vector<std::string>& overrides = {},
                            const std::filesystem::path& base_dir = {});

PipelineConfig load_config(const std::filesystem::path& file,
                           const std::vector<std::string>& overrides = {});

std::string sha256_hex(std::string_view bytes);
/// Throws std::runtime_error if the file cannot be read.
std::string sha256_file(const std::filesystem::path& file);

}  // namespace conflict

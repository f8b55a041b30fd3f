#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "conflict/config.hpp"

namespace conflict {

enum class Subcommand { Ingest, Cluster, Agree, Split, Train, Evaluate, Analyze };

inline constexpr std::string_view kSubcommandNames[] = {"ingest", "cluster",  "agree",  "split",
                                                        "train",  "evaluate", "analyze"};

std::string_view to_string(Subcommand s);

/// Failure reported to the user; `kind` is a short machine-readable tag
/// and `path` the offending file, if any.
struct PipelineError : std::runtime_error {
  PipelineError(std::string kind, const std::string& message, std::filesystem::path path = {})
      : std::runtime_error(message), kind(std::move(kind)), path(std::move(path)) {}
  std::string kind;
  std::filesystem::path path;
};

/// Runs one stage, writing its artifacts and manifest.json under
/// `<output_dir>/<subcommand>/`. Progress lines go to `log`.
void run(Subcommand sub, const PipelineConfig& config, std::ostream& log);

/// Command-line entry point: `<subcommand> --config <path> [--set key=value]...`.
/// Errors are printed to `err` as one JSON line; returns the exit status.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace conflict

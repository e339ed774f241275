#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "godspell/annotate.hpp"
#include "godspell/topics.hpp"

// Command-line workflow: run configuration, the per-stage subcommands, and the
// figure tables and markdown summary built from the JSON results.
namespace godspell::report {

struct RunConfig {
  std::filesystem::path manifest;
  std::filesystem::path output = "out";

  std::size_t segment_size = corpus::kDefaultSegmentSize;
  std::size_t passage_cap = corpus::kDefaultPassageCap;

  topics::TrainConfig topics;
  std::optional<std::filesystem::path> stopwords;
  std::size_t min_count = 5;
  bool downsample = true;

  annotate::ModelConfig model;
  std::string mock;  // empty: HTTP backend; "builtin" or a rules file
  std::size_t workers = 4;
  std::optional<std::filesystem::path> cache_dir;  // default <output>/cache
  std::optional<std::filesystem::path> prompts;

  std::optional<std::filesystem::path> analysis;

  std::vector<std::filesystem::path> reliability_rounds;  // CSV passage_id,annotator_id,label
  std::optional<std::filesystem::path> overrides;
  std::optional<std::filesystem::path> spotcheck;  // CSV passage_id,affect,impact

  std::filesystem::path cache_root() const { return cache_dir ? *cache_dir : output / "cache"; }
};

// Missing keys keep their defaults; relative paths resolve against `base`.
RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base = {});
RunConfig load_run_config(const std::filesystem::path& path);

// Throws ConfigError if a referenced input file does not exist.
void check_paths(const RunConfig& config);

// Subcommands. Each reads its inputs from the config and the output tree and
// writes its artifacts under config.output.
void cmd_ingest(const RunConfig& config, std::ostream& out);
void cmd_segment(const RunConfig& config, std::ostream& out);
void cmd_topics_train(const RunConfig& config, std::ostream& out);
void cmd_topics_inspect(const RunConfig& config, std::ostream& out);
void cmd_annotate(const RunConfig& config, std::ostream& out);
void cmd_eval(const RunConfig& config, std::ostream& out);
void cmd_stats(const RunConfig& config, std::ostream& out);
void cmd_report(const RunConfig& config, std::ostream& out);

// Plot-ready CSV tables keyed by file name, from stats.json.
std::map<std::string, std::string> figure_data(const nlohmann::json& stats);

// Markdown summary of stats.json and, when present, metrics.json. Numbers are
// formatted from the JSON values only.
std::string markdown_summary(const nlohmann::json& stats, const nlohmann::json* metrics);

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitRuntime = 2;
inline constexpr int kExitUsage = 64;

// args excludes the program name. Failures after the output directory is
// known also write <output>/error.json.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace godspell::report

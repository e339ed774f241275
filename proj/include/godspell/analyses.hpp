#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "godspell/annotate.hpp"
#include "godspell/corpus.hpp"
#include "godspell/stats.hpp"
#include "godspell/topics.hpp"

// Novel-level descriptive analyses over pipeline annotations and topic
// prominences, and the group comparisons run on them.
namespace godspell::stats {

// One value per novel, in corpus order.
struct NovelSeries {
  std::string name;
  std::vector<std::string> novel_ids;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  std::optional<double> value_of(std::string_view id) const;
};

struct NovelActCount {
  std::string novel_id;
  std::size_t yes = 0;
  std::size_t passages = 0;
  std::size_t unresolved = 0;
};

struct ActProportions {
  NovelSeries share;                // yes / passages per novel
  std::vector<NovelActCount> counts;
  std::size_t yes = 0;
  std::size_t passages = 0;
  std::size_t unresolved = 0;       // verdict never settled; counted as NO
  double corpus_share = 0.0;
  double mean_share = 0.0;          // unweighted mean over novels
  double min_share = 0.0;
  double max_share = 0.0;
};

// Novels follow `novels` order; novels without annotations are skipped with a
// warning. Annotations for novels not in the list are an error.
ActProportions act_proportions(const std::vector<annotate::ActAnnotation>& records,
                               const std::vector<corpus::Novel>& novels);

struct PositionDensity {
  std::size_t bins = 0;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<std::size_t> counts;
  std::vector<double> density;  // count / (n * width); zero everywhere when n == 0
  std::size_t acts = 0;
  std::optional<double> mean_position;
};

// Histogram over [0, 1]; position 1 falls in the last bin.
PositionDensity position_density(std::span<const double> positions, std::size_t bins = 20);

// Positions of final-YES records, looked up by passage ref.
PositionDensity position_density(const std::vector<annotate::ActAnnotation>& records,
                                 const std::vector<corpus::Passage>& passages, std::size_t bins = 20);

enum class Grouping { gender, series };
std::string_view to_string(Grouping g);
Grouping parse_grouping(std::string_view s);

struct GroupFilters {
  std::optional<std::string> exclude_series;  // drop novels carrying this tag
  bool exclude_mixed_gender = false;          // always on for gender comparisons
};

struct GroupComparison {
  Grouping grouping = Grouping::gender;
  std::string label_a;
  std::string label_b;
  std::vector<std::string> ids_a;
  std::vector<std::string> ids_b;
  std::vector<std::string> excluded;
  TestResult result;
};

// Gender: female (a) vs male (b). Series: novels tagged `series_tag` (a) vs
// the rest (b). Throws StatsError naming the filters if a group ends up empty.
GroupComparison group_compare(const NovelSeries& series, const std::vector<corpus::Novel>& novels, Grouping grouping,
                              const GroupFilters& filters, const std::string& series_tag = {},
                              bool equal_variance = true);

struct NovelCharacterization {
  std::string novel_id;
  std::size_t acts = 0;  // final-YES records with both affect and impact
  std::map<annotate::Affect, std::size_t> affect;
  std::map<annotate::Impact, std::size_t> impact;
};

struct CharacterizationShares {
  std::vector<NovelCharacterization> novels;
  NovelSeries individual;
  NovelSeries group;
  NovelSeries loving;
  NovelSeries punishing;
  NovelSeries both;
  NovelSeries neutral;
  std::vector<std::string> excluded;  // novels without characterized acts
  std::size_t acts = 0;
  std::size_t uncharacterized = 0;    // final YES but characterization unresolved
  std::map<annotate::Affect, std::size_t> affect;
  std::map<annotate::Impact, std::size_t> impact;
  std::map<annotate::Affect, std::map<annotate::Impact, std::size_t>> impact_by_affect;
};

CharacterizationShares characterization_shares(const std::vector<annotate::ActAnnotation>& records,
                                               const std::vector<corpus::Novel>& novels);

// ---------------------------------------------------------------------------
// Analysis configuration and the combined results document

struct ComparisonSpec {
  std::string name;
  std::string measure;  // act_share, individual_share, group_share, loving_share,
                        // punishing_share, both_share, neutral_share, topic:<group>
  Grouping grouping = Grouping::gender;
  bool exclude_series = false;
  bool exclude_mixed_gender = false;
};

struct CorrelationSpec {
  std::string name;
  std::string x;
  std::string y;
};

struct AnalysisConfig {
  std::string series_tag;
  std::size_t position_bins = 20;
  bool equal_variance = true;
  std::size_t top_words = 10;
  std::optional<std::filesystem::path> topic_labels;
  std::map<std::string, std::vector<std::size_t>> topic_groups;
  std::vector<ComparisonSpec> comparisons;
  std::vector<CorrelationSpec> correlations;
};

// Relative paths resolve against the file's directory.
AnalysisConfig load_analysis_config(const std::filesystem::path& path);
AnalysisConfig parse_analysis_config(const nlohmann::json& j, const std::filesystem::path& base = {});

struct AnalysisInputs {
  const std::vector<corpus::Novel>* novels = nullptr;
  const std::vector<corpus::Passage>* passages = nullptr;
  const std::vector<annotate::ActAnnotation>* annotations = nullptr;
  const topics::TopicModel* model = nullptr;  // optional
  std::map<std::size_t, std::string> topic_labels;
};

// Every number the report shows. Failed comparisons or correlations are
// recorded with an "error" field instead of aborting.
nlohmann::ordered_json analyze(const AnalysisInputs& in, const AnalysisConfig& config);

}  // namespace godspell::stats

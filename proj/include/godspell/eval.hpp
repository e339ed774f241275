#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "godspell/annotate.hpp"
#include "godspell/error.hpp"

// Inter-annotator agreement, gold-label resolution, and scoring of pipeline
// verdicts against gold.
namespace godspell::eval {

class EvalError : public Error {
 public:
  using Error::Error;
};

enum class Label { yes, maybe, no };
enum class Binary { yes, no };

std::string_view to_string(Label l);
std::string_view to_string(Binary b);
Label parse_label(std::string_view s);  // YES / MAYBE / NO, case-insensitive

// Items x annotators; nullopt marks a missing label.
struct ReliabilityData {
  std::vector<std::string> items;
  std::vector<std::string> annotators;
  std::vector<std::vector<std::optional<Label>>> labels;

  void validate() const;
  std::size_t item_index(std::string_view id) const;  // npos if absent
};

// CSV `passage_id,annotator_id,label`. Items and annotators keep first-seen order.
ReliabilityData read_reliability(const std::filesystem::path& path);

// Nominal Krippendorff's alpha from the coincidence matrix. Throws EvalError
// when no item has two labels or when expected disagreement is zero.
double krippendorff_alpha(const ReliabilityData& data);

// MAYBE -> YES, otherwise unchanged.
Binary convert_maybe(Label l);
std::vector<Binary> convert_maybe(const std::vector<Label>& labels);

// ---------------------------------------------------------------------------
// Gold labels

struct ResolvedLabel {
  Label label = Label::no;
  bool resolved_by_discussion = false;
  std::string note;
};

using ResolvedLabels = std::map<std::string, ResolvedLabel>;

struct GoldItem {
  Binary label = Binary::no;
  bool resolved_by_discussion = false;
  std::string note;
};

using GoldSet = std::map<std::string, GoldItem>;

struct Override {
  Label label = Label::no;
  std::string note;
};

// CSV `passage_id,label,resolution_note`.
std::map<std::string, Override> read_overrides(const std::filesystem::path& path);

// Unanimous items take their label; overrides win wherever given. Items whose
// annotators disagree without an override are an error listing them.
ResolvedLabels resolve_labels(const ReliabilityData& data, const std::map<std::string, Override>& overrides);

GoldSet to_gold(const ResolvedLabels& labels);

// Uniform sample without replacement of up to per_class ids from each of
// YES, MAYBE, NO (ids sorted before sampling). Short classes are taken whole
// with a warning, or rejected when strict and empty.
std::vector<std::string> stratified_sample(const ResolvedLabels& labels, std::size_t per_class, std::uint64_t seed,
                                           bool strict = false);

// ---------------------------------------------------------------------------
// Scoring

struct Confusion {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::size_t total() const { return tp + fp + fn + tn; }
};

// YES is positive. The key sets must match exactly.
Confusion confusion(const std::map<std::string, Binary>& gold, const std::map<std::string, Binary>& predicted);
Confusion confusion(const GoldSet& gold, const std::map<std::string, Binary>& predicted);

struct LabelMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool zero_division = false;  // some ratio had a zero denominator and was set to 0
};

struct PrfReport {
  LabelMetrics yes;
  LabelMetrics no;
  double micro_f1 = 0.0;  // equals accuracy for single-label binary data
};

double f1_score(double precision, double recall);
PrfReport prf(const Confusion& c);

// Final verdicts keyed by passage ref. Records unresolved before a verdict
// count as NO; `unresolved` receives how many.
std::map<std::string, Binary> predicted_labels(const std::vector<annotate::ActAnnotation>& records,
                                               std::size_t* unresolved = nullptr);

struct FacetAgreement {
  std::size_t matches = 0;
  std::size_t total = 0;
  double percent = 0.0;
};

// Exact-match agreement over the ids present in both maps.
FacetAgreement spotcheck_agreement(const std::map<std::string, std::string>& human,
                                   const std::map<std::string, std::string>& model);

nlohmann::ordered_json to_json(const Confusion& c);
nlohmann::ordered_json to_json(const PrfReport& r);

}  // namespace godspell::eval

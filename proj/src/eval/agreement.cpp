#include <algorithm>
#include <array>

#include "godspell/csv.hpp"
#include "godspell/eval.hpp"
#include "godspell/log.hpp"
#include "godspell/rng.hpp"

namespace godspell::eval {
namespace {

constexpr std::size_t kNumLabels = 3;

std::string upper_trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  std::string out(s.substr(first, last - first + 1));
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::toupper(c); });
  return out;
}

std::string line_ref(const std::filesystem::path& path, const csv::Table& t, std::size_t r) {
  return path.string() + ": line " + std::to_string(t.line_numbers[r]);
}

}  // namespace

std::string_view to_string(Label l) {
  switch (l) {
    case Label::yes: return "YES";
    case Label::maybe: return "MAYBE";
    case Label::no: break;
  }
  return "NO";
}

std::string_view to_string(Binary b) { return b == Binary::yes ? "YES" : "NO"; }

Label parse_label(std::string_view s) {
  const auto v = upper_trim(s);
  if (v == "YES") return Label::yes;
  if (v == "MAYBE") return Label::maybe;
  if (v == "NO") return Label::no;
  throw EvalError("unrecognized label '" + std::string(s) + "' (expected YES, MAYBE or NO)");
}

void ReliabilityData::validate() const {
  if (labels.size() != items.size()) throw EvalError("reliability data: label rows do not match items");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].size() != annotators.size()) throw EvalError("reliability data: ragged label matrix");
    if (std::none_of(labels[i].begin(), labels[i].end(), [](const auto& l) { return l.has_value(); })) {
      throw EvalError("reliability data: item '" + items[i] + "' has no labels");
    }
  }
}

std::size_t ReliabilityData::item_index(std::string_view id) const {
  auto it = std::find(items.begin(), items.end(), id);
  return it == items.end() ? std::string::npos : static_cast<std::size_t>(it - items.begin());
}

ReliabilityData read_reliability(const std::filesystem::path& path) {
  const auto table = csv::read_table(path);
  const auto c_item = csv::column(table, "passage_id", path);
  const auto c_annotator = csv::column(table, "annotator_id", path);
  const auto c_label = csv::column(table, "label", path);

  ReliabilityData data;
  std::map<std::string, std::size_t> item_ids, annotator_ids;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    if (row.size() <= std::max({c_item, c_annotator, c_label})) throw ConfigError(line_ref(path, table, r) + ": too few fields");
    Label label;
    try {
      label = parse_label(row[c_label]);
    } catch (const EvalError& e) {
      throw ConfigError(line_ref(path, table, r) + ": " + e.what());
    }
    auto [it, new_item] = item_ids.try_emplace(row[c_item], data.items.size());
    if (new_item) {
      data.items.push_back(row[c_item]);
      data.labels.emplace_back(data.annotators.size());
    }
    auto [at, new_annotator] = annotator_ids.try_emplace(row[c_annotator], data.annotators.size());
    if (new_annotator) {
      data.annotators.push_back(row[c_annotator]);
      for (auto& l : data.labels) l.emplace_back();
    }
    auto& cell = data.labels[it->second][at->second];
    if (cell && *cell != label) {
      throw ConfigError(line_ref(path, table, r) + ": annotator '" + row[c_annotator] + "' gave conflicting labels for '" +
                        row[c_item] + "'");
    }
    cell = label;
  }
  data.validate();
  return data;
}

double krippendorff_alpha(const ReliabilityData& data) {
  data.validate();
  std::array<std::array<double, kNumLabels>, kNumLabels> coincidence{};
  for (const auto& row : data.labels) {
    std::array<double, kNumLabels> counts{};
    double m = 0.0;
    for (const auto& l : row) {
      if (!l) continue;
      counts[static_cast<std::size_t>(*l)] += 1.0;
      m += 1.0;
    }
    if (m < 2.0) continue;
    for (std::size_t c = 0; c < kNumLabels; ++c) {
      for (std::size_t k = 0; k < kNumLabels; ++k) {
        coincidence[c][k] += counts[c] * (counts[k] - (c == k ? 1.0 : 0.0)) / (m - 1.0);
      }
    }
  }

  std::array<double, kNumLabels> marginals{};
  double n = 0.0;
  double observed = 0.0;
  for (std::size_t c = 0; c < kNumLabels; ++c) {
    for (std::size_t k = 0; k < kNumLabels; ++k) {
      marginals[c] += coincidence[c][k];
      if (c != k) observed += coincidence[c][k];
    }
    n += marginals[c];
  }
  if (n == 0.0) throw EvalError("alpha undefined: no item has two or more labels");

  double expected = 0.0;
  for (std::size_t c = 0; c < kNumLabels; ++c) {
    for (std::size_t k = 0; k < kNumLabels; ++k) {
      if (c != k) expected += marginals[c] * marginals[k];
    }
  }
  if (expected == 0.0) throw EvalError("alpha undefined: expected disagreement is zero (all labels identical)");
  return 1.0 - (n - 1.0) * observed / expected;
}

Binary convert_maybe(Label l) { return l == Label::no ? Binary::no : Binary::yes; }

std::vector<Binary> convert_maybe(const std::vector<Label>& labels) {
  std::vector<Binary> out;
  out.reserve(labels.size());
  for (auto l : labels) out.push_back(convert_maybe(l));
  return out;
}

std::map<std::string, Override> read_overrides(const std::filesystem::path& path) {
  const auto table = csv::read_table(path);
  const auto c_item = csv::column(table, "passage_id", path);
  const auto c_label = csv::column(table, "label", path);
  const auto c_note = csv::column(table, "resolution_note", path);
  std::map<std::string, Override> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    if (row.size() <= std::max({c_item, c_label, c_note})) throw ConfigError(line_ref(path, table, r) + ": too few fields");
    try {
      out[row[c_item]] = Override{parse_label(row[c_label]), row[c_note]};
    } catch (const EvalError& e) {
      throw ConfigError(line_ref(path, table, r) + ": " + e.what());
    }
  }
  return out;
}

ResolvedLabels resolve_labels(const ReliabilityData& data, const std::map<std::string, Override>& overrides) {
  data.validate();
  ResolvedLabels out;
  std::vector<std::string> unresolved;
  for (std::size_t i = 0; i < data.items.size(); ++i) {
    const auto& id = data.items[i];
    if (auto o = overrides.find(id); o != overrides.end()) {
      out[id] = ResolvedLabel{o->second.label, true, o->second.note};
      continue;
    }
    std::optional<Label> agreed;
    bool disagree = false;
    for (const auto& l : data.labels[i]) {
      if (!l) continue;
      if (agreed && *agreed != *l) disagree = true;
      agreed = l;
    }
    if (disagree) {
      unresolved.push_back(id);
    } else {
      out[id] = ResolvedLabel{*agreed, false, {}};
    }
  }
  if (!unresolved.empty()) {
    std::string list;
    for (const auto& id : unresolved) list += (list.empty() ? "" : ", ") + id;
    throw EvalError(std::to_string(unresolved.size()) + " item(s) with annotator disagreement need an override: " + list);
  }
  return out;
}

GoldSet to_gold(const ResolvedLabels& labels) {
  GoldSet gold;
  for (const auto& [id, r] : labels) gold[id] = GoldItem{convert_maybe(r.label), r.resolved_by_discussion, r.note};
  return gold;
}

std::vector<std::string> stratified_sample(const ResolvedLabels& labels, std::size_t per_class, std::uint64_t seed,
                                           bool strict) {
  Rng rng(seed);
  std::vector<std::string> out;
  for (Label cls : {Label::yes, Label::maybe, Label::no}) {
    std::vector<std::string> ids;
    for (const auto& [id, r] : labels) {
      if (r.label == cls) ids.push_back(id);
    }
    if (ids.empty() && strict) throw EvalError("stratified_sample: no items labeled " + std::string(to_string(cls)));
    if (ids.size() < per_class) {
      log::warn("stratified_sample: only " + std::to_string(ids.size()) + " items labeled " +
                std::string(to_string(cls)) + ", taking all");
    }
    const std::size_t take = std::min(per_class, ids.size());
    for (std::size_t i = 0; i < take; ++i) {
      const auto j = i + static_cast<std::size_t>(rng.below(ids.size() - i));
      std::swap(ids[i], ids[j]);
      out.push_back(ids[i]);
    }
  }
  return out;
}

}  // namespace godspell::eval

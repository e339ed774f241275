#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include "godspell/analyses.hpp"
#include "godspell/log.hpp"

namespace godspell::stats {
namespace {

using annotate::Affect;
using annotate::Impact;
using Json = nlohmann::ordered_json;

constexpr Affect kAffects[] = {Affect::individual, Affect::group};
constexpr Impact kImpacts[] = {Impact::loving, Impact::punishing, Impact::both, Impact::neutral};

std::unordered_map<std::string, std::size_t> novel_index(const std::vector<corpus::Novel>& novels) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < novels.size(); ++i) index.emplace(novels[i].id, i);
  return index;
}

std::size_t lookup(const std::unordered_map<std::string, std::size_t>& index, const std::string& id) {
  auto it = index.find(id);
  if (it == index.end()) throw StatsError("annotation refers to unknown novel '" + id + "'");
  return it->second;
}

bool characterized_yes(const annotate::ActAnnotation& r) {
  return r.final_label == annotate::Verdict::yes && r.affect && r.impact;
}

double share(std::size_t num, std::size_t den) {
  return den ? static_cast<double>(num) / static_cast<double>(den) : 0.0;
}

std::string_view gender_name(corpus::GenderGroup g) {
  switch (g) {
    case corpus::GenderGroup::female: return "female";
    case corpus::GenderGroup::male: return "male";
    case corpus::GenderGroup::mixed: break;
  }
  return "mixed";
}

Json test_json(const TestResult& t) {
  return {{"statistic", t.statistic}, {"df", t.df},         {"p_two_sided", t.p_two_sided},
          {"equal_variance", t.equal_variance}, {"degenerate", t.degenerate}};
}

}  // namespace

std::optional<double> NovelSeries::value_of(std::string_view id) const {
  for (std::size_t i = 0; i < novel_ids.size(); ++i) {
    if (novel_ids[i] == id) return values[i];
  }
  return std::nullopt;
}

ActProportions act_proportions(const std::vector<annotate::ActAnnotation>& records,
                               const std::vector<corpus::Novel>& novels) {
  const auto index = novel_index(novels);
  std::vector<NovelActCount> counts(novels.size());
  for (std::size_t i = 0; i < novels.size(); ++i) counts[i].novel_id = novels[i].id;

  ActProportions out;
  out.share.name = "act_share";
  for (const auto& r : records) {
    auto& c = counts[lookup(index, r.novel_id)];
    ++c.passages;
    if (r.detection_unresolved()) ++c.unresolved;
    if (r.final_label == annotate::Verdict::yes) ++c.yes;
  }

  for (auto& c : counts) {
    if (c.passages == 0) {
      log::warn("novel '" + c.novel_id + "' has no annotated passages; excluded from act proportions");
      continue;
    }
    out.yes += c.yes;
    out.passages += c.passages;
    out.unresolved += c.unresolved;
    out.share.novel_ids.push_back(c.novel_id);
    out.share.values.push_back(share(c.yes, c.passages));
    out.counts.push_back(c);
  }
  out.corpus_share = share(out.yes, out.passages);
  if (!out.share.values.empty()) {
    out.mean_share = mean(out.share.values);
    const auto [lo, hi] = std::minmax_element(out.share.values.begin(), out.share.values.end());
    out.min_share = *lo;
    out.max_share = *hi;
  }
  return out;
}

PositionDensity position_density(std::span<const double> positions, std::size_t bins) {
  if (bins == 0) throw StatsError("position_density: bins must be positive");
  PositionDensity h;
  h.bins = bins;
  h.counts.assign(bins, 0);
  h.density.assign(bins, 0.0);
  const double width = 1.0 / static_cast<double>(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    h.lower.push_back(static_cast<double>(b) / static_cast<double>(bins));
    h.upper.push_back(static_cast<double>(b + 1) / static_cast<double>(bins));
  }

  double sum = 0.0;
  for (double p : positions) {
    if (!(p >= 0.0 && p <= 1.0)) throw StatsError("position_density: position outside [0, 1]");
    const auto b = std::min(bins - 1, static_cast<std::size_t>(p * static_cast<double>(bins)));
    ++h.counts[b];
    sum += p;
  }
  h.acts = positions.size();
  if (h.acts > 0) {
    for (std::size_t b = 0; b < bins; ++b) {
      h.density[b] = static_cast<double>(h.counts[b]) / (static_cast<double>(h.acts) * width);
    }
    h.mean_position = sum / static_cast<double>(h.acts);
  }
  return h;
}

PositionDensity position_density(const std::vector<annotate::ActAnnotation>& records,
                                 const std::vector<corpus::Passage>& passages, std::size_t bins) {
  std::unordered_map<std::string, double> position;
  for (const auto& p : passages) position.emplace(p.ref(), p.normalized_position);
  std::vector<double> acts;
  for (const auto& r : records) {
    if (r.final_label != annotate::Verdict::yes) continue;
    auto it = position.find(r.passage);
    if (it == position.end()) throw StatsError("annotation refers to unknown passage '" + r.passage + "'");
    acts.push_back(it->second);
  }
  return position_density(acts, bins);
}

std::string_view to_string(Grouping g) { return g == Grouping::gender ? "gender" : "series"; }

Grouping parse_grouping(std::string_view s) {
  if (s == "gender") return Grouping::gender;
  if (s == "series") return Grouping::series;
  throw ConfigError("unknown grouping '" + std::string(s) + "' (expected gender or series)");
}

GroupComparison group_compare(const NovelSeries& series, const std::vector<corpus::Novel>& novels, Grouping grouping,
                              const GroupFilters& filters, const std::string& series_tag, bool equal_variance) {
  if (grouping == Grouping::series && series_tag.empty()) throw StatsError("series comparison needs a series tag");
  const auto index = novel_index(novels);
  const bool drop_mixed = filters.exclude_mixed_gender || grouping == Grouping::gender;

  GroupComparison g;
  g.grouping = grouping;
  if (grouping == Grouping::gender) {
    g.label_a = "female";
    g.label_b = "male";
  } else {
    g.label_a = series_tag;
    g.label_b = "other";
  }

  std::vector<double> a, b;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& id = series.novel_ids[i];
    const auto& novel = novels[lookup(index, id)];
    const auto gender = corpus::gender_group(novel);
    if ((filters.exclude_series && novel.in_series(*filters.exclude_series)) ||
        (drop_mixed && gender == corpus::GenderGroup::mixed)) {
      g.excluded.push_back(id);
      continue;
    }
    const bool in_a = grouping == Grouping::gender ? gender == corpus::GenderGroup::female : novel.in_series(series_tag);
    (in_a ? g.ids_a : g.ids_b).push_back(id);
    (in_a ? a : b).push_back(series.values[i]);
  }

  auto describe = [&] {
    std::string s;
    if (filters.exclude_series) s += "exclude series '" + *filters.exclude_series + "'";
    if (drop_mixed) s += std::string(s.empty() ? "" : ", ") + "exclude mixed-gender authorship";
    return s.empty() ? std::string("no filters") : s;
  };
  for (const auto& [label, n] : {std::pair{g.label_a, a.size()}, std::pair{g.label_b, b.size()}}) {
    if (n == 0) throw StatsError("group '" + label + "' of " + series.name + " is empty after filters (" + describe() + ")");
  }
  g.result = ttest_ind(a, b, equal_variance);
  return g;
}

CharacterizationShares characterization_shares(const std::vector<annotate::ActAnnotation>& records,
                                               const std::vector<corpus::Novel>& novels) {
  const auto index = novel_index(novels);
  CharacterizationShares out;
  std::vector<NovelCharacterization> per(novels.size());
  for (std::size_t i = 0; i < novels.size(); ++i) per[i].novel_id = novels[i].id;

  for (const auto& r : records) {
    auto& n = per[lookup(index, r.novel_id)];
    if (r.final_label != annotate::Verdict::yes) continue;
    if (!characterized_yes(r)) {
      ++out.uncharacterized;
      continue;
    }
    ++n.acts;
    ++n.affect[*r.affect];
    ++n.impact[*r.impact];
    ++out.acts;
    ++out.affect[*r.affect];
    ++out.impact[*r.impact];
    ++out.impact_by_affect[*r.affect][*r.impact];
  }

  out.individual.name = "individual_share";
  out.group.name = "group_share";
  out.loving.name = "loving_share";
  out.punishing.name = "punishing_share";
  out.both.name = "both_share";
  out.neutral.name = "neutral_share";
  auto push = [](NovelSeries& s, const std::string& id, std::size_t num, std::size_t den) {
    s.novel_ids.push_back(id);
    s.values.push_back(share(num, den));
  };
  for (auto& n : per) {
    if (n.acts == 0) {
      log::warn("novel '" + n.novel_id + "' has no characterized acts; excluded from characterization shares");
      out.excluded.push_back(n.novel_id);
      continue;
    }
    push(out.individual, n.novel_id, n.affect[Affect::individual], n.acts);
    push(out.group, n.novel_id, n.affect[Affect::group], n.acts);
    push(out.loving, n.novel_id, n.impact[Impact::loving], n.acts);
    push(out.punishing, n.novel_id, n.impact[Impact::punishing], n.acts);
    push(out.both, n.novel_id, n.impact[Impact::both], n.acts);
    push(out.neutral, n.novel_id, n.impact[Impact::neutral], n.acts);
    out.novels.push_back(std::move(n));
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

void check_keys(const nlohmann::json& j, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError("analysis config: " + where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError("analysis config: unknown key '" + key + "' in " + where);
    }
  }
}

constexpr std::string_view kMeasures[] = {"act_share",       "individual_share", "group_share", "loving_share",
                                          "punishing_share", "both_share",       "neutral_share"};

void check_measure(const AnalysisConfig& c, const std::string& measure, const std::string& where) {
  if (std::find(std::begin(kMeasures), std::end(kMeasures), measure) != std::end(kMeasures)) return;
  if (measure.starts_with("topic:") && c.topic_groups.contains(measure.substr(6))) return;
  throw ConfigError("analysis config: " + where + " uses unknown measure '" + measure + "'");
}

}  // namespace

AnalysisConfig parse_analysis_config(const nlohmann::json& j, const std::filesystem::path& base) {
  AnalysisConfig c;
  check_keys(j,
             {"series_tag", "position_bins", "equal_variance", "top_words", "topic_labels", "topic_groups",
              "comparisons", "correlations"},
             "top level");
  try {
    c.series_tag = j.value("series_tag", std::string{});
    c.position_bins = j.value("position_bins", c.position_bins);
    c.equal_variance = j.value("equal_variance", c.equal_variance);
    c.top_words = j.value("top_words", c.top_words);
    if (j.contains("topic_labels")) {
      c.topic_labels = base / j.at("topic_labels").get<std::string>();
      if (!std::filesystem::exists(*c.topic_labels)) {
        throw ConfigError("topic label file not found: " + c.topic_labels->string());
      }
    }
    if (j.contains("topic_groups")) {
      for (const auto& [name, topics] : j.at("topic_groups").items()) {
        c.topic_groups[name] = topics.get<std::vector<std::size_t>>();
        if (c.topic_groups[name].empty()) throw ConfigError("topic group '" + name + "' is empty");
      }
    }
    for (const auto& e : j.value("comparisons", nlohmann::json::array())) {
      check_keys(e, {"name", "measure", "grouping", "exclude_series", "exclude_mixed_gender"}, "a comparison");
      ComparisonSpec s;
      s.name = e.at("name").get<std::string>();
      s.measure = e.at("measure").get<std::string>();
      s.grouping = parse_grouping(e.at("grouping").get<std::string>());
      s.exclude_series = e.value("exclude_series", false);
      s.exclude_mixed_gender = e.value("exclude_mixed_gender", false);
      check_measure(c, s.measure, "comparison '" + s.name + "'");
      if ((s.grouping == Grouping::series || s.exclude_series) && c.series_tag.empty()) {
        throw ConfigError("comparison '" + s.name + "' needs series_tag");
      }
      c.comparisons.push_back(std::move(s));
    }
    for (const auto& e : j.value("correlations", nlohmann::json::array())) {
      check_keys(e, {"name", "x", "y"}, "a correlation");
      c.correlations.push_back({e.at("name").get<std::string>(), e.at("x").get<std::string>(), e.at("y").get<std::string>()});
      check_measure(c, c.correlations.back().x, "correlation '" + c.correlations.back().name + "'");
      check_measure(c, c.correlations.back().y, "correlation '" + c.correlations.back().name + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("analysis config: ") + e.what());
  }
  if (c.position_bins == 0) throw ConfigError("analysis config: position_bins must be positive");
  return c;
}

AnalysisConfig load_analysis_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read analysis config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_analysis_config(j, path.parent_path());
}

namespace {

struct Measures {
  std::map<std::string, NovelSeries> series;
  std::vector<topics::NovelTopicProminence> prominence;
};

NovelSeries topic_series(const std::string& name, const std::vector<std::size_t>& topics,
                         const std::vector<topics::NovelTopicProminence>& prominence) {
  NovelSeries s;
  s.name = name;
  for (const auto& p : prominence) {
    double v = 0.0;
    for (auto k : topics) {
      if (k >= p.percent.size()) throw ConfigError("topic " + std::to_string(k) + " in " + name + " is out of range");
      v += p.percent[k];
    }
    s.novel_ids.push_back(p.novel_id);
    s.values.push_back(v);
  }
  return s;
}

const NovelSeries& find_measure(const Measures& m, const std::string& name) {
  auto it = m.series.find(name);
  if (it == m.series.end()) throw StatsError("unknown measure '" + name + "'");
  return it->second;
}

Json novel_row(const corpus::Novel& n, const std::string& series_tag) {
  Json j;
  j["novel_id"] = n.id;
  j["title"] = n.title;
  j["year"] = n.year;
  j["gender_group"] = gender_name(corpus::gender_group(n));
  j["in_series"] = !series_tag.empty() && n.in_series(series_tag);
  return j;
}

}  // namespace

Json analyze(const AnalysisInputs& in, const AnalysisConfig& config) {
  if (!in.novels || !in.passages || !in.annotations) throw StatsError("analyze: missing inputs");
  const auto& novels = *in.novels;
  const auto index = novel_index(novels);
  Json out;

  const auto ps = corpus::passage_statistics(*in.passages);
  Json corpus_json;
  corpus_json["novels"] = novels.size();
  corpus_json["passages"] = ps.passages;
  corpus_json["passages_per_novel"] = {{"mean", ps.mean_per_novel}, {"min", ps.min_per_novel}, {"max", ps.max_per_novel}};
  corpus_json["words_per_passage"] = {{"mean", ps.mean_words}, {"min", ps.min_words}, {"max", ps.max_words}};
  corpus_json["series_tag"] = config.series_tag;
  Json novel_rows = Json::array();
  for (const auto& n : novels) novel_rows.push_back(novel_row(n, config.series_tag));
  corpus_json["novel_list"] = std::move(novel_rows);
  out["corpus"] = std::move(corpus_json);

  Measures measures;
  const auto acts = act_proportions(*in.annotations, novels);
  measures.series["act_share"] = acts.share;
  {
    Json j;
    j["passages"] = acts.passages;
    j["yes"] = acts.yes;
    j["unresolved"] = acts.unresolved;
    j["share"] = acts.corpus_share;
    j["per_novel"] = {{"mean", acts.mean_share}, {"min", acts.min_share}, {"max", acts.max_share}};
    Json rows = Json::array();
    for (std::size_t i = 0; i < acts.counts.size(); ++i) {
      const auto& c = acts.counts[i];
      auto row = novel_row(novels[index.at(c.novel_id)], config.series_tag);
      row["yes"] = c.yes;
      row["passages"] = c.passages;
      row["unresolved"] = c.unresolved;
      row["share"] = acts.share.values[i];
      rows.push_back(std::move(row));
    }
    j["novels"] = std::move(rows);
    out["acts"] = std::move(j);
  }

  {
    const auto h = position_density(*in.annotations, *in.passages, config.position_bins);
    Json j;
    j["bins"] = h.bins;
    j["acts"] = h.acts;
    j["mean_position"] = h.mean_position ? Json(*h.mean_position) : Json(nullptr);
    Json rows = Json::array();
    for (std::size_t b = 0; b < h.bins; ++b) {
      rows.push_back({{"bin", b}, {"lower", h.lower[b]}, {"upper", h.upper[b]}, {"count", h.counts[b]},
                      {"density", h.density[b]}});
    }
    j["histogram"] = std::move(rows);
    out["position"] = std::move(j);
  }

  {
    const auto cs = characterization_shares(*in.annotations, novels);
    for (const auto* s : {&cs.individual, &cs.group, &cs.loving, &cs.punishing, &cs.both, &cs.neutral}) {
      measures.series[s->name] = *s;
    }
    Json j;
    j["acts"] = cs.acts;
    j["uncharacterized"] = cs.uncharacterized;
    Json affect, impact, cross;
    for (auto a : kAffects) {
      const auto n = cs.affect.contains(a) ? cs.affect.at(a) : 0;
      affect[std::string(annotate::to_string(a))] = {{"count", n}, {"share", share(n, cs.acts)}};
      Json row;
      for (auto i : kImpacts) {
        const auto& m = cs.impact_by_affect;
        row[std::string(annotate::to_string(i))] = m.contains(a) && m.at(a).contains(i) ? m.at(a).at(i) : 0;
      }
      cross[std::string(annotate::to_string(a))] = std::move(row);
    }
    for (auto i : kImpacts) {
      const auto n = cs.impact.contains(i) ? cs.impact.at(i) : 0;
      impact[std::string(annotate::to_string(i))] = {{"count", n}, {"share", share(n, cs.acts)}};
    }
    j["affect"] = std::move(affect);
    j["impact"] = std::move(impact);
    j["impact_by_affect"] = std::move(cross);
    Json rows = Json::array();
    for (std::size_t i = 0; i < cs.novels.size(); ++i) {
      const auto& n = cs.novels[i];
      auto row = novel_row(novels[index.at(n.novel_id)], config.series_tag);
      row["acts"] = n.acts;
      row["individual_share"] = cs.individual.values[i];
      row["group_share"] = cs.group.values[i];
      row["loving_share"] = cs.loving.values[i];
      row["punishing_share"] = cs.punishing.values[i];
      row["both_share"] = cs.both.values[i];
      row["neutral_share"] = cs.neutral.values[i];
      rows.push_back(std::move(row));
    }
    j["novels"] = std::move(rows);
    j["excluded"] = cs.excluded;
    out["characterization"] = std::move(j);
  }

  if (in.model) {
    const auto& m = *in.model;
    measures.prominence = topics::novel_prominence(m.doc_topic, m.doc_novel, m.novel_ids);
    Json j;
    j["num_topics"] = m.num_topics;
    j["seed"] = m.seed;
    j["sweeps"] = m.sweeps;
    j["final_log_likelihood"] = m.log_likelihood.empty() ? Json(nullptr) : Json(m.log_likelihood.back());

    std::vector<double> avg(m.num_topics, 0.0);
    for (const auto& p : measures.prominence) {
      for (std::size_t k = 0; k < m.num_topics; ++k) avg[k] += p.percent[k];
    }
    for (auto& v : avg) v = measures.prominence.empty() ? 0.0 : v / static_cast<double>(measures.prominence.size());
    std::vector<std::size_t> order(m.num_topics);
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return avg[a] > avg[b]; });

    Json ranking = Json::array();
    for (std::size_t r = 0; r < order.size(); ++r) {
      const auto k = order[r];
      Json words = Json::array();
      for (const auto& [w, c] : topics::top_words(m, k, config.top_words)) words.push_back(w);
      auto label = in.topic_labels.find(k);
      ranking.push_back({{"rank", r + 1},
                         {"topic", k},
                         {"label", label == in.topic_labels.end() ? std::string{} : label->second},
                         {"mean_prominence", avg[k]},
                         {"top_words", std::move(words)}});
    }
    j["ranking"] = std::move(ranking);

    Json groups = Json::object();
    for (const auto& [name, topics] : config.topic_groups) {
      auto s = topic_series("topic:" + name, topics, measures.prominence);
      groups[name] = {{"topics", topics}, {"mean", s.values.empty() ? 0.0 : mean(s.values)}};
      measures.series[s.name] = std::move(s);
    }
    j["groups"] = std::move(groups);

    Json rows = Json::array();
    for (const auto& p : measures.prominence) {
      Json row{{"novel_id", p.novel_id}};
      for (const auto& [name, topics] : config.topic_groups) {
        row[name] = *measures.series.at("topic:" + name).value_of(p.novel_id);
      }
      row["percent"] = p.percent;
      rows.push_back(std::move(row));
    }
    j["novels"] = std::move(rows);
    out["topics"] = std::move(j);
  } else {
    out["topics"] = nullptr;
  }

  Json correlations = Json::array();
  for (const auto& spec : config.correlations) {
    Json j{{"name", spec.name}, {"x", spec.x}, {"y", spec.y}};
    try {
      const auto& x = find_measure(measures, spec.x);
      const auto& y = find_measure(measures, spec.y);
      std::vector<double> xs, ys;
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (auto v = y.value_of(x.novel_ids[i])) {
          xs.push_back(x.values[i]);
          ys.push_back(*v);
        }
      }
      const auto c = pearson(xs, ys);
      j["n"] = c.n;
      j["r"] = c.r;
      j["p_two_sided"] = c.p_two_sided;
    } catch (const StatsError& e) {
      j["error"] = e.what();
    }
    correlations.push_back(std::move(j));
  }
  out["correlations"] = std::move(correlations);

  Json comparisons = Json::array();
  for (const auto& spec : config.comparisons) {
    Json j{{"name", spec.name}, {"measure", spec.measure}, {"grouping", to_string(spec.grouping)}};
    GroupFilters filters;
    if (spec.exclude_series) filters.exclude_series = config.series_tag;
    filters.exclude_mixed_gender = spec.exclude_mixed_gender;
    j["filters"] = {{"exclude_series", spec.exclude_series},
                    {"exclude_mixed_gender", spec.exclude_mixed_gender || spec.grouping == Grouping::gender}};
    try {
      const auto g = group_compare(find_measure(measures, spec.measure), novels, spec.grouping, filters,
                                   config.series_tag, config.equal_variance);
      j["group_a"] = {{"label", g.label_a}, {"n", g.result.n_a}, {"mean", g.result.mean_a}, {"novels", g.ids_a}};
      j["group_b"] = {{"label", g.label_b}, {"n", g.result.n_b}, {"mean", g.result.mean_b}, {"novels", g.ids_b}};
      j["excluded"] = g.excluded;
      j["test"] = test_json(g.result);
    } catch (const StatsError& e) {
      j["error"] = e.what();
    }
    comparisons.push_back(std::move(j));
  }
  out["comparisons"] = std::move(comparisons);
  return out;
}

}  // namespace godspell::stats

#include <fstream>
#include <ostream>
#include <sstream>

#include "godspell/analyses.hpp"
#include "godspell/csv.hpp"
#include "godspell/eval.hpp"
#include "godspell/log.hpp"
#include "godspell/report.hpp"

namespace godspell::report {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

void write_text(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const auto tmp = fs::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << content;
    if (!out) throw Error("write failed: " + path.string());
  }
  fs::rename(tmp, path);
}

void write_json(const fs::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

nlohmann::json read_json(const fs::path& path, std::string_view produced_by) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string() + " not found; run `" + std::string(produced_by) + "` first");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

corpus::Corpus load_corpus(const RunConfig& c) {
  if (c.manifest.empty()) throw ConfigError("no corpus manifest configured (use --manifest or the config file)");
  return corpus::ingest(c.manifest);
}

std::vector<corpus::Passage> load_passages(const RunConfig& c) {
  const auto path = c.output / "passages.jsonl";
  if (!fs::exists(path)) throw ConfigError(path.string() + " not found; run `segment` first");
  return corpus::read_passages(path);
}

std::vector<annotate::ActAnnotation> load_annotations(const RunConfig& c) {
  const auto path = c.output / "annotations.jsonl";
  if (!fs::exists(path)) throw ConfigError(path.string() + " not found; run `annotate` first");
  return annotate::read_annotations(path);
}

stats::AnalysisConfig analysis_config(const RunConfig& c) {
  return c.analysis ? stats::load_analysis_config(*c.analysis) : stats::AnalysisConfig{};
}

std::map<std::size_t, std::string> topic_labels(const stats::AnalysisConfig& a) {
  std::map<std::size_t, std::string> out;
  if (a.topic_labels) {
    for (const auto& [k, v] : topics::read_topic_labels(*a.topic_labels)) out.emplace(k, v);
  }
  return out;
}

fs::path state_path(const RunConfig& c) { return c.output / "topics" / "state.json"; }

}  // namespace

void cmd_ingest(const RunConfig& c, std::ostream& out) {
  const auto corpus = load_corpus(c);
  Json novels = Json::array();
  std::size_t total = 0;
  for (const auto& n : corpus.novels) {
    const auto words = corpus::word_tokenize(n.text).size();
    total += words;
    Json authors = Json::array();
    for (const auto& a : n.authors) authors.push_back({{"name", a.name}, {"gender", corpus::to_string(a.gender)}});
    Json awards = Json::array();
    for (const auto& a : n.awards) {
      awards.push_back({{"category", a.category}, {"status", corpus::to_string(a.status)}, {"award_year", a.award_year}});
    }
    novels.push_back({{"id", n.id},
                      {"title", n.title},
                      {"authors", std::move(authors)},
                      {"publisher", n.publisher},
                      {"year", n.year},
                      {"series_tag", n.series_tag ? Json(*n.series_tag) : Json(nullptr)},
                      {"awards", std::move(awards)},
                      {"words", words}});
  }
  write_json(c.output / "corpus.json", {{"novels", std::move(novels)}, {"total_words", total}});
  out << "ingested " << corpus.novels.size() << " novels, " << total << " words\n";
}

void cmd_segment(const RunConfig& c, std::ostream& out) {
  const auto corpus = load_corpus(c);
  std::vector<corpus::Passage> passages;
  for (const auto& n : corpus.novels) {
    auto p = corpus::segment_capped(n, c.passage_cap);
    passages.insert(passages.end(), std::make_move_iterator(p.begin()), std::make_move_iterator(p.end()));
  }
  const auto path = c.output / "passages.jsonl";
  fs::create_directories(c.output);
  corpus::write_passages(path, passages);
  const auto s = corpus::passage_statistics(passages);
  out << "wrote " << s.passages << " passages from " << s.novels << " novels (" << s.min_words << "-" << s.max_words
      << " words each)\n";
}

void cmd_topics_train(const RunConfig& c, std::ostream& out) {
  const auto corpus = load_corpus(c);
  std::vector<corpus::Segment> segments;
  for (const auto& n : corpus.novels) {
    auto s = corpus::segment_fixed(n, c.segment_size);
    segments.insert(segments.end(), std::make_move_iterator(s.begin()), std::make_move_iterator(s.end()));
  }
  const auto stopwords = c.stopwords ? topics::read_stopwords(*c.stopwords) : topics::StopwordSet{};
  auto encoded = topics::build_vocabulary(segments, stopwords, c.min_count);
  const auto before = topics::token_count(encoded.docs);
  if (c.downsample) {
    encoded.docs = topics::authorless_downsample(encoded.docs, encoded.doc_novel, encoded.vocab.size(), c.topics.seed);
  }
  const auto result = topics::train(encoded.docs, encoded.vocab.size(), c.topics);
  const auto model = topics::summarize(result, encoded, c.topics.sweeps);
  fs::create_directories(state_path(c).parent_path());
  topics::save_model(state_path(c), model);
  out << "trained K=" << c.topics.num_topics << " on " << encoded.docs.size() << " segments, vocabulary "
      << encoded.vocab.size() << ", tokens " << topics::token_count(encoded.docs) << " of " << before << "\n";
}

void cmd_topics_inspect(const RunConfig& c, std::ostream& out) {
  if (!fs::exists(state_path(c))) throw ConfigError(state_path(c).string() + " not found; run `topics-train` first");
  const auto model = topics::load_model(state_path(c));
  const auto labels = topic_labels(analysis_config(c));
  const auto n_words = analysis_config(c).top_words;

  std::string csv_out = "topic,label,rank,word,count\n";
  for (std::size_t k = 0; k < model.num_topics; ++k) {
    const auto label = labels.contains(k) ? labels.at(k) : std::string{};
    out << "topic " << k;
    if (!label.empty()) out << " (" << label << ")";
    out << ":";
    std::size_t rank = 1;
    for (const auto& [w, n] : topics::top_words(model, k, n_words)) {
      csv_out += csv::join({std::to_string(k), label, std::to_string(rank++), w, std::to_string(n)}) + "\n";
      out << " " << w;
    }
    out << "\n";
  }
  write_text(c.output / "topics" / "top_words.csv", csv_out);
}

void cmd_annotate(const RunConfig& c, std::ostream& out) {
  const auto passages = load_passages(c);
  auto registry = annotate::PromptRegistry::defaults();
  if (c.prompts) registry.load(*c.prompts);

  std::unique_ptr<annotate::ModelBackend> backend;
  annotate::MockModel* mock = nullptr;
  if (c.mock.empty()) {
    backend = std::make_unique<annotate::HttpBackend>(c.model.endpoint, c.model.timeout_seconds);
  } else {
    auto m = std::make_unique<annotate::MockModel>(c.mock == "builtin" ? annotate::MockModel::builtin()
                                                                       : annotate::MockModel::from_file(c.mock));
    mock = m.get();
    backend = std::move(m);
  }

  const annotate::ResponseCache cache(c.cache_root());
  annotate::PipelineOptions options;
  options.workers = c.workers;
  const auto records = annotate::run_pipeline(passages, *backend, c.model, registry, cache, options);
  for (const auto& r : records) r.check_invariants();
  annotate::write_annotations(c.output / "annotations.jsonl", records);

  std::size_t s1 = 0, yes = 0, unresolved = 0;
  for (const auto& r : records) {
    if (r.stage1 && r.stage1->label == annotate::Verdict::yes) ++s1;
    if (r.final_label == annotate::Verdict::yes) ++yes;
    if (r.unresolved) ++unresolved;
  }
  if (unresolved) log::warn(std::to_string(unresolved) + " passage(s) unresolved; see annotations.jsonl");
  out << "annotated " << records.size() << " passages: " << s1 << " stage-1 YES, " << yes << " final YES, "
      << unresolved << " unresolved";
  if (mock) out << ", " << mock->calls() << " model calls";
  out << "\n";
}

void cmd_eval(const RunConfig& c, std::ostream& out) {
  if (c.reliability_rounds.empty()) throw ConfigError("no annotation rounds configured (eval.rounds)");
  Json metrics;

  Json rounds = Json::array();
  eval::ReliabilityData last;
  for (const auto& path : c.reliability_rounds) {
    last = eval::read_reliability(path);
    Json r{{"name", path.stem().string()}, {"items", last.items.size()}, {"annotators", last.annotators.size()}};
    try {
      r["alpha"] = eval::krippendorff_alpha(last);
    } catch (const eval::EvalError& e) {
      r["alpha"] = nullptr;
      r["error"] = e.what();
    }
    rounds.push_back(std::move(r));
  }
  metrics["rounds"] = std::move(rounds);

  const auto overrides = c.overrides ? eval::read_overrides(*c.overrides) : std::map<std::string, eval::Override>{};
  const auto resolved = eval::resolve_labels(last, overrides);
  const auto gold = eval::to_gold(resolved);
  std::size_t maybe = 0, discussed = 0, gold_yes = 0;
  for (const auto& [id, r] : resolved) {
    if (r.label == eval::Label::maybe) ++maybe;
    if (r.resolved_by_discussion) ++discussed;
  }
  for (const auto& [id, g] : gold) {
    if (g.label == eval::Binary::yes) ++gold_yes;
  }
  metrics["gold"] = {{"items", gold.size()},
                     {"yes", gold_yes},
                     {"no", gold.size() - gold_yes},
                     {"maybe_converted", maybe},
                     {"resolved_by_discussion", discussed}};

  const auto records = load_annotations(c);
  std::vector<annotate::ActAnnotation> scored;
  for (const auto& r : records) {
    if (gold.contains(r.passage)) scored.push_back(r);
  }
  std::size_t unresolved = 0;
  const auto predicted = eval::predicted_labels(scored, &unresolved);
  const auto confusion = eval::confusion(gold, predicted);
  const auto report = eval::prf(confusion);
  metrics["confusion"] = eval::to_json(confusion);
  metrics["prf"] = eval::to_json(report);
  metrics["unresolved_scored_as_no"] = unresolved;

  if (c.spotcheck) {
    const auto table = csv::read_table(*c.spotcheck);
    const auto ci = csv::column(table, "passage_id", *c.spotcheck);
    const auto ca = csv::column(table, "affect", *c.spotcheck);
    const auto cm = csv::column(table, "impact", *c.spotcheck);
    std::map<std::string, std::string> human_affect, human_impact, model_affect, model_impact;
    for (const auto& row : table.rows) {
      if (row.size() <= std::max({ci, ca, cm})) throw ConfigError(c.spotcheck->string() + ": short row");
      human_affect[row[ci]] = std::string(annotate::to_string(annotate::parse_affect(row[ca])));
      human_impact[row[ci]] = std::string(annotate::to_string(annotate::parse_impact(row[cm])));
    }
    for (const auto& r : records) {
      if (r.affect) model_affect[r.passage] = std::string(annotate::to_string(*r.affect));
      if (r.impact) model_impact[r.passage] = std::string(annotate::to_string(*r.impact));
    }
    auto facet = [](const eval::FacetAgreement& a) {
      return Json{{"matches", a.matches}, {"total", a.total}, {"percent", a.percent}};
    };
    metrics["spotcheck"] = {{"affect", facet(eval::spotcheck_agreement(human_affect, model_affect))},
                            {"impact", facet(eval::spotcheck_agreement(human_impact, model_impact))}};
  } else {
    metrics["spotcheck"] = nullptr;
  }

  write_json(c.output / "metrics.json", metrics);
  out << "evaluated " << gold.size() << " gold passages: micro-F1 " << report.micro_f1 << "\n";
}

void cmd_stats(const RunConfig& c, std::ostream& out) {
  const auto corpus = load_corpus(c);
  const auto passages = load_passages(c);
  const auto records = load_annotations(c);
  const auto config = analysis_config(c);

  std::optional<topics::TopicModel> model;
  if (fs::exists(state_path(c))) {
    model = topics::load_model(state_path(c));
  } else {
    log::warn("no topic state at " + state_path(c).string() + "; topic analyses skipped");
  }

  stats::AnalysisInputs in;
  in.novels = &corpus.novels;
  in.passages = &passages;
  in.annotations = &records;
  in.model = model ? &*model : nullptr;
  in.topic_labels = topic_labels(config);
  const auto results = stats::analyze(in, config);
  write_json(c.output / "stats.json", results);
  out << "wrote stats for " << corpus.novels.size() << " novels, " << results["comparisons"].size()
      << " comparisons, " << results["correlations"].size() << " correlations\n";
}

void cmd_report(const RunConfig& c, std::ostream& out) {
  const auto stats = read_json(c.output / "stats.json", "stats");
  std::optional<nlohmann::json> metrics;
  if (fs::exists(c.output / "metrics.json")) metrics = read_json(c.output / "metrics.json", "eval");

  const auto figures = figure_data(stats);
  for (const auto& [name, content] : figures) write_text(c.output / "figures" / name, content);
  write_text(c.output / "report.md", markdown_summary(stats, metrics ? &*metrics : nullptr));
  out << "wrote report.md and " << figures.size() << " figure tables\n";
}

}  // namespace godspell::report

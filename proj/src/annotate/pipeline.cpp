#include <algorithm>
#include <exception>
#include <fstream>
#include <thread>

#include "godspell/annotate.hpp"

namespace godspell::annotate {
namespace {

constexpr std::string_view kStage1 = "stage1";
constexpr std::string_view kStage2 = "stage2";
constexpr std::string_view kAffectStage = "affect";
constexpr std::string_view kImpactStage = "impact";

bool blank(std::string_view s) { return s.find_first_not_of(" \t\r\n") == std::string_view::npos; }

template <typename T>
nlohmann::ordered_json optional_enum(const std::optional<T>& v) {
  return v ? nlohmann::ordered_json(to_string(*v)) : nlohmann::ordered_json(nullptr);
}

ErrorKind parse_kind(std::string_view s) {
  if (s == "transport") return ErrorKind::transport;
  if (s == "malformed") return ErrorKind::malformed;
  if (s == "precondition") return ErrorKind::precondition;
  throw Error("unknown error kind '" + std::string(s) + "'");
}

}  // namespace

std::string_view to_string(Verdict v) { return v == Verdict::yes ? "YES" : "NO"; }
std::string_view to_string(Affect a) { return a == Affect::individual ? "INDIVIDUAL" : "GROUP"; }
std::string_view to_string(Impact i) {
  switch (i) {
    case Impact::loving: return "LOVING";
    case Impact::punishing: return "PUNISHING";
    case Impact::both: return "BOTH";
    case Impact::neutral: break;
  }
  return "NEUTRAL";
}

Verdict parse_verdict(std::string_view s) {
  if (s == "YES") return Verdict::yes;
  if (s == "NO") return Verdict::no;
  throw Error("unrecognized verdict '" + std::string(s) + "'");
}

Affect parse_affect(std::string_view s) {
  if (s == "INDIVIDUAL") return Affect::individual;
  if (s == "GROUP") return Affect::group;
  throw Error("unrecognized affect '" + std::string(s) + "'");
}

Impact parse_impact(std::string_view s) {
  if (s == "LOVING") return Impact::loving;
  if (s == "PUNISHING") return Impact::punishing;
  if (s == "BOTH") return Impact::both;
  if (s == "NEUTRAL") return Impact::neutral;
  throw Error("unrecognized impact '" + std::string(s) + "'");
}

bool ActAnnotation::detection_unresolved() const {
  return unresolved && (unresolved->stage == kStage1 || unresolved->stage == kStage2);
}

void ActAnnotation::check_invariants() const {
  auto fail = [&](const std::string& what) { throw Error("annotation " + passage + ": " + what); };
  const bool s1_yes = stage1 && stage1->label == Verdict::yes;
  const bool s2_yes = stage2 && stage2->label == Verdict::yes;
  const bool final_yes = final_label == Verdict::yes;
  const bool characterized = affect.has_value() && impact.has_value();

  if (!unresolved) {
    if (!stage1) fail("missing stage 1 record");
    if (stage2.has_value() != s1_yes) fail("stage 2 must be present exactly when stage 1 says YES");
    if (final_yes != (s1_yes && s2_yes)) fail("final label must be the conjunction of both stages");
    if (affect.has_value() != final_yes || impact.has_value() != final_yes) {
      fail("affect and impact must be present exactly when the final label is YES");
    }
    return;
  }

  const auto& stage = unresolved->stage;
  if (stage == kStage1) {
    if (stage1 || stage2 || final_yes || affect || impact) fail("unresolved at stage 1 but later fields are set");
  } else if (stage == kStage2) {
    if (!s1_yes || stage2 || final_yes || affect || impact) fail("unresolved at stage 2 with inconsistent fields");
  } else if (stage == kAffectStage || stage == kImpactStage) {
    if (!s1_yes || !s2_yes || !final_yes || characterized) fail("unresolved characterization with inconsistent fields");
  } else {
    fail("unknown unresolved stage '" + stage + "'");
  }
}

nlohmann::ordered_json to_json(const ActAnnotation& a) {
  nlohmann::ordered_json j;
  j["passage"] = a.passage;
  j["novel_id"] = a.novel_id;
  j["index"] = a.index;
  if (a.stage1) {
    j["stage1"] = {{"explanation", a.stage1->explanation},
                   {"label", to_string(a.stage1->label)},
                   {"act_description", a.stage1->act_description},
                   {"affected_description", a.stage1->affected_description}};
  } else {
    j["stage1"] = nullptr;
  }
  if (a.stage2) {
    j["stage2"] = {{"explanation", a.stage2->explanation}, {"label", to_string(a.stage2->label)}};
  } else {
    j["stage2"] = nullptr;
  }
  j["final_label"] = to_string(a.final_label);
  j["affect"] = optional_enum(a.affect);
  j["impact"] = optional_enum(a.impact);
  j["cache_key"] = a.cache_key;
  if (a.unresolved) {
    j["unresolved"] = {{"stage", a.unresolved->stage},
                       {"kind", to_string(a.unresolved->kind)},
                       {"message", a.unresolved->message}};
  } else {
    j["unresolved"] = nullptr;
  }
  return j;
}

ActAnnotation annotation_from_json(const nlohmann::json& j) {
  ActAnnotation a;
  a.passage = j.at("passage").get<std::string>();
  a.novel_id = j.at("novel_id").get<std::string>();
  a.index = j.at("index").get<std::size_t>();
  if (const auto& s1 = j.at("stage1"); !s1.is_null()) {
    a.stage1 = StageOne{s1.at("explanation").get<std::string>(), parse_verdict(s1.at("label").get<std::string>()),
                        s1.at("act_description").get<std::string>(), s1.at("affected_description").get<std::string>()};
  }
  if (const auto& s2 = j.at("stage2"); !s2.is_null()) {
    a.stage2 = StageTwo{s2.at("explanation").get<std::string>(), parse_verdict(s2.at("label").get<std::string>())};
  }
  a.final_label = parse_verdict(j.at("final_label").get<std::string>());
  if (const auto& v = j.at("affect"); !v.is_null()) a.affect = parse_affect(v.get<std::string>());
  if (const auto& v = j.at("impact"); !v.is_null()) a.impact = parse_impact(v.get<std::string>());
  a.cache_key = j.at("cache_key").get<std::string>();
  if (const auto& u = j.at("unresolved"); !u.is_null()) {
    a.unresolved = Unresolved{u.at("stage").get<std::string>(), parse_kind(u.at("kind").get<std::string>()),
                              u.at("message").get<std::string>()};
  }
  return a;
}

void write_annotations(const std::filesystem::path& path, const std::vector<ActAnnotation>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

std::vector<ActAnnotation> read_annotations(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read annotations file " + path.string());
  std::vector<ActAnnotation> records;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      records.push_back(annotation_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw ConfigError(path.string() + ":" + std::to_string(n) + ": bad annotation record: " + e.what());
    }
  }
  return records;
}

// ---------------------------------------------------------------------------

Annotator::Annotator(ModelBackend& backend, ModelConfig config, const PromptRegistry& registry,
                     const ResponseCache& cache, PipelineOptions options)
    : backend_(backend), config_(std::move(config)), registry_(registry), cache_(cache), options_(std::move(options)) {
  config_.validate();
}

FieldMap Annotator::run_stage(std::string_view stage, const PromptTemplate& t, const std::string& input,
                              const std::string& passage_ref, std::string* key_out) {
  const auto key = ResponseCache::key(config_.model, t, input, stage);
  if (key_out) *key_out = key;
  if (auto cached = cache_.get(stage, key)) {
    try {
      return parse_response(nlohmann::json(*cached).dump(), t);
    } catch (const MalformedResponse&) {
      // stale entry for a changed schema; fall through and refetch
    }
  }
  try {
    const auto raw = call_model(backend_, config_, t, input, passage_ref, options_.sleep);
    auto fields = parse_response(raw, t);
    cache_.put(stage, key, fields);
    return fields;
  } catch (const PipelineError& e) {
    throw PipelineError(e.kind(), std::string(stage), passage_ref, e.detail());
  }
}

StageOne Annotator::classify_act(const corpus::Passage& passage) {
  const auto ref = passage.ref();
  if (blank(passage.text)) throw PipelineError(ErrorKind::precondition, std::string(kStage1), ref, "empty passage text");
  const auto f = run_stage(kStage1, registry_.active(kActPrompt), passage.text, ref);
  return {f.at("explanation"), parse_verdict(f.at("label")), f.at("act_description"), f.at("affected_description")};
}

StageTwo Annotator::disambiguate_supernatural(const corpus::Passage& passage, const StageOne& stage1) {
  const auto ref = passage.ref();
  if (stage1.label != Verdict::yes) {
    throw PipelineError(ErrorKind::precondition, std::string(kStage2), ref, "stage 1 did not label the passage YES");
  }
  const auto f = run_stage(kStage2, registry_.active(kSupernaturalPrompt), passage.text, ref);
  return {f.at("explanation"), parse_verdict(f.at("label"))};
}

std::pair<Affect, Impact> Annotator::characterize(const std::string& passage_ref, const std::string& act_description) {
  if (blank(act_description)) {
    throw PipelineError(ErrorKind::precondition, std::string(kAffectStage), passage_ref, "empty act description");
  }
  const auto affect = run_stage(kAffectStage, registry_.active(kAffectPrompt), act_description, passage_ref);
  const auto impact = run_stage(kImpactStage, registry_.active(kImpactPrompt), act_description, passage_ref);
  return {parse_affect(affect.at("god_affect")), parse_impact(impact.at("god_impact"))};
}

ActAnnotation Annotator::annotate(const corpus::Passage& passage) {
  ActAnnotation a;
  a.passage = passage.ref();
  a.novel_id = passage.novel_id;
  a.index = passage.index;
  a.cache_key = ResponseCache::key(config_.model, registry_.active(kActPrompt), passage.text, kStage1);
  try {
    a.stage1 = classify_act(passage);
    if (a.stage1->label == Verdict::yes) {
      a.stage2 = disambiguate_supernatural(passage, *a.stage1);
      if (a.stage2->label == Verdict::yes) {
        a.final_label = Verdict::yes;
        const auto [affect, impact] = characterize(a.passage, a.stage1->act_description);
        a.affect = affect;
        a.impact = impact;
      }
    }
  } catch (const PipelineError& e) {
    a.unresolved = Unresolved{e.stage(), e.kind(), e.detail()};
  }
  return a;
}

std::vector<ActAnnotation> Annotator::run(const std::vector<corpus::Passage>& passages) {
  std::vector<ActAnnotation> out(passages.size());
  const std::size_t workers = std::clamp<std::size_t>(options_.workers, 1, std::max<std::size_t>(1, passages.size()));

  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto work = [&] {
    while (!stop.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= passages.size()) return;
      try {
        out[i] = annotate(passages[i]);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        stop = true;
      }
    }
  };

  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::vector<ActAnnotation> run_pipeline(const std::vector<corpus::Passage>& passages, ModelBackend& backend,
                                        const ModelConfig& config, const PromptRegistry& registry,
                                        const ResponseCache& cache, PipelineOptions options) {
  Annotator annotator(backend, config, registry, cache, std::move(options));
  return annotator.run(passages);
}

}  // namespace godspell::annotate

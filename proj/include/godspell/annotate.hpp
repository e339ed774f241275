#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "godspell/corpus.hpp"
#include "godspell/error.hpp"

// Two-stage act-of-God cascade plus the affect/impact characterization
// prompts, run against a local inference endpoint with schema-constrained
// output, retries, and an on-disk response cache.
namespace godspell::annotate {

// ---------------------------------------------------------------------------
// Prompt templates

inline constexpr std::string_view kPlaceholder = "[INSERT TEXT HERE]";

struct OutputField {
  std::string name;
  std::vector<std::string> allowed;  // empty: free text; otherwise an enum

  bool is_enum() const { return !allowed.empty(); }
};

struct PromptTemplate {
  std::string name;
  std::string version;
  std::string body;
  std::vector<OutputField> fields;

  // Throws ConfigError unless the body has exactly one placeholder and every
  // enum field has at least two values.
  void validate() const;
  // JSON schema for structured output.
  nlohmann::ordered_json schema() const;
};

// Prompt names used by the pipeline.
inline constexpr std::string_view kActPrompt = "act_of_god";
inline constexpr std::string_view kSupernaturalPrompt = "supernatural_check";
inline constexpr std::string_view kAffectPrompt = "god_affect";
inline constexpr std::string_view kImpactPrompt = "god_impact";

class PromptRegistry {
 public:
  // Registry holding the shipped default prompts (version "1").
  static PromptRegistry defaults();

  // Adds a template; (name, version) must be new. The newest registration of
  // a name becomes its active version.
  void add(PromptTemplate t);
  void activate(const std::string& name, const std::string& version);

  const PromptTemplate& active(std::string_view name) const;
  const PromptTemplate& get(std::string_view name, std::string_view version) const;
  std::vector<std::pair<std::string, std::string>> versions() const;

  // JSON file: {"prompts": [{name, version, body, fields: [{name, values?}]}],
  //             "active": {name: version}}; merged onto this registry.
  void load(const std::filesystem::path& path);

 private:
  std::map<std::pair<std::string, std::string>, PromptTemplate> templates_;
  std::map<std::string, std::string, std::less<>> active_;
};

// Replaces the placeholder with text verbatim.
std::string render_prompt(const PromptTemplate& t, std::string_view text);

// ---------------------------------------------------------------------------
// Model access

struct ModelConfig {
  std::string endpoint = "http://localhost:11434/api/generate";
  std::string model = "gemma3n:e4b";
  double temperature = 0.0;
  int max_retries = 3;
  double timeout_seconds = 120.0;
  std::chrono::milliseconds backoff_base{1000};

  void validate() const;
};

struct CompletionRequest {
  std::string model;
  std::string prompt;
  double temperature = 0.0;
  nlohmann::ordered_json schema;
  // For in-process backends only; not sent over the wire.
  std::string prompt_name;
  std::string input;
};

// Thrown by backends for transport-level failures.
class TransportError : public Error {
 public:
  using Error::Error;
};

class ModelBackend {
 public:
  virtual ~ModelBackend() = default;
  // Returns the raw response body. Must be safe to call concurrently.
  virtual std::string complete(const CompletionRequest& request) = 0;
};

// POSTs {"model","prompt","stream":false,"format":schema,"options":{"temperature"}}
// to the endpoint; non-2xx responses are transport errors.
class HttpBackend : public ModelBackend {
 public:
  explicit HttpBackend(std::string endpoint, double timeout_seconds = 120.0);
  std::string complete(const CompletionRequest& request) override;

 private:
  std::string base_;
  std::string path_;
  double timeout_;
};

// Deterministic offline model: the first rule whose prompt name matches and
// whose regex (case-insensitive) finds a match in the request input supplies
// the response fields. "{match}" inside a response value expands to the
// matched text. Unmatched prompts use the per-prompt default response.
class MockModel : public ModelBackend {
 public:
  struct Rule {
    std::string prompt;
    std::string pattern;
    nlohmann::ordered_json response;
  };

  MockModel(std::vector<Rule> rules, std::map<std::string, nlohmann::ordered_json> defaults);
  MockModel(MockModel&& other) noexcept;
  // Rules keyed on common act-of-God phrasing; used by tests and `--mock`.
  static MockModel builtin();
  // JSON file: {"rules": [{prompt, pattern, response}], "defaults": {prompt: response}}.
  static MockModel from_file(const std::filesystem::path& path);

  std::string complete(const CompletionRequest& request) override;
  std::size_t calls() const { return calls_.load(); }
  std::size_t calls(std::string_view prompt) const;

 private:
  struct Compiled {
    std::string prompt;
    std::regex re;
    nlohmann::ordered_json response;
  };
  std::vector<Compiled> rules_;
  std::map<std::string, nlohmann::ordered_json> defaults_;
  std::atomic<std::size_t> calls_{0};
  mutable std::mutex mutex_;
  std::map<std::string, std::size_t, std::less<>> per_prompt_;
};

// ---------------------------------------------------------------------------
// Errors and parsing

enum class ErrorKind { transport, malformed, precondition };
std::string_view to_string(ErrorKind k);

class PipelineError : public Error {
 public:
  PipelineError(ErrorKind kind, std::string stage, std::string passage, const std::string& message);
  ErrorKind kind() const { return kind_; }
  const std::string& stage() const { return stage_; }
  const std::string& passage() const { return passage_; }
  const std::string& detail() const { return detail_; }

 private:
  ErrorKind kind_;
  std::string stage_;
  std::string passage_;
  std::string detail_;
};

class MalformedResponse : public Error {
 public:
  using Error::Error;
};

using FieldMap = std::map<std::string, std::string>;

// Pulls the structured object out of a response body. Accepts the object
// itself or the usual wrappers ("response", "message.content",
// "choices[0].message.content"); throws MalformedResponse.
nlohmann::json extract_object(std::string_view body);

// Strict parse: every field present as a string; enums matched
// case-insensitively and returned upper-case. Extra fields ignored.
FieldMap parse_response(std::string_view raw, const PromptTemplate& t);

// Renders t with input and issues one completion, retrying transport errors
// and malformed bodies up to max_retries times with exponential backoff
// (base, x2). Returns the raw body of the first well-formed response.
using SleepFn = std::function<void(std::chrono::milliseconds)>;
std::string call_model(ModelBackend& backend, const ModelConfig& config, const PromptTemplate& t,
                       const std::string& input, const std::string& passage_ref, const SleepFn& sleep = {});

// ---------------------------------------------------------------------------
// Cache

// One JSON file per (stage, key) under root/<stage>/<key>.json, written via
// temp file + rename.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path root);

  static std::string key(std::string_view model, const PromptTemplate& t, std::string_view input,
                         std::string_view stage);

  std::optional<FieldMap> get(std::string_view stage, std::string_view key) const;
  void put(std::string_view stage, std::string_view key, const FieldMap& fields) const;
  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path path_for(std::string_view stage, std::string_view key) const;
  std::filesystem::path root_;
};

// ---------------------------------------------------------------------------
// Annotation records

enum class Verdict { yes, no };
enum class Affect { individual, group };
enum class Impact { loving, punishing, both, neutral };

std::string_view to_string(Verdict v);
std::string_view to_string(Affect a);
std::string_view to_string(Impact i);
Verdict parse_verdict(std::string_view s);
Affect parse_affect(std::string_view s);
Impact parse_impact(std::string_view s);

struct StageOne {
  std::string explanation;
  Verdict label = Verdict::no;
  std::string act_description;
  std::string affected_description;
};

struct StageTwo {
  std::string explanation;
  Verdict label = Verdict::no;
};

struct Unresolved {
  std::string stage;
  ErrorKind kind = ErrorKind::transport;
  std::string message;
};

struct ActAnnotation {
  std::string passage;  // Passage::ref()
  std::string novel_id;
  std::size_t index = 0;
  std::optional<StageOne> stage1;
  std::optional<StageTwo> stage2;
  Verdict final_label = Verdict::no;
  std::optional<Affect> affect;
  std::optional<Impact> impact;
  std::string cache_key;  // stage-1 key
  std::optional<Unresolved> unresolved;

  // Unresolved before the verdict was settled (stage 1 or 2 failed).
  bool detection_unresolved() const;
  // Throws Error describing the first violated record invariant.
  void check_invariants() const;
};

nlohmann::ordered_json to_json(const ActAnnotation& a);
ActAnnotation annotation_from_json(const nlohmann::json& j);
void write_annotations(const std::filesystem::path& path, const std::vector<ActAnnotation>& records);
std::vector<ActAnnotation> read_annotations(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Pipeline

struct PipelineOptions {
  std::size_t workers = 4;
  SleepFn sleep;  // defaults to std::this_thread::sleep_for
};

class Annotator {
 public:
  Annotator(ModelBackend& backend, ModelConfig config, const PromptRegistry& registry, const ResponseCache& cache,
            PipelineOptions options = {});

  StageOne classify_act(const corpus::Passage& passage);
  StageTwo disambiguate_supernatural(const corpus::Passage& passage, const StageOne& stage1);
  std::pair<Affect, Impact> characterize(const std::string& passage_ref, const std::string& act_description);

  // Full cascade for one passage; PipelineErrors become an unresolved record.
  ActAnnotation annotate(const corpus::Passage& passage);

  // All passages on a bounded worker pool; output in input order. Exceptions
  // other than PipelineError propagate.
  std::vector<ActAnnotation> run(const std::vector<corpus::Passage>& passages);

 private:
  FieldMap run_stage(std::string_view stage, const PromptTemplate& t, const std::string& input,
                     const std::string& passage_ref, std::string* key_out = nullptr);

  ModelBackend& backend_;
  ModelConfig config_;
  const PromptRegistry& registry_;
  const ResponseCache& cache_;
  PipelineOptions options_;
};

std::vector<ActAnnotation> run_pipeline(const std::vector<corpus::Passage>& passages, ModelBackend& backend,
                                        const ModelConfig& config, const PromptRegistry& registry,
                                        const ResponseCache& cache, PipelineOptions options = {});

}  // namespace godspell::annotate

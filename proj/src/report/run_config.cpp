#include <fstream>
#include <set>

#include "godspell/report.hpp"

namespace godspell::report {
namespace {

using Json = nlohmann::json;

void check_keys(const Json& j, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be an object");
  const std::set<std::string_view> keys(allowed);
  for (const auto& [k, v] : j.items()) {
    if (!keys.contains(k)) throw ConfigError("unknown key '" + k + "' in " + std::string(where));
  }
}

template <typename T>
void read(const Json& j, const char* key, T& into) {
  if (j.contains(key)) into = j.at(key).get<T>();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

void read_path(const Json& j, const char* key, const std::filesystem::path& base,
               std::optional<std::filesystem::path>& into) {
  if (j.contains(key) && !j.at(key).is_null()) into = resolve(base, j.at(key).get<std::string>());
}

void require_file(const std::optional<std::filesystem::path>& p, std::string_view what) {
  if (p && !std::filesystem::is_regular_file(*p)) {
    throw ConfigError(std::string(what) + " not found: " + p->string());
  }
}

}  // namespace

RunConfig parse_run_config(const Json& j, const std::filesystem::path& base) {
  RunConfig c;
  try {
    check_keys(j, "run config",
               {"manifest", "output", "segmentation", "topics", "model", "prompts", "analysis", "eval"});
    if (j.contains("manifest")) c.manifest = resolve(base, j.at("manifest").get<std::string>());
    if (j.contains("output")) c.output = resolve(base, j.at("output").get<std::string>());

    if (j.contains("segmentation")) {
      const auto& s = j.at("segmentation");
      check_keys(s, "segmentation", {"segment_size", "passage_cap"});
      read(s, "segment_size", c.segment_size);
      read(s, "passage_cap", c.passage_cap);
    }

    if (j.contains("topics")) {
      const auto& t = j.at("topics");
      check_keys(t, "topics", {"num_topics", "sweeps", "burn_in", "optimize_interval", "alpha_sum", "beta", "seed",
                               "stopwords", "min_count", "downsample"});
      read(t, "num_topics", c.topics.num_topics);
      read(t, "sweeps", c.topics.sweeps);
      read(t, "burn_in", c.topics.burn_in);
      read(t, "optimize_interval", c.topics.optimize_interval);
      read(t, "alpha_sum", c.topics.alpha_sum);
      read(t, "beta", c.topics.beta);
      read(t, "seed", c.topics.seed);
      read_path(t, "stopwords", base, c.stopwords);
      read(t, "min_count", c.min_count);
      read(t, "downsample", c.downsample);
    }

    if (j.contains("model")) {
      const auto& m = j.at("model");
      check_keys(m, "model", {"endpoint", "name", "temperature", "max_retries", "timeout_seconds", "backoff_ms", "mock",
                              "workers", "cache_dir"});
      read(m, "endpoint", c.model.endpoint);
      read(m, "name", c.model.model);
      read(m, "temperature", c.model.temperature);
      read(m, "max_retries", c.model.max_retries);
      read(m, "timeout_seconds", c.model.timeout_seconds);
      if (m.contains("backoff_ms")) c.model.backoff_base = std::chrono::milliseconds(m.at("backoff_ms").get<long>());
      if (m.contains("mock")) {
        c.mock = m.at("mock").get<std::string>();
        if (!c.mock.empty() && c.mock != "builtin") c.mock = resolve(base, c.mock).string();
      }
      read(m, "workers", c.workers);
      read_path(m, "cache_dir", base, c.cache_dir);
    }

    read_path(j, "prompts", base, c.prompts);
    read_path(j, "analysis", base, c.analysis);

    if (j.contains("eval")) {
      const auto& e = j.at("eval");
      check_keys(e, "eval", {"rounds", "overrides", "spotcheck"});
      if (e.contains("rounds")) {
        for (const auto& r : e.at("rounds")) c.reliability_rounds.push_back(resolve(base, r.get<std::string>()));
      }
      read_path(e, "overrides", base, c.overrides);
      read_path(e, "spotcheck", base, c.spotcheck);
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_run_config(j, path.parent_path());
}

void check_paths(const RunConfig& c) {
  if (!c.manifest.empty()) require_file(c.manifest, "manifest");
  require_file(c.stopwords, "stopword file");
  require_file(c.prompts, "prompt registry");
  require_file(c.analysis, "analysis config");
  require_file(c.overrides, "override file");
  require_file(c.spotcheck, "spot-check file");
  for (const auto& r : c.reliability_rounds) require_file(r, "annotation round file");
  if (!c.mock.empty() && c.mock != "builtin") require_file(std::filesystem::path(c.mock), "mock rules file");
  if (c.segment_size == 0 || c.passage_cap == 0) throw ConfigError("segment size and passage cap must be positive");
  if (c.topics.num_topics == 0) throw ConfigError("num_topics must be positive");
  if (c.workers == 0) throw ConfigError("workers must be positive");
  c.model.validate();
}

}  // namespace godspell::report

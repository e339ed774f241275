#include <fstream>

#include "godspell/annotate.hpp"

namespace godspell::annotate {
namespace {

nlohmann::ordered_json expand(const nlohmann::ordered_json& response, const std::string& match) {
  nlohmann::ordered_json out = response;
  for (auto& [key, value] : out.items()) {
    if (!value.is_string()) continue;
    auto s = value.get<std::string>();
    for (auto pos = s.find("{match}"); pos != std::string::npos; pos = s.find("{match}", pos + match.size())) {
      s.replace(pos, 7, match);
    }
    value = s;
  }
  return out;
}

constexpr const char* kDivineSubject = R"(\b(God|the Lord|the Almighty|the Holy Spirit)\b)";
constexpr const char* kDivineVerb =
    R"(\b(said|spake|spoke|called|sent|prepared|blessed|made|created|remembered|saw|repented|commanded|brought|gave|visited|heard|answered|healed|provided|saved|delivered|led|forgave|shut|smote|appointed|caused|closed|opened|dealt|established|destroyed|rained|struck|raised|stopped)\b)";

}  // namespace

MockModel::MockModel(std::vector<Rule> rules, std::map<std::string, nlohmann::ordered_json> defaults)
    : defaults_(std::move(defaults)) {
  for (auto& r : rules) {
    try {
      rules_.push_back({r.prompt, std::regex(r.pattern, std::regex::ECMAScript | std::regex::icase), r.response});
    } catch (const std::regex_error& e) {
      throw ConfigError("mock rule for '" + r.prompt + "' has an invalid pattern: " + e.what());
    }
  }
}

MockModel::MockModel(MockModel&& other) noexcept
    : rules_(std::move(other.rules_)),
      defaults_(std::move(other.defaults_)),
      calls_(other.calls_.load()),
      per_prompt_(std::move(other.per_prompt_)) {}

MockModel MockModel::builtin() {
  const std::string act = std::string(kDivineSubject) + R"([^.;:!?]{0,60}?)" + kDivineVerb + R"([^.;:!?]{0,60})";
  const std::string loving = R"(\b(bless|mercy|merciful|sav|deliver|remember|provid|heal|gave|kind|grace|prepared|forg|comfort|love))";
  const std::string punishing = R"(\b(destroy|wrath|flood|smote|curse|punish|judg|tempest|storm|plague|struck|anger))";

  std::vector<Rule> rules{
      {std::string(kActPrompt), act,
       {{"explanation", "The passage states that {match}."},
        {"label", "YES"},
        {"act_description", "{match}"},
        {"affected_description", "{match}"}}},
      {std::string(kSupernaturalPrompt), R"(\b(magic|spell|sorcer|wizard|enchant|witch))",
       {{"explanation", "The event is worked by {match}, not by God."}, {"label", "NO"}}},
      {std::string(kAffectPrompt),
       R"(\b(people|nation|nations|city|world|earth|men|all|them|they|us|church|town|multitude|mariners|house|families|everyone)\b)",
       {{"god_affect_explanation", "God's act reaches {match}."}, {"god_affect", "GROUP"}}},
      {std::string(kImpactPrompt), "^(?=[\\s\\S]*" + loving + ")(?=[\\s\\S]*" + punishing + ")",
       {{"god_impact_explanation", "The act both helps and judges."}, {"god_impact", "BOTH"}}},
      {std::string(kImpactPrompt), punishing,
       {{"god_impact_explanation", "The act involves {match}."}, {"god_impact", "PUNISHING"}}},
      {std::string(kImpactPrompt), loving,
       {{"god_impact_explanation", "The act involves {match}."}, {"god_impact", "LOVING"}}},
  };
  std::map<std::string, nlohmann::ordered_json> defaults{
      {std::string(kActPrompt),
       {{"explanation", "No action is attributed to God."},
        {"label", "NO"},
        {"act_description", "none"},
        {"affected_description", "none"}}},
      {std::string(kSupernaturalPrompt), {{"explanation", "The action is attributed to God."}, {"label", "YES"}}},
      {std::string(kAffectPrompt), {{"god_affect_explanation", "One person is affected."}, {"god_affect", "INDIVIDUAL"}}},
      {std::string(kImpactPrompt), {{"god_impact_explanation", "The act is neither kind nor punishing."}, {"god_impact", "NEUTRAL"}}},
  };
  return MockModel(std::move(rules), std::move(defaults));
}

MockModel MockModel::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read mock model rules " + path.string());
  try {
    const auto j = nlohmann::ordered_json::parse(in);
    std::vector<Rule> rules;
    for (const auto& r : j.value("rules", nlohmann::ordered_json::array())) {
      rules.push_back({r.at("prompt").get<std::string>(), r.at("pattern").get<std::string>(), r.at("response")});
    }
    std::map<std::string, nlohmann::ordered_json> defaults;
    const auto listed = j.value("defaults", nlohmann::ordered_json::object());
    for (const auto& [name, response] : listed.items()) {
      defaults[name] = response;
    }
    return MockModel(std::move(rules), std::move(defaults));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string MockModel::complete(const CompletionRequest& request) {
  ++calls_;
  {
    std::lock_guard lock(mutex_);
    ++per_prompt_[request.prompt_name];
  }
  for (const auto& rule : rules_) {
    if (rule.prompt != request.prompt_name) continue;
    std::smatch m;
    if (std::regex_search(request.input, m, rule.re)) return expand(rule.response, m.str(0)).dump();
  }
  auto it = defaults_.find(request.prompt_name);
  if (it == defaults_.end()) throw TransportError("mock model has no response for prompt '" + request.prompt_name + "'");
  return it->second.dump();
}

std::size_t MockModel::calls(std::string_view prompt) const {
  std::lock_guard lock(mutex_);
  auto it = per_prompt_.find(prompt);
  return it == per_prompt_.end() ? 0 : it->second;
}

}  // namespace godspell::annotate

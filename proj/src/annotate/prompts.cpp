#include <fstream>

#include "godspell/annotate.hpp"

namespace godspell::annotate {
namespace {

// Stage 1: act-of-God detection over the raw passage.
constexpr const char* kActBody = R"PROMPT(You will be given a passage from a Christian novel. Decide whether the 
Christian God acts in the passage or whether an act of God is described.

Choose one of the following labels:
- YES: Something in the passage is clearly done by God. This includes:
  - God doing an action (for example God provides, heals, guides, speaks, 
forgives, loves, or punishes).
  - God described as the one who did something (for example "the God who 
provided").
  - Quotes or stories from the Bible that describe God's actions.
  - A character says God did something and nothing in the passage doubts it.
- NO: No action by God happens in the passage. This includes:
  - A character prays or talks to God, but God does not respond or act.
  - Future actions (for example "God will provide").
  - Descriptions of God (for example God is kind, loving, powerful, or 
righteous) or of people (for example "God's chosen one").
  - The narrator or other characters doubt that God did it.

Please respond with:
- explanation: Explain why you chose YES or NO
- label: YES or NO
- act_description: Describe what God does in the passage, or "none"
- affected_description: Describe who God's action affects, or "none"

<text>
[INSERT TEXT HERE]
</text>
)PROMPT";

// Stage 2: separates acts of God from other supernatural or magical events.
constexpr const char* kSupernaturalBody = R"PROMPT(You will be given a passage from a novel. Decide whether an action in the 
passage is done by the Christian God, or whether it is a different 
supernatural or magical event.

Choose one of the following labels:
- YES: The Christian God does something in the passage (for example a 
miracle, an answered prayer, guidance, or an angel sent by God).
- NO: The event is not done by the Christian God (for example magic, 
spells, fantasy creatures, science fiction technology, fate, luck, or other 
gods and spirits), or nothing is done at all.

Please respond with:
- explanation: Explain why you chose YES or NO
- label: YES or NO

<text>
[INSERT TEXT HERE]
</text>
)PROMPT";

constexpr const char* kAffectBody = R"PROMPT(You will be given a description of an act of the Christian God in a novel 
passage. Decide who the Christian God is affecting in the passage.

Choose one of the following codes: 
- INDIVIDUAL: God affects one person.
- GROUP: God affects a group or community (e.g., a church, a town, a book 
club).

Please respond with:
- god_affect_explanation: Explain why you chose INDIVIDUAL or GROUP
- god_affect: INDIVIDUAL or GROUP

<text>
[INSERT TEXT HERE]
</text>
)PROMPT";

constexpr const char* kImpactBody = R"PROMPT(You will be given a description of an act of the Christian God in a novel 
passage. Decide what kind of action it is.

Choose one of the following codes: 
- LOVING: God's action is kind (for example it invovles mercy, love, 
forgiveness, or help).
- PUNISHING: God's action is meant to punish or judge (for example it involves 
anger, vengeance, violence, or judgment).
- BOTH: God's action has elements of both love and punishment.
- NEUTRAL: God's action is neutral or ambiguous. Avoid using this label when 
possible.

Please respond with:
- god_impact_explanation: Explain why you chose LOVING, PUNISHING, BOTH, or 
NEUTRAL
- god_impact: LOVING, PUNISHING, BOTH, or NEUTRAL

<text>
[INSERT TEXT HERE]
</text>
)PROMPT";

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string_view::npos; pos = haystack.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

}  // namespace

void PromptTemplate::validate() const {
  const std::string id = "prompt '" + name + "' version '" + version + "'";
  if (name.empty() || version.empty()) throw ConfigError("prompt templates need a name and a version");
  const auto placeholders = count_occurrences(body, kPlaceholder);
  if (placeholders != 1) {
    throw ConfigError(id + ": body must contain exactly one " + std::string(kPlaceholder) + " (found " +
                      std::to_string(placeholders) + ")");
  }
  if (fields.empty()) throw ConfigError(id + ": no output fields");
  for (const auto& f : fields) {
    if (f.name.empty()) throw ConfigError(id + ": output field without a name");
    if (f.allowed.size() == 1) throw ConfigError(id + ": enum field '" + f.name + "' needs at least two values");
  }
}

nlohmann::ordered_json PromptTemplate::schema() const {
  nlohmann::ordered_json props = nlohmann::ordered_json::object();
  auto required = nlohmann::ordered_json::array();
  for (const auto& f : fields) {
    nlohmann::ordered_json p;
    p["type"] = "string";
    if (f.is_enum()) p["enum"] = f.allowed;
    props[f.name] = std::move(p);
    required.push_back(f.name);
  }
  nlohmann::ordered_json s;
  s["type"] = "object";
  s["properties"] = std::move(props);
  s["required"] = std::move(required);
  return s;
}

PromptRegistry PromptRegistry::defaults() {
  const std::vector<std::string> yes_no{"YES", "NO"};
  PromptRegistry r;
  r.add({std::string(kActPrompt), "1", kActBody,
         {{"explanation", {}}, {"label", yes_no}, {"act_description", {}}, {"affected_description", {}}}});
  r.add({std::string(kSupernaturalPrompt), "1", kSupernaturalBody, {{"explanation", {}}, {"label", yes_no}}});
  r.add({std::string(kAffectPrompt), "1", kAffectBody,
         {{"god_affect_explanation", {}}, {"god_affect", {"INDIVIDUAL", "GROUP"}}}});
  r.add({std::string(kImpactPrompt), "1", kImpactBody,
         {{"god_impact_explanation", {}}, {"god_impact", {"LOVING", "PUNISHING", "BOTH", "NEUTRAL"}}}});
  return r;
}

void PromptRegistry::add(PromptTemplate t) {
  t.validate();
  auto key = std::make_pair(t.name, t.version);
  if (templates_.contains(key)) {
    throw ConfigError("prompt '" + t.name + "' version '" + t.version + "' is already registered");
  }
  active_[t.name] = t.version;
  templates_.emplace(std::move(key), std::move(t));
}

void PromptRegistry::activate(const std::string& name, const std::string& version) {
  if (!templates_.contains({name, version})) {
    throw ConfigError("cannot activate unknown prompt '" + name + "' version '" + version + "'");
  }
  active_[name] = version;
}

const PromptTemplate& PromptRegistry::active(std::string_view name) const {
  auto it = active_.find(name);
  if (it == active_.end()) throw ConfigError("no prompt registered under '" + std::string(name) + "'");
  return templates_.at({it->first, it->second});
}

const PromptTemplate& PromptRegistry::get(std::string_view name, std::string_view version) const {
  auto it = templates_.find({std::string(name), std::string(version)});
  if (it == templates_.end()) {
    throw ConfigError("no prompt '" + std::string(name) + "' version '" + std::string(version) + "'");
  }
  return it->second;
}

std::vector<std::pair<std::string, std::string>> PromptRegistry::versions() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [key, t] : templates_) out.push_back(key);
  return out;
}

void PromptRegistry::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read prompt registry " + path.string());
  try {
    const auto j = nlohmann::json::parse(in);
    for (const auto& p : j.value("prompts", nlohmann::json::array())) {
      PromptTemplate t;
      t.name = p.at("name").get<std::string>();
      t.version = p.at("version").get<std::string>();
      t.body = p.at("body").get<std::string>();
      for (const auto& f : p.at("fields")) {
        t.fields.push_back({f.at("name").get<std::string>(), f.value("values", std::vector<std::string>{})});
      }
      add(std::move(t));
    }
    const auto active = j.value("active", nlohmann::json::object());
    for (const auto& [name, version] : active.items()) {
      activate(name, version.get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string render_prompt(const PromptTemplate& t, std::string_view text) {
  const auto pos = t.body.find(kPlaceholder);
  if (pos == std::string::npos) throw ConfigError("prompt '" + t.name + "' has no placeholder");
  std::string out;
  out.reserve(t.body.size() + text.size());
  out.append(t.body, 0, pos);
  out.append(text);
  out.append(t.body, pos + kPlaceholder.size());
  return out;
}

}  // namespace godspell::annotate

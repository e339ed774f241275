#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include "godspell/annotate.hpp"
#include "godspell/hash.hpp"

namespace godspell::annotate {

ResponseCache::ResponseCache(std::filesystem::path root) : root_(std::move(root)) {
  std::error_code ec;
  std::filesystem::create_directories(root_, ec);
  if (ec) throw ConfigError("cannot create cache directory " + root_.string() + ": " + ec.message());
}

std::string ResponseCache::key(std::string_view model, const PromptTemplate& t, std::string_view input,
                               std::string_view stage) {
  std::string material;
  for (std::string_view part : {model, std::string_view(t.name), std::string_view(t.version), stage, input}) {
    material += std::to_string(part.size());
    material.push_back(':');
    material.append(part);
  }
  return sha256_hex(material);
}

std::filesystem::path ResponseCache::path_for(std::string_view stage, std::string_view key) const {
  return root_ / std::string(stage) / (std::string(key) + ".json");
}

std::optional<FieldMap> ResponseCache::get(std::string_view stage, std::string_view key) const {
  std::ifstream in(path_for(stage, key), std::ios::binary);
  if (!in) return std::nullopt;
  try {
    const auto j = nlohmann::json::parse(in);
    if (j.value("key", "") != key) return std::nullopt;
    return j.at("fields").get<FieldMap>();
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
}

void ResponseCache::put(std::string_view stage, std::string_view key, const FieldMap& fields) const {
  static std::atomic<std::uint64_t> counter{0};
  const auto target = path_for(stage, key);
  std::filesystem::create_directories(target.parent_path());

  std::ostringstream tmp_name;
  tmp_name << target.filename().string() << ".tmp." << std::this_thread::get_id() << '.' << counter++;
  const auto tmp = target.parent_path() / tmp_name.str();

  nlohmann::ordered_json j;
  j["stage"] = stage;
  j["key"] = key;
  j["fields"] = fields;
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error("cannot write cache file " + tmp.string());
    out << j.dump() << '\n';
    if (!out.flush()) throw Error("cannot write cache file " + tmp.string());
  }
  std::filesystem::rename(tmp, target);
}

}  // namespace godspell::annotate

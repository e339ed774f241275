#include <charconv>
#include <fstream>

#include <nlohmann/json.hpp>

#include "godspell/csv.hpp"
#include "godspell/topics.hpp"

namespace godspell::topics {
namespace {

constexpr std::string_view kFormat = "godspell.topic-state";
constexpr int kVersion = 1;

}  // namespace

void save_model(const std::filesystem::path& path, const TopicModel& m) {
  nlohmann::ordered_json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["num_topics"] = m.num_topics;
  j["vocab_size"] = m.vocabulary.size();
  j["alpha"] = m.alpha;
  j["beta"] = m.beta;
  j["seed"] = m.seed;
  j["sweeps"] = m.sweeps;
  j["novel_ids"] = m.novel_ids;
  j["vocabulary"] = m.vocabulary;

  const std::size_t V = m.vocabulary.size();
  auto topic_word = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < m.num_topics; ++k) {
    topic_word.push_back(std::vector<std::int64_t>(m.topic_word.begin() + static_cast<std::ptrdiff_t>(k * V),
                                                   m.topic_word.begin() + static_cast<std::ptrdiff_t>((k + 1) * V)));
  }
  j["topic_word"] = std::move(topic_word);

  auto docs = nlohmann::ordered_json::array();
  for (std::size_t d = 0; d < m.doc_topic.size(); ++d) {
    nlohmann::ordered_json doc;
    doc["novel"] = m.doc_novel[d];
    doc["length"] = m.doc_lengths[d];
    doc["proportions"] = m.doc_topic[d];
    docs.push_back(std::move(doc));
  }
  j["documents"] = std::move(docs);
  j["log_likelihood"] = m.log_likelihood;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump() << '\n';
}

TopicModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read topic state " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": not valid JSON: " + e.what());
  }
  if (j.value("format", "") != kFormat) throw ConfigError(path.string() + ": not a topic state file");
  if (j.value("version", 0) != kVersion) {
    throw ConfigError(path.string() + ": unsupported topic state version " + std::to_string(j.value("version", 0)));
  }

  try {
    TopicModel m;
    m.num_topics = j.at("num_topics").get<std::size_t>();
    m.alpha = j.at("alpha").get<std::vector<double>>();
    m.beta = j.at("beta").get<double>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.sweeps = j.at("sweeps").get<std::size_t>();
    m.novel_ids = j.at("novel_ids").get<std::vector<std::string>>();
    m.vocabulary = j.at("vocabulary").get<std::vector<std::string>>();
    for (const auto& row : j.at("topic_word")) {
      const auto values = row.get<std::vector<std::int64_t>>();
      if (values.size() != m.vocabulary.size()) throw ConfigError(path.string() + ": topic_word row has wrong length");
      m.topic_word.insert(m.topic_word.end(), values.begin(), values.end());
    }
    if (m.topic_word.size() != m.num_topics * m.vocabulary.size() || m.alpha.size() != m.num_topics) {
      throw ConfigError(path.string() + ": dimensions disagree with num_topics");
    }
    for (const auto& doc : j.at("documents")) {
      m.doc_novel.push_back(doc.at("novel").get<std::size_t>());
      m.doc_lengths.push_back(doc.at("length").get<std::size_t>());
      m.doc_topic.push_back(doc.at("proportions").get<std::vector<double>>());
      if (m.doc_topic.back().size() != m.num_topics || m.doc_novel.back() >= m.novel_ids.size()) {
        throw ConfigError(path.string() + ": malformed document record");
      }
    }
    m.log_likelihood = j.at("log_likelihood").get<std::vector<double>>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::unordered_map<std::size_t, std::string> read_topic_labels(const std::filesystem::path& path) {
  const auto table = csv::read_table(path);
  const auto idx = csv::column(table, "topic_index", path);
  const auto lbl = csv::column(table, "label", path);
  std::unordered_map<std::size_t, std::string> labels;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    if (row.size() <= std::max(idx, lbl)) {
      throw ConfigError(path.string() + ": line " + std::to_string(table.line_numbers[r]) + ": too few fields");
    }
    std::size_t k = 0;
    const auto& s = row[idx];
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), k);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw ConfigError(path.string() + ": line " + std::to_string(table.line_numbers[r]) + ": bad topic_index");
    }
    labels[k] = row[lbl];
  }
  return labels;
}

}  // namespace godspell::topics

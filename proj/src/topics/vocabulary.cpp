#include <algorithm>
#include <fstream>
#include <map>

#include "godspell/topics.hpp"

namespace godspell::topics {
namespace {

// Multi-byte punctuation that commonly wraps words in ebook exports.
constexpr std::string_view kUtf8Punctuation[] = {
    "\xE2\x80\x9C", "\xE2\x80\x9D",  // double quotes
    "\xE2\x80\x98", "\xE2\x80\x99",  // single quotes
    "\xE2\x80\x94", "\xE2\x80\x93",  // em and en dash
    "\xE2\x80\xA6",                    // ellipsis
    "\xC2\xAB", "\xC2\xBB",            // guillemets
};

bool strip_prefix(std::string_view& s) {
  if (s.empty()) return false;
  if (std::ispunct(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
    return true;
  }
  for (auto p : kUtf8Punctuation) {
    if (s.starts_with(p)) {
      s.remove_prefix(p.size());
      return true;
    }
  }
  return false;
}

bool strip_suffix(std::string_view& s) {
  if (s.empty()) return false;
  if (std::ispunct(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
    return true;
  }
  for (auto p : kUtf8Punctuation) {
    if (s.ends_with(p)) {
      s.remove_suffix(p.size());
      return true;
    }
  }
  return false;
}

}  // namespace

std::string normalize_token(std::string_view raw) {
  while (strip_prefix(raw)) {
  }
  while (strip_suffix(raw)) {
  }
  std::string out(raw);
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

StopwordSet read_stopwords(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read stopword file " + path.string());
  StopwordSet words;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t");
    std::string w = line.substr(first, last - first + 1);
    for (auto& c : w) {
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    words.insert(std::move(w));
  }
  return words;
}

EncodedCorpus build_vocabulary(std::span<const corpus::Segment> segments, const StopwordSet& stopwords,
                               std::size_t min_count) {
  std::vector<std::vector<std::string>> normalized(segments.size());
  std::map<std::string, std::size_t> counts;
  for (std::size_t s = 0; s < segments.size(); ++s) {
    for (const auto& raw : segments[s].words) {
      auto w = normalize_token(raw);
      if (w.empty() || stopwords.contains(w)) continue;
      ++counts[w];
      normalized[s].push_back(std::move(w));
    }
  }

  EncodedCorpus out;
  out.vocab.min_count = min_count;
  for (const auto& [word, count] : counts) {
    if (count < min_count) continue;
    out.vocab.ids.emplace(word, static_cast<WordId>(out.vocab.words.size()));
    out.vocab.words.push_back(word);
    out.vocab.frequency.push_back(count);
  }
  if (out.vocab.words.empty()) {
    throw TopicError("empty vocabulary after stopword and min_count (" + std::to_string(min_count) + ") filtering");
  }

  std::map<std::string, std::size_t> novel_index;
  for (std::size_t s = 0; s < segments.size(); ++s) {
    auto [it, inserted] = novel_index.try_emplace(segments[s].novel_id, out.novel_ids.size());
    if (inserted) out.novel_ids.push_back(segments[s].novel_id);

    Document doc;
    for (const auto& w : normalized[s]) {
      if (auto id = out.vocab.ids.find(w); id != out.vocab.ids.end()) doc.push_back(id->second);
    }
    out.docs.push_back(std::move(doc));
    out.doc_novel.push_back(it->second);
    out.doc_segment.push_back(segments[s].index);
  }
  return out;
}

double retention_probability(double corpus_probability, double novel_probability) {
  if (novel_probability <= corpus_probability) return 1.0;
  return corpus_probability / novel_probability;
}

std::vector<Document> authorless_downsample(std::span<const Document> docs, std::span<const std::size_t> doc_novel,
                                            std::size_t vocab_size, std::uint64_t seed) {
  if (docs.size() != doc_novel.size()) throw TopicError("authorless_downsample: docs and doc_novel differ in length");

  std::size_t num_novels = 0;
  for (auto b : doc_novel) num_novels = std::max(num_novels, b + 1);

  std::vector<std::size_t> corpus_counts(vocab_size, 0);
  std::vector<std::unordered_map<WordId, std::size_t>> novel_counts(num_novels);
  std::vector<std::size_t> novel_totals(num_novels, 0);
  std::size_t total = 0;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    for (WordId w : docs[d]) {
      if (w >= vocab_size) throw TopicError("authorless_downsample: word id out of range");
      ++corpus_counts[w];
      ++novel_counts[doc_novel[d]][w];
    }
    novel_totals[doc_novel[d]] += docs[d].size();
    total += docs[d].size();
  }

  Rng rng(seed);
  std::vector<Document> out(docs.size());
  for (std::size_t d = 0; d < docs.size(); ++d) {
    const std::size_t b = doc_novel[d];
    const auto& counts = novel_counts[b];
    out[d].reserve(docs[d].size());
    for (WordId w : docs[d]) {
      const double p_corpus = static_cast<double>(corpus_counts[w]) / static_cast<double>(total);
      const double p_novel = static_cast<double>(counts.at(w)) / static_cast<double>(novel_totals[b]);
      if (rng.bernoulli(retention_probability(p_corpus, p_novel))) out[d].push_back(w);
    }
  }
  return out;
}

std::size_t token_count(std::span<const Document> docs) {
  std::size_t n = 0;
  for (const auto& d : docs) n += d.size();
  return n;
}

}  // namespace godspell::topics

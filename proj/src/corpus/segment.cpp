#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "godspell/corpus.hpp"

namespace godspell::corpus {
namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

bool ends_sentence(std::string_view word) {
  const char last = word.back();
  return last == '.' || last == '!' || last == '?';
}

// A gap of pure whitespace holding two newlines contains a blank line.
bool is_paragraph_break(std::string_view gap) { return std::count(gap.begin(), gap.end(), '\n') >= 2; }

// Word counts of the units the packer accumulates: whole paragraphs when they
// fit, else their sentences, else cap-sized slices of an oversized sentence.
std::vector<std::size_t> packing_units(std::string_view text, const std::vector<Token>& tokens, std::size_t cap) {
  std::vector<std::size_t> units;
  auto emit_sentence = [&](std::size_t len) {
    while (len > cap) {
      units.push_back(cap);
      len -= cap;
    }
    if (len) units.push_back(len);
  };
  auto emit_paragraph = [&](std::size_t begin, std::size_t end) {
    if (end - begin <= cap) {
      units.push_back(end - begin);
      return;
    }
    std::size_t start = begin;
    for (std::size_t i = begin; i < end; ++i) {
      if (ends_sentence(tokens[i].word) || i + 1 == end) {
        emit_sentence(i + 1 - start);
        start = i + 1;
      }
    }
  };

  std::size_t para_begin = 0;
  for (std::size_t i = 1; i <= tokens.size(); ++i) {
    if (i == tokens.size() ||
        is_paragraph_break(text.substr(tokens[i - 1].byte_end, tokens[i].byte_begin - tokens[i - 1].byte_end))) {
      emit_paragraph(para_begin, i);
      para_begin = i;
    }
  }
  return units;
}

}  // namespace

std::string Passage::ref() const { return novel_id + ":" + std::to_string(index); }

std::vector<Token> tokenize_with_offsets(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    if (i == text.size()) break;
    const std::size_t begin = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    tokens.push_back({text.substr(begin, i - begin), begin, i});
  }
  return tokens;
}

std::vector<std::string> word_tokenize(std::string_view text) {
  std::vector<std::string> words;
  for (const auto& t : tokenize_with_offsets(text)) words.emplace_back(t.word);
  return words;
}

std::vector<Segment> segment_fixed(const Novel& novel, std::size_t segment_size) {
  if (segment_size == 0) throw Error("segment_size must be >= 1");
  const auto words = word_tokenize(novel.text);
  std::vector<Segment> segments;
  for (std::size_t start = 0; start < words.size(); start += segment_size) {
    const std::size_t end = std::min(words.size(), start + segment_size);
    Segment s;
    s.novel_id = novel.id;
    s.index = segments.size();
    s.words.assign(words.begin() + start, words.begin() + end);
    s.word_start = start;
    s.word_end = end;
    segments.push_back(std::move(s));
  }
  return segments;
}

std::vector<Passage> segment_capped(const Novel& novel, std::size_t cap) {
  if (cap == 0) throw Error("passage cap must be >= 1");
  const std::string_view text = novel.text;
  const auto tokens = tokenize_with_offsets(text);
  const double total = static_cast<double>(tokens.size());

  std::vector<Passage> passages;
  auto flush = [&](std::size_t start, std::size_t end) {
    Passage p;
    p.novel_id = novel.id;
    p.index = passages.size();
    p.word_start = start;
    p.word_end = end;
    p.word_count = end - start;
    p.text = std::string(text.substr(tokens[start].byte_begin, tokens[end - 1].byte_end - tokens[start].byte_begin));
    p.normalized_position = static_cast<double>(start + end) / (2.0 * total);
    passages.push_back(std::move(p));
  };

  std::size_t start = 0;
  std::size_t filled = 0;
  for (std::size_t unit : packing_units(text, tokens, cap)) {
    if (filled > 0 && filled + unit > cap) {
      flush(start, start + filled);
      start += filled;
      filled = 0;
    }
    filled += unit;
  }
  if (filled > 0) flush(start, start + filled);
  return passages;
}

PassageStatistics passage_statistics(const std::vector<Passage>& passages) {
  PassageStatistics st;
  st.passages = passages.size();
  if (passages.empty()) return st;

  std::map<std::string, std::size_t> per_novel;
  std::size_t words = 0;
  st.min_words = passages.front().word_count;
  for (const auto& p : passages) {
    ++per_novel[p.novel_id];
    words += p.word_count;
    st.min_words = std::min(st.min_words, p.word_count);
    st.max_words = std::max(st.max_words, p.word_count);
  }
  st.novels = per_novel.size();
  st.mean_per_novel = static_cast<double>(st.passages) / static_cast<double>(st.novels);
  st.min_per_novel = per_novel.begin()->second;
  for (const auto& [id, count] : per_novel) {
    st.min_per_novel = std::min(st.min_per_novel, count);
    st.max_per_novel = std::max(st.max_per_novel, count);
  }
  st.mean_words = static_cast<double>(words) / static_cast<double>(st.passages);
  return st;
}

std::string passage_to_json(const Passage& p) {
  nlohmann::ordered_json j;
  j["novel_id"] = p.novel_id;
  j["index"] = p.index;
  j["text"] = p.text;
  j["word_count"] = p.word_count;
  j["word_start"] = p.word_start;
  j["word_end"] = p.word_end;
  j["normalized_position"] = p.normalized_position;
  return j.dump();
}

Passage passage_from_json(std::string_view line) {
  const auto j = nlohmann::json::parse(line);
  Passage p;
  p.novel_id = j.at("novel_id").get<std::string>();
  p.index = j.at("index").get<std::size_t>();
  p.text = j.at("text").get<std::string>();
  p.word_count = j.at("word_count").get<std::size_t>();
  p.word_start = j.at("word_start").get<std::size_t>();
  p.word_end = j.at("word_end").get<std::size_t>();
  p.normalized_position = j.at("normalized_position").get<double>();
  return p;
}

void write_passages(const std::filesystem::path& path, const std::vector<Passage>& passages) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& p : passages) out << passage_to_json(p) << '\n';
}

std::vector<Passage> read_passages(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read passages file " + path.string());
  std::vector<Passage> passages;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      passages.push_back(passage_from_json(line));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(path.string() + ":" + std::to_string(n) + ": bad passage record: " + e.what());
    }
  }
  return passages;
}

}  // namespace godspell::corpus

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "godspell/error.hpp"

// Ingestion of novels plus the two segmentations used downstream: fixed-size
// segments for topic modeling and capped, structure-aware passages for
// annotation.
namespace godspell::corpus {

enum class Gender { female, male, unknown };
enum class AwardStatus { winner, finalist };

std::string_view to_string(Gender g);
std::string_view to_string(AwardStatus s);
// Case-insensitive female/male/unknown (also f/m). Empty means unknown;
// anything else is nullopt.
std::optional<Gender> parse_gender(std::string_view s);

struct Author {
  std::string name;
  Gender gender = Gender::unknown;
};

struct AwardEntry {
  std::string category;
  AwardStatus status = AwardStatus::finalist;
  int award_year = 0;
};

struct Novel {
  std::string id;
  std::string title;
  std::vector<Author> authors;
  std::string publisher;
  int year = 0;
  std::optional<std::string> series_tag;
  std::vector<AwardEntry> awards;
  std::filesystem::path source_path;  // as written in the manifest
  std::string text;                   // raw file contents, verbatim

  bool in_series(std::string_view tag) const { return series_tag && *series_tag == tag; }
};

// Author-gender grouping of a novel: female or male when every author shares
// that gender, otherwise mixed (co-authored across genders or unknown).
enum class GenderGroup { female, male, mixed };
GenderGroup gender_group(const Novel& novel);

struct Corpus {
  std::vector<Novel> novels;

  const Novel* find(std::string_view id) const;
};

class CorpusError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// Manifest columns, in order.
inline constexpr std::string_view kManifestHeader =
    "id,title,authors,genders,publisher,year,series_tag,award_category,award_status,award_year,path";

// Reads the manifest CSV and every referenced text file. Relative text paths
// resolve against the manifest's directory.
Corpus ingest(const std::filesystem::path& manifest);

// Parses manifest rows without touching the text files.
std::vector<Novel> parse_manifest(std::string_view csv_text, const std::string& origin = "manifest");

// Inverse of parse_manifest for the metadata columns.
std::string write_manifest(const std::vector<Novel>& novels);

// ---------------------------------------------------------------------------
// Tokenization and segmentation

// A whitespace-delimited word with its byte range in the source text.
struct Token {
  std::string_view word;
  std::size_t byte_begin = 0;
  std::size_t byte_end = 0;
};

std::vector<std::string> word_tokenize(std::string_view text);
std::vector<Token> tokenize_with_offsets(std::string_view text);

struct Segment {
  std::string novel_id;
  std::size_t index = 0;
  std::vector<std::string> words;
  std::size_t word_start = 0;
  std::size_t word_end = 0;
};

struct Passage {
  std::string novel_id;
  std::size_t index = 0;
  std::string text;
  std::size_t word_count = 0;
  std::size_t word_start = 0;
  std::size_t word_end = 0;
  double normalized_position = 0.0;

  // "<novel_id>:<index>", the reference used by annotation and evaluation files.
  std::string ref() const;
};

inline constexpr std::size_t kDefaultSegmentSize = 300;
inline constexpr std::size_t kDefaultPassageCap = 500;

std::vector<Segment> segment_fixed(const Novel& novel, std::size_t segment_size = kDefaultSegmentSize);

// Greedy packing of paragraphs (blank-line delimited) into passages of at most
// `cap` words. Paragraphs over the cap fall back to sentences, and sentences
// over the cap are cut every `cap` words.
std::vector<Passage> segment_capped(const Novel& novel, std::size_t cap = kDefaultPassageCap);

struct PassageStatistics {
  std::size_t passages = 0;
  std::size_t novels = 0;
  double mean_per_novel = 0.0;
  std::size_t min_per_novel = 0;
  std::size_t max_per_novel = 0;
  double mean_words = 0.0;
  std::size_t min_words = 0;
  std::size_t max_words = 0;
};

// Novels are counted by distinct novel_id among the passages.
PassageStatistics passage_statistics(const std::vector<Passage>& passages);

// JSON-lines I/O for passages.
std::string passage_to_json(const Passage& p);
Passage passage_from_json(std::string_view line);
void write_passages(const std::filesystem::path& path, const std::vector<Passage>& passages);
std::vector<Passage> read_passages(const std::filesystem::path& path);

}  // namespace godspell::corpus

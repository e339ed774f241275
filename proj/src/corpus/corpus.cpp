#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "godspell/corpus.hpp"
#include "godspell/csv.hpp"

namespace godspell::corpus {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

// Splits a multi-valued field on ';'. An empty field yields no values.
std::vector<std::string> split_list(std::string_view field) {
  std::vector<std::string> out;
  if (trim(field).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto pos = field.find(';', start);
    out.push_back(trim(field.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::optional<int> parse_int(std::string_view s) {
  int value = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

std::string join_list(const std::vector<std::string>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out.push_back(';');
    out += values[i];
  }
  return out;
}

enum Column { kId, kTitle, kAuthors, kGenders, kPublisher, kYear, kSeries, kAwardCategory, kAwardStatus, kAwardYear, kPath, kColumns };

}  // namespace

std::string_view to_string(Gender g) {
  switch (g) {
    case Gender::female: return "female";
    case Gender::male: return "male";
    case Gender::unknown: break;
  }
  return "unknown";
}

std::string_view to_string(AwardStatus s) { return s == AwardStatus::winner ? "winner" : "finalist"; }

std::optional<Gender> parse_gender(std::string_view s) {
  const auto v = lower(trim(s));
  if (v.empty() || v == "unknown") return Gender::unknown;
  if (v == "female" || v == "f") return Gender::female;
  if (v == "male" || v == "m") return Gender::male;
  return std::nullopt;
}

GenderGroup gender_group(const Novel& novel) {
  if (novel.authors.empty()) return GenderGroup::mixed;
  const Gender first = novel.authors.front().gender;
  if (first == Gender::unknown) return GenderGroup::mixed;
  for (const auto& a : novel.authors) {
    if (a.gender != first) return GenderGroup::mixed;
  }
  return first == Gender::female ? GenderGroup::female : GenderGroup::male;
}

const Novel* Corpus::find(std::string_view id) const {
  for (const auto& n : novels) {
    if (n.id == id) return &n;
  }
  return nullptr;
}

std::vector<Novel> parse_manifest(std::string_view csv_text, const std::string& origin) {
  std::vector<std::size_t> lines;
  auto rows = csv::parse(csv_text, &lines);
  if (rows.empty()) throw CorpusError(origin + ": empty manifest");

  const std::string expected(kManifestHeader);
  if (csv::join(rows.front()) != expected) {
    throw CorpusError(origin + ": header must be '" + expected + "'");
  }

  std::vector<Novel> novels;
  std::set<std::string> seen;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    auto fail = [&](const std::string& why) -> CorpusError {
      return CorpusError(origin + ": row " + std::to_string(r) + " (line " + std::to_string(lines[r]) + "): " + why);
    };
    if (row.size() != kColumns) {
      throw fail("expected " + std::to_string(kColumns) + " fields, got " + std::to_string(row.size()));
    }

    Novel n;
    n.id = trim(row[kId]);
    if (n.id.empty()) throw fail("empty id");
    if (!seen.insert(n.id).second) throw CorpusError(origin + ": duplicate novel id '" + n.id + "'");
    n.title = trim(row[kTitle]);

    const auto names = split_list(row[kAuthors]);
    const auto genders = split_list(row[kGenders]);
    if (names.empty()) throw fail("no authors");
    if (genders.size() > names.size()) throw fail("more genders than authors");
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i].empty()) throw fail("empty author name");
      Author a{names[i], Gender::unknown};
      if (i < genders.size()) {
        const auto g = parse_gender(genders[i]);
        if (!g) throw fail("unrecognized gender '" + genders[i] + "'");
        a.gender = *g;
      }
      n.authors.push_back(std::move(a));
    }

    n.publisher = trim(row[kPublisher]);
    const auto year = parse_int(trim(row[kYear]));
    if (!year) throw fail("year is not an integer");
    if (*year < 1400 || *year > 2100) throw fail("year " + std::to_string(*year) + " outside [1400, 2100]");
    n.year = *year;

    if (auto tag = trim(row[kSeries]); !tag.empty()) n.series_tag = tag;

    const auto categories = split_list(row[kAwardCategory]);
    const auto statuses = split_list(row[kAwardStatus]);
    const auto award_years = split_list(row[kAwardYear]);
    if (statuses.size() != categories.size() || award_years.size() != categories.size()) {
      throw fail("award_category, award_status and award_year must list the same number of entries");
    }
    for (std::size_t i = 0; i < categories.size(); ++i) {
      AwardEntry e;
      e.category = categories[i];
      const auto status = lower(statuses[i]);
      if (status == "winner") {
        e.status = AwardStatus::winner;
      } else if (status == "finalist") {
        e.status = AwardStatus::finalist;
      } else {
        throw fail("award_status must be winner or finalist, got '" + statuses[i] + "'");
      }
      const auto ay = parse_int(award_years[i]);
      if (!ay) throw fail("award_year is not an integer");
      e.award_year = *ay;
      n.awards.push_back(std::move(e));
    }

    n.source_path = trim(row[kPath]);
    if (n.source_path.empty()) throw fail("empty path");
    novels.push_back(std::move(n));
  }
  return novels;
}

std::string write_manifest(const std::vector<Novel>& novels) {
  std::string out(kManifestHeader);
  out.push_back('\n');
  for (const auto& n : novels) {
    std::vector<std::string> names, genders, categories, statuses, years;
    for (const auto& a : n.authors) {
      names.push_back(a.name);
      genders.emplace_back(to_string(a.gender));
    }
    for (const auto& e : n.awards) {
      categories.push_back(e.category);
      statuses.emplace_back(to_string(e.status));
      years.push_back(std::to_string(e.award_year));
    }
    csv::Row row(kColumns);
    row[kId] = n.id;
    row[kTitle] = n.title;
    row[kAuthors] = join_list(names);
    row[kGenders] = join_list(genders);
    row[kPublisher] = n.publisher;
    row[kYear] = std::to_string(n.year);
    row[kSeries] = n.series_tag.value_or("");
    row[kAwardCategory] = join_list(categories);
    row[kAwardStatus] = join_list(statuses);
    row[kAwardYear] = join_list(years);
    row[kPath] = n.source_path.generic_string();
    out += csv::join(row);
    out.push_back('\n');
  }
  return out;
}

Corpus ingest(const std::filesystem::path& manifest) {
  std::ifstream in(manifest, std::ios::binary);
  if (!in) throw CorpusError("cannot read manifest " + manifest.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string text = buf.str();
  if (text.starts_with("\xEF\xBB\xBF")) text.erase(0, 3);

  Corpus corpus;
  corpus.novels = parse_manifest(text, manifest.string());
  const auto base = manifest.parent_path();
  for (auto& n : corpus.novels) {
    const auto path = n.source_path.is_absolute() ? n.source_path : base / n.source_path;
    std::ifstream f(path, std::ios::binary);
    if (!f) throw CorpusError("novel '" + n.id + "': cannot read text file " + path.string());
    std::ostringstream content;
    content << f.rdbuf();
    n.text = content.str();
  }
  return corpus;
}

}  // namespace godspell::corpus

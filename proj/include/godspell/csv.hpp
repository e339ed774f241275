#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace godspell::csv {

using Row = std::vector<std::string>;

// RFC 4180 style: comma separated, double-quoted fields may contain commas,
// newlines and doubled quotes. A trailing newline does not produce an empty row.
// Each parsed row remembers the 1-based line it started on.
struct Table {
  Row header;
  std::vector<Row> rows;
  std::vector<std::size_t> line_numbers;
};

std::vector<Row> parse(std::string_view text, std::vector<std::size_t>* line_numbers = nullptr);

// Reads a file with a header row. Throws ConfigError if unreadable or empty.
Table read_table(const std::filesystem::path& path);

// Column index by name, or throws ConfigError naming the file and column.
std::size_t column(const Table& table, std::string_view name, const std::filesystem::path& origin);

std::string escape(std::string_view field);
std::string join(const Row& row);

}  // namespace godspell::csv

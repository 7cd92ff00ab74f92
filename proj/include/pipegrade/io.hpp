#pragma once

#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pipegrade {

/// Reads RFC 4180 style CSV: comma separated, double-quoted fields may contain
/// commas, quotes ("") and line breaks. A UTF-8 byte-order mark is skipped.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in);

  /// Next row, or nullopt at end of input. Throws Error on an unterminated quote.
  std::optional<std::vector<std::string>> next();
  /// 1-based line number where the most recently returned row started.
  std::size_t line() const { return row_line_; }

 private:
  std::istream& in_;
  std::size_t line_ = 1;
  std::size_t row_line_ = 0;
  bool first_ = true;
};

/// Quotes a CSV field when it contains a delimiter, quote or line break.
std::string csv_escape(std::string_view field);
std::string csv_row(const std::vector<std::string>& fields);

std::string trim(std::string_view text);
std::string to_lower(std::string_view text);
/// Lower-case, trimmed, internal whitespace runs collapsed to one space.
std::string normalize_key(std::string_view text);

/// Writes through a temporary sibling file then renames over `path`, so readers
/// never observe a partially written artifact. Parent directories are created.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace pipegrade

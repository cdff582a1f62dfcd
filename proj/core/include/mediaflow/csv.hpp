#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace mediaflow::csv {

// Splits one CSV line into fields. Handles double-quoted fields with ""
// escapes; does not handle embedded newlines (our formats never emit them).
std::vector<std::string> parse_line(std::string_view line);

// Quotes a field if it contains a comma, quote, or leading/trailing space.
std::string escape(std::string_view field);

std::string join(const std::vector<std::string>& fields);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Column index by header name, -1 if absent.
  int column(std::string_view name) const;
};

// Reads a whole CSV file; first line is the header.
Table read_file(const std::filesystem::path& path);

}  // namespace mediaflow::csv

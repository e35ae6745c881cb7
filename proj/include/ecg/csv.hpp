#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ecg::csv {

using Row = std::vector<std::string>;

// Splits one CSV line. Double-quoted fields may contain commas; "" inside a
// quoted field is a literal quote. Surrounding whitespace of unquoted fields
// is trimmed.
Row split_line(std::string_view line);

// Reads every non-blank line of a UTF-8 CSV file. Throws ParseError when the
// file cannot be opened. A leading UTF-8 BOM is skipped.
std::vector<Row> read_file(const std::filesystem::path& path);

// Quotes a field only when it needs it.
std::string escape(std::string_view field);

std::string trim(std::string_view s);

}  // namespace ecg::csv

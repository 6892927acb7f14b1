#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace nnseg {

/// Parsed CSV table. Comment lines (leading '#') are kept aside.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> comments;
    std::vector<int> row_lines; ///< 1-based source line of each row

    /// Column index of `name`; throws ValidationError when missing.
    std::size_t column(std::string_view name) const;
};

/// Reads a CSV file and checks that the header equals `expected_header`.
CsvTable read_csv(const std::filesystem::path& path, const std::vector<std::string>& expected_header);

std::vector<std::string> split(std::string_view s, char sep);
std::string trim(std::string_view s);

/// Strict parsers: the whole field must be consumed.
double parse_double(std::string_view s, std::string_view what);
long long parse_int(std::string_view s, std::string_view what);

/// Fixed-point decimal, locale independent.
std::string format_fixed(double v, int decimals);

/// Shortest round-trip decimal representation.
std::string format_shortest(double v);

/// Flat `key=value` text: one pair per line, '#' starts a comment line,
/// blank lines ignored. Duplicate keys and lines without '=' are errors.
/// Pairs are returned in file order.
using KeyValues = std::vector<std::pair<std::string, std::string>>;
KeyValues parse_key_values(std::string_view content, std::string_view origin);
KeyValues read_key_values(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

} // namespace nnseg

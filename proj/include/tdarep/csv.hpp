#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace tdarep::csv {

// 17 significant digits: parses back to the identical double.
std::string format_double(double value);

// Parses a full field as a double; throws ParseError naming the line.
double parse_double(std::string_view field, std::size_t line);
long parse_long(std::string_view field, std::size_t line);

std::vector<std::string_view> split(std::string_view line, char sep = ',');
std::string_view trim(std::string_view text);

std::vector<std::string> read_lines(const std::filesystem::path& path);

// Writes to a sibling temporary file and renames it into place.
void write_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace tdarep::csv

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace roughcast::text {

std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);
std::vector<std::string> split_lines(std::string_view s);

// Strict parse: the whole (trimmed) token must be a finite decimal number.
std::optional<double> parse_double(std::string_view token);

// Shortest representation that round-trips to the same double.
std::string format_double(double value);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

} // namespace roughcast::text

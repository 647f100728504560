#ifndef TRAJGEN_TEXT_HPP_
#define TRAJGEN_TEXT_HPP_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace trajgen::text {

/// Shortest representation that parses back to the identical double.
std::string format_double(double value);

std::optional<double> parse_double(std::string_view token);
std::optional<long long> parse_int(std::string_view token);

std::vector<std::string_view> split_whitespace(std::string_view line);
std::string_view trim(std::string_view s);

std::string read_file(const std::string& path);
/// Writes atomically enough for our purposes: to a temp sibling, then renames.
void write_file(const std::string& path, std::string_view contents);

}  // namespace trajgen::text

#endif  // TRAJGEN_TEXT_HPP_

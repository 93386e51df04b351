#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace mitiforge::text {

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
std::vector<std::string_view> split_lines(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
bool starts_with_icase(std::string_view s, std::string_view prefix);

/// Case-insensitive search for `phrase` starting at `from`; npos when absent.
std::size_t find_icase(std::string_view haystack, std::string_view needle,
                       std::size_t from = 0);

/// Converts \r\n and lone \r to \n.
std::string normalize_newlines(std::string_view s);

std::string read_file(const std::string& path);
/// Writes to a sibling temp file then renames over `path`.
void write_file_atomic(const std::string& path, std::string_view contents);

/// Lower-case hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

}  // namespace mitiforge::text

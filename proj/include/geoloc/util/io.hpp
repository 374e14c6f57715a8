#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace geoloc::util {

using Json = nlohmann::json;

std::string read_text_file(const std::filesystem::path& path);

/// Writes bytes verbatim (binary mode) through a temp file + rename so a
/// reader never sees a half-written artifact. Creates parent directories.
void write_text_file(const std::filesystem::path& path, std::string_view text);

/// Calls `fn(line_number, value)` for every non-blank line. A line that is
/// not valid JSON raises ParseError naming the file and 1-based line.
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(std::size_t, const Json&)>& fn);

/// Single-line compact dump with a trailing '\n'.
std::string jsonl_line(const Json& value);

/// Splits one CSV record honoring double-quoted fields ("" escapes a quote).
std::vector<std::string> parse_csv_line(std::string_view line);

/// Quotes a field when it contains ',', '"', or a newline.
std::string csv_field(std::string_view field);

/// Byte offset -> 1-based line number within `text`.
std::size_t line_of_offset(std::string_view text, std::size_t offset);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace geoloc::util

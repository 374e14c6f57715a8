#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace geoloc::util {

std::string trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);

/// Runs of ASCII whitespace become one space; leading/trailing removed.
std::string collapse_whitespace(std::string_view s);

/// Lowercases and folds Latin letters with diacritics to ASCII
/// ("São" -> "sao", "Straße" -> "strasse"). Combining marks are dropped,
/// typographic quotes become ASCII quotes, other code points pass through.
/// Invalid UTF-8 bytes are kept as-is.
std::string fold_to_ascii_lower(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);

bool starts_with_ci(std::string_view s, std::string_view prefix);

}  // namespace geoloc::util

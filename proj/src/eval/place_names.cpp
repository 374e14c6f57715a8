#include "geoloc/eval/place_names.hpp"

#include <fmt/format.h>

#include "geoloc/error.hpp"
#include "geoloc/util/io.hpp"
#include "geoloc/util/text.hpp"

namespace geoloc::eval {
namespace {

std::string fold(std::string_view s) {
  return util::collapse_whitespace(util::fold_to_ascii_lower(s));
}

}  // namespace

AliasTable AliasTable::load_csv(const std::filesystem::path& path) {
  return from_csv_text(util::read_text_file(path), path.string());
}

AliasTable AliasTable::from_csv_text(std::string_view text, std::string_view source) {
  AliasTable table;
  std::size_t line_no = 0;
  for (const std::string& line : util::split(text, '\n')) {
    ++line_no;
    if (util::trim(line).empty() || util::trim(line).front() == '#') continue;
    const auto fields = util::parse_csv_line(line);
    if (line_no == 1 && fields.size() >= 2 && util::trim(fields[0]) == "alias") continue;
    if (fields.size() != 2) {
      throw ValidationError(
          fmt::format("{}:{}: expected 'alias,canonical'", source, line_no));
    }
    table.add(fields[0], fields[1]);
  }
  return table;
}

void AliasTable::add(std::string_view alias, std::string_view canonical) {
  std::string a = fold(alias);
  std::string c = fold(canonical);
  if (a.empty() || c.empty()) throw ValidationError("alias and canonical must be non-empty");
  if (a == c) return;
  if (auto r = resolve(c)) c = *r;
  if (a == c) {
    throw ValidationError(fmt::format("alias '{}' -> '{}' would form a cycle", a, fold(canonical)));
  }
  if (auto it = map_.find(a); it != map_.end() && it->second != c) {
    throw ValidationError(
        fmt::format("alias '{}' maps to both '{}' and '{}'", a, it->second, c));
  }
  // Existing entries that pointed at `a` now continue on to `c`.
  for (auto& [key, target] : map_) {
    if (target == a) target = c;
  }
  map_[a] = c;
}

std::optional<std::string> AliasTable::resolve(const std::string& folded) const {
  auto it = map_.find(folded);
  if (it == map_.end()) return std::nullopt;
  return it->second;
}

std::string normalize_place_name(std::string_view s, const AliasTable* aliases) {
  std::string folded = fold(s);
  if (aliases != nullptr) {
    if (auto r = aliases->resolve(folded)) return *r;
  }
  return folded;
}

}  // namespace geoloc::eval

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>

namespace geoloc::eval {

/// Alias -> canonical place name, both stored in folded form. Chains are
/// collapsed when added, so every lookup lands on a terminal name.
class AliasTable {
 public:
  /// CSV with an `alias,canonical` header.
  static AliasTable load_csv(const std::filesystem::path& path);
  static AliasTable from_csv_text(std::string_view text, std::string_view source = "<memory>");

  /// Throws ValidationError when the alias would create a cycle or
  /// conflicts with an existing mapping.
  void add(std::string_view alias, std::string_view canonical);

  std::optional<std::string> resolve(const std::string& folded) const;
  std::size_t size() const noexcept { return map_.size(); }

 private:
  std::unordered_map<std::string, std::string> map_;
};

/// Case fold, trim, collapse whitespace, strip diacritics, then resolve
/// through `aliases` when given. Idempotent.
std::string normalize_place_name(std::string_view s, const AliasTable* aliases = nullptr);

}  // namespace geoloc::eval

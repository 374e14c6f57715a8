#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "geoloc/eval/place_names.hpp"
#include "geoloc/geo/geodesy.hpp"

namespace geoloc::eval {

struct GazetteerEntry {
  std::string city;
  std::string country;
  geo::LatLon center;
  std::optional<std::uint64_t> population;
  std::vector<std::string> aliases;
};

/// Offline city-center lookup. Names and aliases are indexed after
/// normalize_place_name; a name shared by several cities is resolved by
/// country hint, then population, then country name.
class Gazetteer {
 public:
  /// CSV header: city,country,lat,lon,population,aliases (aliases are
  /// '|'-separated; population may be blank).
  static Gazetteer load_csv(const std::filesystem::path& path,
                            const AliasTable* aliases = nullptr);
  static Gazetteer from_csv_text(std::string_view text, const AliasTable* aliases = nullptr,
                                 std::string_view source = "<memory>");

  explicit Gazetteer(const AliasTable* aliases = nullptr) : aliases_(aliases) {}

  /// Throws ValidationError on a repeated (city, country) pair or invalid
  /// coordinates.
  void add(GazetteerEntry entry);

  /// Nullptr when the name is unknown.
  const GazetteerEntry* lookup(std::string_view name,
                               std::optional<std::string_view> country_hint = std::nullopt) const;

  std::optional<geo::LatLon> geocode_city(
      std::string_view name, std::optional<std::string_view> country_hint = std::nullopt) const;

  const std::vector<GazetteerEntry>& entries() const noexcept { return entries_; }

  /// Every distinct city, country, and alias spelling as written in the
  /// source, for entity tagging.
  std::vector<std::string> place_names() const;

  const AliasTable* aliases() const noexcept { return aliases_; }

 private:
  std::string norm(std::string_view s) const { return normalize_place_name(s, aliases_); }

  const AliasTable* aliases_;
  std::vector<GazetteerEntry> entries_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_name_;
  std::unordered_map<std::string, std::size_t> by_city_country_;
};

}  // namespace geoloc::eval

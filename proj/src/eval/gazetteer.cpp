#include "geoloc/eval/gazetteer.hpp"

#include <algorithm>
#include <charconv>
#include <set>

#include <fmt/format.h>

#include "geoloc/error.hpp"
#include "geoloc/util/io.hpp"
#include "geoloc/util/text.hpp"

namespace geoloc::eval {
namespace {

double to_double(const std::string& s, const std::string& where) {
  const std::string t = util::trim(s);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ValidationError(fmt::format("{}: bad number '{}'", where, s));
  }
  return v;
}

}  // namespace

Gazetteer Gazetteer::load_csv(const std::filesystem::path& path, const AliasTable* aliases) {
  return from_csv_text(util::read_text_file(path), aliases, path.string());
}

Gazetteer Gazetteer::from_csv_text(std::string_view text, const AliasTable* aliases,
                                   std::string_view source) {
  Gazetteer g(aliases);
  std::size_t line_no = 0;
  bool header_seen = false;
  for (const std::string& line : util::split(text, '\n')) {
    ++line_no;
    if (util::trim(line).empty()) continue;
    const auto f = util::parse_csv_line(line);
    if (!header_seen) {
      header_seen = true;
      if (f.size() < 4 || util::trim(f[0]) != "city" || util::trim(f[1]) != "country") {
        throw ValidationError(fmt::format(
            "{}: gazetteer header must be city,country,lat,lon,population,aliases", source));
      }
      continue;
    }
    const std::string where = fmt::format("{}:{}", source, line_no);
    if (f.size() < 4 || f.size() > 6) {
      throw ValidationError(fmt::format("{}: expected 4 to 6 fields, got {}", where, f.size()));
    }
    GazetteerEntry e;
    e.city = util::trim(f[0]);
    e.country = util::trim(f[1]);
    e.center = {to_double(f[2], where), to_double(f[3], where)};
    if (f.size() > 4 && !util::trim(f[4]).empty()) {
      e.population = static_cast<std::uint64_t>(to_double(f[4], where));
    }
    if (f.size() > 5) {
      for (const auto& a : util::split(f[5], '|')) {
        std::string alias = util::trim(a);
        if (!alias.empty()) e.aliases.push_back(std::move(alias));
      }
    }
    try {
      g.add(std::move(e));
    } catch (const ValidationError& err) {
      throw ValidationError(fmt::format("{}: {}", where, err.what()));
    }
  }
  return g;
}

void Gazetteer::add(GazetteerEntry entry) {
  if (entry.city.empty() || entry.country.empty()) {
    throw ValidationError("gazetteer entry needs city and country");
  }
  if (!geo::is_valid(entry.center)) {
    throw ValidationError(fmt::format("gazetteer entry '{}, {}' has invalid coordinates",
                                      entry.city, entry.country));
  }
  const std::string key = norm(entry.city) + "\x1f" + norm(entry.country);
  if (by_city_country_.count(key) != 0) {
    throw ValidationError(
        fmt::format("duplicate gazetteer entry '{}, {}'", entry.city, entry.country));
  }
  const std::size_t idx = entries_.size();
  by_city_country_.emplace(key, idx);
  std::set<std::string> names{norm(entry.city)};
  for (const auto& a : entry.aliases) names.insert(norm(a));
  for (const auto& n : names) by_name_[n].push_back(idx);
  entries_.push_back(std::move(entry));
}

const GazetteerEntry* Gazetteer::lookup(std::string_view name,
                                        std::optional<std::string_view> country_hint) const {
  auto it = by_name_.find(norm(name));
  if (it == by_name_.end()) return nullptr;
  std::vector<std::size_t> candidates = it->second;
  if (country_hint && !util::trim(*country_hint).empty()) {
    const std::string hint = norm(*country_hint);
    std::vector<std::size_t> filtered;
    for (std::size_t i : candidates) {
      if (norm(entries_[i].country) == hint) filtered.push_back(i);
    }
    // A hint that matches nothing is ignored rather than failing the lookup.
    if (!filtered.empty()) candidates = std::move(filtered);
  }
  const auto best = std::min_element(
      candidates.begin(), candidates.end(), [this](std::size_t a, std::size_t b) {
        const auto pa = entries_[a].population.value_or(0);
        const auto pb = entries_[b].population.value_or(0);
        if (pa != pb) return pa > pb;
        if (entries_[a].country != entries_[b].country) {
          return entries_[a].country < entries_[b].country;
        }
        return entries_[a].city < entries_[b].city;
      });
  return &entries_[*best];
}

std::optional<geo::LatLon> Gazetteer::geocode_city(
    std::string_view name, std::optional<std::string_view> country_hint) const {
  const GazetteerEntry* e = lookup(name, country_hint);
  if (e == nullptr) return std::nullopt;
  return e->center;
}

std::vector<std::string> Gazetteer::place_names() const {
  std::set<std::string> names;
  for (const auto& e : entries_) {
    names.insert(e.city);
    names.insert(e.country);
    for (const auto& a : e.aliases) names.insert(a);
  }
  return {names.begin(), names.end()};
}

}  // namespace geoloc::eval

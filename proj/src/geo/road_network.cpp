#include "geoloc/geo/road_network.hpp"

#include <unordered_set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "geoloc/error.hpp"
#include "geoloc/util/io.hpp"

namespace geoloc::geo {
namespace {

using Json = nlohmann::json;

std::optional<std::string> string_prop(const Json& props, const char* key) {
  if (!props.is_object()) return std::nullopt;
  auto it = props.find(key);
  if (it == props.end() || !it->is_string()) return std::nullopt;
  return it->get<std::string>();
}

std::string id_from_json(const Json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number()) return v.dump();
  return {};
}

std::string feature_id(const Json& feature, std::size_t index) {
  if (auto it = feature.find("id"); it != feature.end()) {
    std::string id = id_from_json(*it);
    if (!id.empty()) return id;
  }
  if (auto props = feature.find("properties");
      props != feature.end() && props->is_object()) {
    for (const char* key : {"id", "osm_id"}) {
      if (auto it = props->find(key); it != props->end()) {
        std::string id = id_from_json(*it);
        if (!id.empty()) return id;
      }
    }
  }
  return fmt::format("f{:06}", index);
}

LatLon parse_position(const Json& pos, const std::string& where) {
  if (!pos.is_array() || pos.size() < 2 || !pos[0].is_number() ||
      !pos[1].is_number()) {
    throw ValidationError(fmt::format("{}: position must be [lon, lat]", where));
  }
  LatLon p{pos[1].get<double>(), pos[0].get<double>()};
  if (!is_valid(p)) {
    throw ValidationError(fmt::format(
        "{}: coordinate out of WGS84 range (lat={}, lon={})", where, p.lat, p.lon));
  }
  return p;
}

// Returns false when fewer than two distinct vertices remain.
bool parse_line(const Json& coords, const std::string& where,
                std::vector<LatLon>& out) {
  if (!coords.is_array()) {
    throw ValidationError(fmt::format("{}: coordinates must be an array", where));
  }
  out.clear();
  for (const Json& pos : coords) {
    LatLon p = parse_position(pos, where);
    if (!out.empty() && out.back() == p) continue;
    out.push_back(p);
  }
  return out.size() >= 2;
}

}  // namespace

RoadNetwork parse_road_network(std::string_view geojson, std::string source) {
  Json doc;
  try {
    doc = Json::parse(geojson);
  } catch (const Json::parse_error& e) {
    const std::size_t byte = e.byte > 0 ? e.byte - 1 : 0;
    const std::size_t line = util::line_of_offset(geojson, byte);
    throw ParseError(fmt::format("{}: malformed GeoJSON at byte {} (line {}): {}",
                                 source, byte, line, e.what()),
                     byte, line);
  }
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" ||
      !doc.contains("features") || !doc["features"].is_array()) {
    throw ValidationError(fmt::format("{}: expected a GeoJSON FeatureCollection", source));
  }

  RoadNetwork net;
  net.source = source;
  std::unordered_set<std::string> used_ids;
  auto unique_id = [&used_ids](std::string id) {
    std::string candidate = id;
    for (int n = 2; used_ids.count(candidate) != 0; ++n) {
      candidate = fmt::format("{}#{}", id, n);
    }
    used_ids.insert(candidate);
    return candidate;
  };

  const Json& features = doc["features"];
  for (std::size_t i = 0; i < features.size(); ++i) {
    const Json& feature = features[i];
    const Json* geometry = nullptr;
    if (feature.is_object()) {
      auto it = feature.find("geometry");
      if (it != feature.end() && it->is_object()) geometry = &*it;
    }
    if (geometry == nullptr) {
      ++net.skipped_features;
      continue;
    }
    const std::string type = geometry->value("type", "");
    const std::string where = fmt::format("{}: feature {}", source, i);
    const Json props = feature.value("properties", Json::object());
    const std::string base_id = feature_id(feature, i);

    std::vector<std::vector<LatLon>> parts;
    if (type == "LineString") {
      std::vector<LatLon> line;
      if (parse_line(geometry->value("coordinates", Json()), where, line)) {
        parts.push_back(std::move(line));
      } else {
        ++net.degenerate_lines;
      }
    } else if (type == "MultiLineString") {
      const Json coords = geometry->value("coordinates", Json());
      if (!coords.is_array()) {
        throw ValidationError(fmt::format("{}: coordinates must be an array", where));
      }
      for (const Json& part : coords) {
        std::vector<LatLon> line;
        if (parse_line(part, where, line)) {
          parts.push_back(std::move(line));
        } else {
          ++net.degenerate_lines;
        }
      }
    } else {
      ++net.skipped_features;
      continue;
    }

    const bool multi = type == "MultiLineString";
    for (std::size_t k = 0; k < parts.size(); ++k) {
      Polyline pl;
      pl.id = unique_id(multi ? fmt::format("{}.{}", base_id, k) : base_id);
      pl.vertices = std::move(parts[k]);
      pl.city = string_prop(props, "city");
      pl.country = string_prop(props, "country");
      net.polylines.push_back(std::move(pl));
    }
  }

  if (net.polylines.empty()) {
    throw ValidationError(fmt::format(
        "{}: empty road network (no line geometries; {} other features skipped)",
        source, net.skipped_features));
  }
  return net;
}

RoadNetwork load_road_network(const std::filesystem::path& path) {
  return parse_road_network(util::read_text_file(path), path.string());
}

}  // namespace geoloc::geo

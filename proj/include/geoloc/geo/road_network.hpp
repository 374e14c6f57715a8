#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "geoloc/geo/geodesy.hpp"

namespace geoloc::geo {

struct Polyline {
  std::string id;
  std::vector<LatLon> vertices;  // >= 2, no consecutive duplicates
  std::optional<std::string> city;
  std::optional<std::string> country;
};

struct RoadNetwork {
  std::string source;
  std::vector<Polyline> polylines;
  std::size_t skipped_features = 0;  // non-line geometries
  std::size_t degenerate_lines = 0;  // lines left with < 2 distinct vertices
};

/// Parses a GeoJSON FeatureCollection. LineString and MultiLineString
/// geometries become polylines (one per part); everything else is counted
/// in `skipped_features`. Throws ParseError on malformed text and
/// ValidationError when no line geometry survives.
RoadNetwork parse_road_network(std::string_view geojson,
                               std::string source = "<memory>");

RoadNetwork load_road_network(const std::filesystem::path& path);

}  // namespace geoloc::geo

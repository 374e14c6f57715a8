#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "geoloc/geo/geodesy.hpp"
#include "geoloc/geo/road_network.hpp"

namespace geoloc::geo {

enum class View { kFront, kBack, kLeft, kRight };

std::string_view view_name(View v);
std::optional<View> parse_view(std::string_view name);

struct Headings {
  double front = 0.0;
  double back = 0.0;
  double left = 0.0;
  double right = 0.0;

  double of(View v) const;
};

/// back = front + 180, left = front + 270, right = front + 90 (mod 360).
Headings headings_from_front(double front_deg);

/// One lateral view (left/right) plus one axial view (front/back).
struct ViewPair {
  View lateral = View::kLeft;
  View axial = View::kFront;
};

struct GeoSample {
  std::string id;
  LatLon position;
  double road_bearing = 0.0;
  Headings headings;
  std::optional<ViewPair> selected_views;
  std::string source_polyline;
  double arc_offset_m = 0.0;
};

inline constexpr double kDefaultIntervalM = 4000.0;

/// Walks every polyline from its first vertex and emits a sample at each
/// multiple of `interval_m` of along-road arc length. The end vertex is
/// added when it lies at least interval_m / 2 past the last sample. Output
/// is sorted by (source_polyline, arc_offset_m).
std::vector<GeoSample> sample_points(const RoadNetwork& network,
                                     double interval_m = kDefaultIntervalM);

/// Picks [lateral, axial] deterministically from (sample.id, seed).
GeoSample select_views(GeoSample sample, std::uint64_t seed);

void select_all_views(std::vector<GeoSample>& samples, std::uint64_t seed);

inline constexpr std::string_view kSampleCsvHeader =
    "id,lat,lon,road_bearing,front,back,left,right,view_x,view_y,"
    "source_polyline,arc_offset_m";

std::string samples_to_csv(const std::vector<GeoSample>& samples);
std::vector<GeoSample> samples_from_csv(std::string_view csv);

void export_samples_csv(const std::vector<GeoSample>& samples,
                        const std::filesystem::path& path);

}  // namespace geoloc::geo

#pragma once

// Spherical-earth geodesy. All angles in degrees, distances in the unit
// named by the function.

namespace geoloc::geo {

/// Mean earth radius (IUGG R1).
inline constexpr double kEarthRadiusKm = 6371.0088;

struct LatLon {
  double lat = 0.0;
  double lon = 0.0;

  friend bool operator==(const LatLon&, const LatLon&) = default;
};

bool is_valid(const LatLon& p);

/// Haversine great-circle distance.
double geodesic_distance_km(const LatLon& a, const LatLon& b);

inline double geodesic_distance_m(const LatLon& a, const LatLon& b) {
  return geodesic_distance_km(a, b) * 1000.0;
}

/// Forward azimuth from a toward b, in [0, 360).
double initial_bearing_deg(const LatLon& a, const LatLon& b);

/// Point reached by travelling `distance_km` from `start` along the great
/// circle with initial azimuth `bearing_deg`.
LatLon destination(const LatLon& start, double bearing_deg, double distance_km);

/// Point at `fraction` of the way from a to b along the minor great-circle arc.
LatLon interpolate(const LatLon& a, const LatLon& b, double fraction);

/// Wraps any angle into [0, 360).
double normalize_bearing(double deg);

}  // namespace geoloc::geo

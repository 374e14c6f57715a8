#include "geoloc/geo/geodesy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace geoloc::geo {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;

double wrap_lon(double lon) {
  double w = std::fmod(lon + 540.0, 360.0) - 180.0;
  if (w == -180.0 && lon > 0.0) w = 180.0;
  return w;
}

}  // namespace

bool is_valid(const LatLon& p) {
  return std::isfinite(p.lat) && std::isfinite(p.lon) && p.lat >= -90.0 &&
         p.lat <= 90.0 && p.lon >= -180.0 && p.lon <= 180.0;
}

double normalize_bearing(double deg) {
  double b = std::fmod(deg, 360.0);
  if (b < 0.0) b += 360.0;
  if (b >= 360.0) b -= 360.0;
  return b;
}

double geodesic_distance_km(const LatLon& a, const LatLon& b) {
  const double phi1 = a.lat * kDegToRad;
  const double phi2 = b.lat * kDegToRad;
  const double dphi = (b.lat - a.lat) * kDegToRad;
  const double dlambda = (b.lon - a.lon) * kDegToRad;
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  h = std::clamp(h, 0.0, 1.0);
  return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(h));
}

double initial_bearing_deg(const LatLon& a, const LatLon& b) {
  const double phi1 = a.lat * kDegToRad;
  const double phi2 = b.lat * kDegToRad;
  const double dlambda = (b.lon - a.lon) * kDegToRad;
  const double y = std::sin(dlambda) * std::cos(phi2);
  const double x = std::cos(phi1) * std::sin(phi2) -
                   std::sin(phi1) * std::cos(phi2) * std::cos(dlambda);
  return normalize_bearing(std::atan2(y, x) * kRadToDeg);
}

LatLon destination(const LatLon& start, double bearing_deg, double distance_km) {
  const double delta = distance_km / kEarthRadiusKm;
  const double theta = bearing_deg * kDegToRad;
  const double phi1 = start.lat * kDegToRad;
  const double lambda1 = start.lon * kDegToRad;
  const double sin_phi2 = std::sin(phi1) * std::cos(delta) +
                          std::cos(phi1) * std::sin(delta) * std::cos(theta);
  const double phi2 = std::asin(std::clamp(sin_phi2, -1.0, 1.0));
  const double lambda2 =
      lambda1 + std::atan2(std::sin(theta) * std::sin(delta) * std::cos(phi1),
                           std::cos(delta) - std::sin(phi1) * sin_phi2);
  return {phi2 * kRadToDeg, wrap_lon(lambda2 * kRadToDeg)};
}

LatLon interpolate(const LatLon& a, const LatLon& b, double fraction) {
  if (fraction <= 0.0) return a;
  if (fraction >= 1.0) return b;
  const double delta = geodesic_distance_km(a, b) / kEarthRadiusKm;
  if (delta == 0.0) return a;
  const double phi1 = a.lat * kDegToRad;
  const double phi2 = b.lat * kDegToRad;
  const double l1 = a.lon * kDegToRad;
  const double l2 = b.lon * kDegToRad;
  const double sd = std::sin(delta);
  const double wa = std::sin((1.0 - fraction) * delta) / sd;
  const double wb = std::sin(fraction * delta) / sd;
  const double x = wa * std::cos(phi1) * std::cos(l1) + wb * std::cos(phi2) * std::cos(l2);
  const double y = wa * std::cos(phi1) * std::sin(l1) + wb * std::cos(phi2) * std::sin(l2);
  const double z = wa * std::sin(phi1) + wb * std::sin(phi2);
  const double lat = std::atan2(z, std::sqrt(x * x + y * y));
  const double lon = std::atan2(y, x);
  return {lat * kRadToDeg, lon * kRadToDeg};
}

}  // namespace geoloc::geo

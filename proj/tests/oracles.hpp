#pragma once
// Independent reference implementations used by the tests. They follow the
// textbook formulas directly, in long double, and share no code with the
// library.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

inline constexpr long double kR = 6371.0088L;
inline constexpr long double kPi = 3.141592653589793238462643383279502884L;

inline long double rad(long double d) { return d * kPi / 180.0L; }
inline long double deg(long double r) { return r * 180.0L / kPi; }

// Haversine with the atan2 form of the inverse.
inline double haversine_km(double lat1, double lon1, double lat2, double lon2) {
  const long double p1 = rad(lat1), p2 = rad(lat2);
  const long double dp = p2 - p1, dl = rad(lon2) - rad(lon1);
  const long double s1 = std::sin(dp / 2), s2 = std::sin(dl / 2);
  long double a = s1 * s1 + std::cos(p1) * std::cos(p2) * s2 * s2;
  if (a > 1.0L) a = 1.0L;
  return static_cast<double>(2.0L * kR * std::atan2(std::sqrt(a), std::sqrt(1.0L - a)));
}

inline long double initial_bearing(double lat1, double lon1, double lat2, double lon2) {
  const long double p1 = rad(lat1), p2 = rad(lat2), dl = rad(lon2) - rad(lon1);
  const long double y = std::sin(dl) * std::cos(p2);
  const long double x = std::cos(p1) * std::sin(p2) - std::sin(p1) * std::cos(p2) * std::cos(dl);
  return std::fmod(deg(std::atan2(y, x)) + 360.0L, 360.0L);
}

// Great-circle forward projection.
inline std::pair<double, double> project(double lat, double lon, double bearing_deg,
                                         double dist_km) {
  const long double p1 = rad(lat), l1 = rad(lon), b = rad(bearing_deg);
  const long double d = dist_km / kR;
  const long double p2 =
      std::asin(std::sin(p1) * std::cos(d) + std::cos(p1) * std::sin(d) * std::cos(b));
  long double l2 = l1 + std::atan2(std::sin(b) * std::sin(d) * std::cos(p1),
                                   std::cos(d) - std::sin(p1) * std::sin(p2));
  long double lon2 = std::fmod(deg(l2) + 540.0L, 360.0L) - 180.0L;
  return {static_cast<double>(deg(p2)), static_cast<double>(lon2)};
}

// Point at arc distance s_km from A along the great circle towards B.
inline std::pair<double, double> along(double lat1, double lon1, double lat2, double lon2,
                                       double s_km) {
  return project(lat1, lon1, static_cast<double>(initial_bearing(lat1, lon1, lat2, lon2)), s_km);
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<long double>(a[i]) * b[i];
  return static_cast<double>(s);
}

// raw m x n -> min-max -> zero below tau -> column means -> L1 normalize.
inline std::vector<double> weights(const std::vector<std::vector<double>>& raw, double tau) {
  double lo = raw[0][0], hi = raw[0][0];
  for (const auto& row : raw)
    for (double v : row) lo = std::min(lo, v), hi = std::max(hi, v);
  const std::size_t m = raw.size(), n = raw[0].size();
  std::vector<long double> mean(n, 0.0L);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double x = (raw[i][j] - lo) / (hi - lo);
      mean[j] += (x < tau ? 0.0 : x) / static_cast<long double>(m);
    }
  }
  const long double total = std::accumulate(mean.begin(), mean.end(), 0.0L);
  std::vector<double> w(n);
  for (std::size_t j = 0; j < n; ++j) w[j] = static_cast<double>(mean[j] / total);
  return w;
}

// 2ar / (a + r), the harmonic mean.
inline double f1(double a, double r) {
  const long double la = a, lr = r;
  return la + lr == 0 ? 0.0 : static_cast<double>(2 * la * lr / (la + lr));
}

inline bool is_word_byte(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u >= 0x80 || std::isalnum(u) || c == '_';
}

// True when any name occurs in text with non-word bytes (or the ends) on
// both sides.
inline bool mentions_any(const std::string& text, const std::vector<std::string>& names) {
  for (const auto& n : names) {
    if (n.empty()) continue;
    for (auto p = text.find(n); p != std::string::npos; p = text.find(n, p + 1)) {
      const bool left = p == 0 || !is_word_byte(text[p - 1]);
      const bool right = p + n.size() == text.size() || !is_word_byte(text[p + n.size()]);
      if (left && right) return true;
    }
  }
  return false;
}

}  // namespace oracle

#include "geoloc/geo/sampler.hpp"

#include <algorithm>
#include <charconv>
#include <random>

#include <fmt/format.h>

#include "geoloc/error.hpp"
#include "geoloc/util/io.hpp"
#include "geoloc/util/text.hpp"

namespace geoloc::geo {
namespace {

// Slack for "offset lands on the polyline end" under float accumulation.
constexpr double kArcEpsilonM = 1e-6;

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

GeoSample make_sample(const Polyline& pl, std::size_t ordinal, LatLon pos,
                      double bearing, double offset) {
  GeoSample s;
  s.id = fmt::format("{}:{:04}", pl.id, ordinal);
  s.position = pos;
  s.road_bearing = normalize_bearing(bearing);
  s.headings = headings_from_front(s.road_bearing);
  s.source_polyline = pl.id;
  s.arc_offset_m = offset;
  return s;
}

void sample_polyline(const Polyline& pl, double interval_m,
                     std::vector<GeoSample>& out) {
  const auto& v = pl.vertices;
  std::vector<double> cum(v.size(), 0.0);
  for (std::size_t k = 1; k < v.size(); ++k) {
    cum[k] = cum[k - 1] + geodesic_distance_m(v[k - 1], v[k]);
  }
  const double total = cum.back();

  std::size_t seg = 0;
  std::size_t ordinal = 0;
  double last_offset = 0.0;
  for (std::size_t k = 0;; ++k) {
    const double offset = static_cast<double>(k) * interval_m;
    if (offset > total + kArcEpsilonM) break;
    if (offset >= total - kArcEpsilonM && k > 0) {
      // Lands on the end vertex; handled like the end-vertex sample.
      const double bearing = initial_bearing_deg(v.back(), v[v.size() - 2]) + 180.0;
      out.push_back(make_sample(pl, ordinal++, v.back(), bearing, total));
      return;
    }
    while (seg + 1 < v.size() - 1 && cum[seg + 1] <= offset) ++seg;
    const double seg_len = cum[seg + 1] - cum[seg];
    const double fraction = seg_len > 0.0 ? (offset - cum[seg]) / seg_len : 0.0;
    const LatLon pos = interpolate(v[seg], v[seg + 1], fraction);
    const double bearing = fraction <= 0.0 ? initial_bearing_deg(v[seg], v[seg + 1])
                                           : initial_bearing_deg(pos, v[seg + 1]);
    out.push_back(make_sample(pl, ordinal++, pos, bearing, offset));
    last_offset = offset;
  }
  if (total - last_offset >= interval_m / 2.0) {
    const double bearing = initial_bearing_deg(v.back(), v[v.size() - 2]) + 180.0;
    out.push_back(make_sample(pl, ordinal, v.back(), bearing, total));
  }
}

std::string fmt7(double x) {
  std::string s = fmt::format("{:.7f}", x);
  if (s == "-0.0000000") s = "0.0000000";
  return s;
}

double parse_double(const std::string& field, std::size_t line) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw ParseError(fmt::format("samples CSV line {}: bad number '{}'", line, field),
                     0, line);
  }
  return value;
}

}  // namespace

std::string_view view_name(View v) {
  switch (v) {
    case View::kFront: return "front";
    case View::kBack: return "back";
    case View::kLeft: return "left";
    case View::kRight: return "right";
  }
  return "";
}

std::optional<View> parse_view(std::string_view name) {
  if (name == "front") return View::kFront;
  if (name == "back") return View::kBack;
  if (name == "left") return View::kLeft;
  if (name == "right") return View::kRight;
  return std::nullopt;
}

double Headings::of(View v) const {
  switch (v) {
    case View::kFront: return front;
    case View::kBack: return back;
    case View::kLeft: return left;
    case View::kRight: return right;
  }
  return front;
}

Headings headings_from_front(double front_deg) {
  const double f = normalize_bearing(front_deg);
  return {f, normalize_bearing(f + 180.0), normalize_bearing(f + 270.0),
          normalize_bearing(f + 90.0)};
}

std::vector<GeoSample> sample_points(const RoadNetwork& network, double interval_m) {
  if (!(interval_m > 0.0)) {
    throw ValidationError(fmt::format("interval must be > 0 m, got {}", interval_m));
  }
  std::vector<GeoSample> out;
  for (const Polyline& pl : network.polylines) {
    if (pl.vertices.size() < 2) continue;
    sample_polyline(pl, interval_m, out);
  }
  std::stable_sort(out.begin(), out.end(), [](const GeoSample& a, const GeoSample& b) {
    if (a.source_polyline != b.source_polyline) return a.source_polyline < b.source_polyline;
    return a.arc_offset_m < b.arc_offset_m;
  });
  return out;
}

GeoSample select_views(GeoSample sample, std::uint64_t seed) {
  std::mt19937_64 rng(splitmix64(fnv1a(sample.id) ^ splitmix64(seed)));
  const std::uint64_t bits = rng();
  sample.selected_views = ViewPair{
      (bits >> 63) != 0 ? View::kRight : View::kLeft,
      ((bits >> 62) & 1U) != 0 ? View::kBack : View::kFront,
  };
  return sample;
}

void select_all_views(std::vector<GeoSample>& samples, std::uint64_t seed) {
  for (GeoSample& s : samples) s = select_views(std::move(s), seed);
}

std::string samples_to_csv(const std::vector<GeoSample>& samples) {
  std::string out(kSampleCsvHeader);
  out.push_back('\n');
  for (const GeoSample& s : samples) {
    const std::string vx = s.selected_views ? std::string(view_name(s.selected_views->lateral)) : "";
    const std::string vy = s.selected_views ? std::string(view_name(s.selected_views->axial)) : "";
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", util::csv_field(s.id),
                       fmt7(s.position.lat), fmt7(s.position.lon), fmt7(s.road_bearing),
                       fmt7(s.headings.front), fmt7(s.headings.back),
                       fmt7(s.headings.left), fmt7(s.headings.right), vx, vy,
                       util::csv_field(s.source_polyline), fmt7(s.arc_offset_m));
  }
  return out;
}

std::vector<GeoSample> samples_from_csv(std::string_view csv) {
  std::vector<GeoSample> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < csv.size()) {
    std::size_t end = csv.find('\n', pos);
    if (end == std::string_view::npos) end = csv.size();
    const std::string_view line = csv.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line_no == 1) {
      if (util::trim(line) != kSampleCsvHeader) {
        throw ParseError("samples CSV: unexpected header", 0, 1);
      }
      continue;
    }
    if (util::trim(line).empty()) continue;
    const auto f = util::parse_csv_line(line);
    if (f.size() != 12) {
      throw ParseError(fmt::format("samples CSV line {}: expected 12 fields, got {}",
                                   line_no, f.size()),
                       0, line_no);
    }
    GeoSample s;
    s.id = f[0];
    s.position = {parse_double(f[1], line_no), parse_double(f[2], line_no)};
    s.road_bearing = parse_double(f[3], line_no);
    s.headings = {parse_double(f[4], line_no), parse_double(f[5], line_no),
                  parse_double(f[6], line_no), parse_double(f[7], line_no)};
    if (!f[8].empty() || !f[9].empty()) {
      auto x = parse_view(f[8]);
      auto y = parse_view(f[9]);
      if (!x || !y || (*x != View::kLeft && *x != View::kRight) ||
          (*y != View::kFront && *y != View::kBack)) {
        throw ParseError(fmt::format("samples CSV line {}: bad view pair", line_no), 0,
                         line_no);
      }
      s.selected_views = ViewPair{*x, *y};
    }
    s.source_polyline = f[10];
    s.arc_offset_m = parse_double(f[11], line_no);
    out.push_back(std::move(s));
  }
  return out;
}

void export_samples_csv(const std::vector<GeoSample>& samples,
                        const std::filesystem::path& path) {
  util::write_text_file(path, samples_to_csv(samples));
}

}  // namespace geoloc::geo

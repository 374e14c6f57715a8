#include "geoloc/eval/metrics.hpp"

#include <unordered_map>

#include <fmt/format.h>

#include "geoloc/error.hpp"
#include "geoloc/util/io.hpp"

namespace geoloc::eval {
namespace {

using gateway::PredictionRecord;

// Pairs every truth item with its prediction; rejects strays and gaps.
std::vector<const PredictionRecord*> align(const std::vector<PredictionRecord>& preds,
                                           const std::vector<GroundTruth>& truth) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (!index.emplace(truth[i].image_id, i).second) {
      throw ValidationError(fmt::format("truth repeats image_id '{}'", truth[i].image_id));
    }
  }
  std::vector<const PredictionRecord*> aligned(truth.size(), nullptr);
  for (const auto& p : preds) {
    auto it = index.find(p.image_id);
    if (it == index.end()) {
      throw ValidationError(fmt::format("prediction for '{}' has no ground truth", p.image_id));
    }
    if (aligned[it->second] != nullptr) {
      throw ValidationError(fmt::format("duplicate prediction for '{}'", p.image_id));
    }
    aligned[it->second] = &p;
  }
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (aligned[i] == nullptr) {
      throw ValidationError(
          fmt::format("ground truth '{}' has no prediction", truth[i].image_id));
    }
  }
  return aligned;
}

}  // namespace

std::vector<GroundTruth> load_truth(const std::filesystem::path& path) {
  std::vector<GroundTruth> out;
  util::for_each_jsonl(path, [&](std::size_t line, const util::Json& j) {
    const std::string where = fmt::format("{}:{}", path.string(), line);
    auto str = [&](const char* key) {
      auto it = j.find(key);
      if (it == j.end() || !it->is_string() || it->get<std::string>().empty()) {
        throw ValidationError(fmt::format("{}: missing '{}'", where, key));
      }
      return it->get<std::string>();
    };
    if (!j.is_object()) throw ValidationError(where + ": expected an object");
    GroundTruth t;
    t.image_id = str("image_id");
    t.country = str("country");
    t.city = str("city");
    const bool has_lat = j.contains("lat") && !j["lat"].is_null();
    const bool has_lon = j.contains("lon") && !j["lon"].is_null();
    if (has_lat != has_lon) throw ValidationError(where + ": lat and lon must appear together");
    if (has_lat) {
      if (!j["lat"].is_number() || !j["lon"].is_number()) {
        throw ValidationError(where + ": lat/lon must be numbers");
      }
      geo::LatLon p{j["lat"].get<double>(), j["lon"].get<double>()};
      if (!geo::is_valid(p)) throw ValidationError(where + ": coordinates outside WGS84 range");
      t.position = p;
    }
    out.push_back(std::move(t));
  });
  return out;
}

const char* level_name(Level level) { return level == Level::kCountry ? "country" : "city"; }

double f1_score(double accuracy, double recall) {
  const double sum = accuracy + recall;
  return sum > 0.0 ? 2.0 * accuracy * recall / sum : 0.0;
}

LevelMetrics LevelMetrics::from_rates(double accuracy, double recall) {
  LevelMetrics m;
  m.accuracy = accuracy;
  m.recall = recall;
  m.f1 = f1_score(accuracy, recall);
  return m;
}

LevelMetrics compute_level_metrics(const std::vector<PredictionRecord>& preds,
                                   const std::vector<GroundTruth>& truth, Level level,
                                   const AliasTable* aliases) {
  const auto aligned = align(preds, truth);
  LevelMetrics m;
  m.total = truth.size();
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const PredictionRecord& p = *aligned[i];
    if (!p.effective) continue;
    ++m.effective;
    const std::string& predicted = level == Level::kCountry ? *p.country : *p.city;
    const std::string& expected = level == Level::kCountry ? truth[i].country : truth[i].city;
    if (normalize_place_name(predicted, aliases) == normalize_place_name(expected, aliases)) {
      ++m.correct;
    }
  }
  if (m.total > 0) m.recall = static_cast<double>(m.effective) / static_cast<double>(m.total);
  if (m.effective > 0) {
    m.accuracy = static_cast<double>(m.correct) / static_cast<double>(m.effective);
    m.f1 = f1_score(*m.accuracy, m.recall);
  }
  return m;
}

ThresholdAccuracy threshold_accuracy(const std::vector<PredictionRecord>& preds,
                                     const std::vector<GroundTruth>& truth,
                                     const Gazetteer& gazetteer,
                                     const std::vector<double>& thresholds_km) {
  for (double t : thresholds_km) {
    if (!(t >= 0.0)) throw ValidationError(fmt::format("distance threshold {} is invalid", t));
  }
  const auto aligned = align(preds, truth);
  ThresholdAccuracy r;
  r.thresholds_km = thresholds_km;
  r.hits.assign(thresholds_km.size(), 0);
  r.fractions.assign(thresholds_km.size(), 0.0);
  r.total = truth.size();
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (!truth[i].position) {
      throw ValidationError(
          fmt::format("ground truth '{}' has no coordinates", truth[i].image_id));
    }
    const PredictionRecord& p = *aligned[i];
    if (!p.effective) continue;
    const auto where = gazetteer.geocode_city(*p.city, std::string_view(*p.country));
    if (!where) {
      ++r.not_found;
      continue;
    }
    const double d = geo::geodesic_distance_km(*where, *truth[i].position);
    for (std::size_t k = 0; k < thresholds_km.size(); ++k) {
      if (d <= thresholds_km[k]) ++r.hits[k];
    }
  }
  if (r.total > 0) {
    for (std::size_t k = 0; k < thresholds_km.size(); ++k) {
      r.fractions[k] = static_cast<double>(r.hits[k]) / static_cast<double>(r.total);
    }
  }
  return r;
}

FailureCounts count_failures(const std::vector<PredictionRecord>& preds) {
  FailureCounts c;
  c.total = preds.size();
  for (const auto& p : preds) {
    if (p.effective) {
      ++c.effective;
      continue;
    }
    switch (p.failure_cause.value_or(gateway::FailureCause::kEmpty)) {
      case gateway::FailureCause::kRefusal: ++c.refusal; break;
      case gateway::FailureCause::kUnparseable: ++c.unparseable; break;
      case gateway::FailureCause::kTransport: ++c.transport; break;
      case gateway::FailureCause::kEmpty: ++c.empty; break;
    }
  }
  return c;
}

EvalReport evaluate(const std::vector<PredictionRecord>& preds,
                    const std::vector<GroundTruth>& truth, const Gazetteer* gazetteer,
                    const std::vector<double>& thresholds_km, const AliasTable* aliases) {
  EvalReport r;
  r.country = compute_level_metrics(preds, truth, Level::kCountry, aliases);
  r.city = compute_level_metrics(preds, truth, Level::kCity, aliases);
  r.counts = count_failures(preds);
  if (r.counts.total != r.counts.effective + r.counts.failures()) {
    throw StageError("failure accounting does not add up to the prediction count");
  }
  bool all_positioned = !truth.empty();
  for (const auto& t : truth) all_positioned = all_positioned && t.position.has_value();
  if (gazetteer != nullptr && all_positioned) {
    r.distance = threshold_accuracy(preds, truth, *gazetteer, thresholds_km);
  }
  return r;
}

}  // namespace geoloc::eval

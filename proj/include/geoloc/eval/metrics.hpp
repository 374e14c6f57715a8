#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "geoloc/eval/gazetteer.hpp"
#include "geoloc/gateway/types.hpp"
#include "geoloc/geo/geodesy.hpp"

namespace geoloc::eval {

struct GroundTruth {
  std::string image_id;
  std::string country;
  std::string city;
  std::optional<geo::LatLon> position;
};

/// JSONL {"image_id","country","city","lat","lon"}; lat/lon optional but
/// must appear together.
std::vector<GroundTruth> load_truth(const std::filesystem::path& path);

enum class Level { kCountry, kCity };

const char* level_name(Level level);

/// Harmonic mean; 0 when both inputs are 0.
double f1_score(double accuracy, double recall);

struct LevelMetrics {
  std::optional<double> accuracy;  // undefined when nothing was effective
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t correct = 0;
  std::size_t effective = 0;
  std::size_t total = 0;

  /// Builds a row from already-computed rates (e.g. published tables).
  static LevelMetrics from_rates(double accuracy, double recall);
};

/// recall = effective / total; accuracy = correct / effective, where a
/// prediction is correct when its normalized name equals the truth's at
/// `level`. Every truth id must have exactly one prediction.
LevelMetrics compute_level_metrics(const std::vector<gateway::PredictionRecord>& preds,
                                   const std::vector<GroundTruth>& truth, Level level,
                                   const AliasTable* aliases = nullptr);

inline constexpr std::array<double, 3> kDefaultThresholdsKm = {1.0, 25.0, 750.0};

struct ThresholdAccuracy {
  std::vector<double> thresholds_km;
  std::vector<double> fractions;   // hits / total
  std::vector<std::size_t> hits;
  std::size_t total = 0;
  std::size_t not_found = 0;       // effective answers the gazetteer could not place
};

/// Geocodes each predicted city (country as hint) and counts it under every
/// threshold whose radius covers the distance to the truth position.
/// Ineffective and unplaceable predictions miss everywhere; fractions are
/// over all truth items.
ThresholdAccuracy threshold_accuracy(
    const std::vector<gateway::PredictionRecord>& preds, const std::vector<GroundTruth>& truth,
    const Gazetteer& gazetteer,
    const std::vector<double>& thresholds_km = {kDefaultThresholdsKm.begin(),
                                                kDefaultThresholdsKm.end()});

struct FailureCounts {
  std::size_t total = 0;
  std::size_t effective = 0;
  std::size_t refusal = 0;
  std::size_t unparseable = 0;
  std::size_t transport = 0;
  std::size_t empty = 0;

  std::size_t failures() const { return refusal + unparseable + transport + empty; }
};

FailureCounts count_failures(const std::vector<gateway::PredictionRecord>& preds);

struct EvalReport {
  LevelMetrics country;
  LevelMetrics city;
  std::optional<ThresholdAccuracy> distance;
  FailureCounts counts;
};

/// Full report. Distance thresholds are computed when a gazetteer is given
/// and every truth item has a position.
EvalReport evaluate(const std::vector<gateway::PredictionRecord>& preds,
                    const std::vector<GroundTruth>& truth, const Gazetteer* gazetteer,
                    const std::vector<double>& thresholds_km = {kDefaultThresholdsKm.begin(),
                                                                kDefaultThresholdsKm.end()},
                    const AliasTable* aliases = nullptr);

}  // namespace geoloc::eval

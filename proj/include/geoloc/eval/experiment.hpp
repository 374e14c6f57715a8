#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "geoloc/eval/metrics.hpp"
#include "geoloc/gateway/batch.hpp"

namespace geoloc::eval {

struct DatasetVariant {
  double high_fraction = 0.0;  // share of high-locatability images, in [0, 1]
  std::vector<gateway::ManifestEntry> manifest;
};

struct CurveRow {
  double high_fraction = 0.0;
  std::optional<double> country_accuracy;
  std::optional<double> city_accuracy;
  std::size_t images = 0;
};

/// Runs batch inference on every variant and scores it against the truth
/// rows whose ids appear in that variant. Checkpoints go to
/// `checkpoint_dir/variant-NNN.jsonl` so an interrupted sweep resumes.
std::vector<CurveRow> proportion_experiment(const std::vector<DatasetVariant>& variants,
                                            const gateway::EndpointConfig& endpoint,
                                            const std::vector<GroundTruth>& truth,
                                            const std::filesystem::path& checkpoint_dir,
                                            const AliasTable* aliases = nullptr);

/// Header `high_fraction,country_accuracy,city_accuracy,images`; NA for
/// undefined accuracies.
std::string curve_rows_to_csv(const std::vector<CurveRow>& rows);

}  // namespace geoloc::eval

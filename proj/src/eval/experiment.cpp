#include "geoloc/eval/experiment.hpp"

#include <unordered_map>

#include <fmt/format.h>

#include "geoloc/error.hpp"

namespace geoloc::eval {

std::vector<CurveRow> proportion_experiment(const std::vector<DatasetVariant>& variants,
                                            const gateway::EndpointConfig& endpoint,
                                            const std::vector<GroundTruth>& truth,
                                            const std::filesystem::path& checkpoint_dir,
                                            const AliasTable* aliases) {
  std::unordered_map<std::string, const GroundTruth*> by_id;
  for (const auto& t : truth) by_id.emplace(t.image_id, &t);

  std::vector<CurveRow> rows;
  for (std::size_t v = 0; v < variants.size(); ++v) {
    const DatasetVariant& variant = variants[v];
    if (!(variant.high_fraction >= 0.0 && variant.high_fraction <= 1.0)) {
      throw ValidationError(
          fmt::format("variant {} has high_fraction {} outside [0, 1]", v, variant.high_fraction));
    }
    std::vector<GroundTruth> subset;
    for (const auto& e : variant.manifest) {
      auto it = by_id.find(e.image_id);
      if (it == by_id.end()) {
        throw ValidationError(
            fmt::format("variant {}: image '{}' has no ground truth", v, e.image_id));
      }
      subset.push_back(*it->second);
    }
    gateway::BatchOptions opts;
    opts.checkpoint = checkpoint_dir / fmt::format("variant-{:03}.jsonl", v);
    const auto result = gateway::batch_infer(variant.manifest, endpoint, opts);
    if (!result.complete) throw StageError(fmt::format("variant {} did not complete", v));

    CurveRow row;
    row.high_fraction = variant.high_fraction;
    row.images = subset.size();
    row.country_accuracy =
        compute_level_metrics(result.records, subset, Level::kCountry, aliases).accuracy;
    row.city_accuracy = compute_level_metrics(result.records, subset, Level::kCity, aliases).accuracy;
    rows.push_back(row);
  }
  return rows;
}

std::string curve_rows_to_csv(const std::vector<CurveRow>& rows) {
  auto cell = [](const std::optional<double>& v) {
    return v ? fmt::format("{:.6f}", *v) : std::string("NA");
  };
  std::string out = "high_fraction,country_accuracy,city_accuracy,images\n";
  for (const auto& r : rows) {
    out += fmt::format("{:.4f},{},{},{}\n", r.high_fraction, cell(r.country_accuracy),
                       cell(r.city_accuracy), r.images);
  }
  return out;
}

}  // namespace geoloc::eval

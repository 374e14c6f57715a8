#pragma once

#include <string>
#include <utility>
#include <vector>

#include "geoloc/eval/metrics.hpp"
#include "geoloc/util/io.hpp"

namespace geoloc::eval {

util::Json report_to_json(const EvalReport& report);
EvalReport report_from_json(const util::Json& j);

/// Human-readable summary table.
std::string report_to_text(const EvalReport& report);

/// One row per (level, metric) plus one per distance threshold.
std::string report_to_csv(const EvalReport& report);

struct AblationTable {
  std::vector<std::string> columns;  // country_accuracy ... city_f1
  std::vector<std::string> runs;
  std::vector<std::vector<std::optional<double>>> values;  // [run][column]
  std::vector<std::vector<bool>> best;                     // ties all marked

  std::string to_text() const;
  std::string to_csv() const;
};

/// Rows are runs, columns are {country, city} x {accuracy, recall, f1}.
/// The highest value in each column is marked; undefined accuracies never win.
AblationTable ablation_report(const std::vector<std::pair<std::string, EvalReport>>& runs);

}  // namespace geoloc::eval

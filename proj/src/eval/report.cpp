#include "geoloc/eval/report.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "geoloc/error.hpp"

namespace geoloc::eval {
namespace {

using util::Json;

Json level_json(const LevelMetrics& m) {
  return Json{{"accuracy", m.accuracy ? Json(*m.accuracy) : Json(nullptr)},
              {"recall", m.recall},
              {"f1", m.f1},
              {"correct", m.correct},
              {"effective", m.effective},
              {"total", m.total}};
}

LevelMetrics level_from_json(const Json& j) {
  LevelMetrics m;
  if (j.contains("accuracy") && !j["accuracy"].is_null()) {
    m.accuracy = j["accuracy"].get<double>();
  }
  m.recall = j.value("recall", 0.0);
  m.f1 = j.value("f1", 0.0);
  m.correct = j.value("correct", std::size_t{0});
  m.effective = j.value("effective", std::size_t{0});
  m.total = j.value("total", std::size_t{0});
  return m;
}

std::string fmt4(const std::optional<double>& v) {
  return v ? fmt::format("{:.4f}", *v) : std::string("NA");
}

}  // namespace

Json report_to_json(const EvalReport& r) {
  Json j{{"counts", Json{{"total", r.counts.total},
                         {"effective", r.counts.effective},
                         {"failures", Json{{"refusal", r.counts.refusal},
                                           {"unparseable", r.counts.unparseable},
                                           {"transport", r.counts.transport},
                                           {"empty", r.counts.empty}}}}},
         {"country", level_json(r.country)},
         {"city", level_json(r.city)}};
  if (r.distance) {
    j["threshold_accuracy"] = Json{{"thresholds_km", r.distance->thresholds_km},
                                   {"fractions", r.distance->fractions},
                                   {"hits", r.distance->hits},
                                   {"total", r.distance->total},
                                   {"not_found", r.distance->not_found}};
  } else {
    j["threshold_accuracy"] = nullptr;
  }
  return j;
}

EvalReport report_from_json(const Json& j) {
  try {
    EvalReport r;
    const Json& c = j.at("counts");
    r.counts.total = c.at("total").get<std::size_t>();
    r.counts.effective = c.at("effective").get<std::size_t>();
    const Json& f = c.at("failures");
    r.counts.refusal = f.value("refusal", std::size_t{0});
    r.counts.unparseable = f.value("unparseable", std::size_t{0});
    r.counts.transport = f.value("transport", std::size_t{0});
    r.counts.empty = f.value("empty", std::size_t{0});
    r.country = level_from_json(j.at("country"));
    r.city = level_from_json(j.at("city"));
    if (j.contains("threshold_accuracy") && !j["threshold_accuracy"].is_null()) {
      const Json& t = j["threshold_accuracy"];
      ThresholdAccuracy d;
      d.thresholds_km = t.at("thresholds_km").get<std::vector<double>>();
      d.fractions = t.at("fractions").get<std::vector<double>>();
      d.hits = t.at("hits").get<std::vector<std::size_t>>();
      d.total = t.value("total", std::size_t{0});
      d.not_found = t.value("not_found", std::size_t{0});
      r.distance = std::move(d);
    }
    return r;
  } catch (const Json::exception& e) {
    throw ValidationError(fmt::format("malformed evaluation report: {}", e.what()));
  }
}

std::string report_to_text(const EvalReport& r) {
  std::string out;
  out += fmt::format("{:<8} {:>9} {:>9} {:>9} {:>8} {:>10}\n", "level", "accuracy", "recall",
                     "f1", "correct", "effective");
  for (const auto* lm : {&r.country, &r.city}) {
    out += fmt::format("{:<8} {:>9} {:>9.4f} {:>9.4f} {:>8} {:>10}\n",
                       lm == &r.country ? "country" : "city", fmt4(lm->accuracy), lm->recall,
                       lm->f1, lm->correct, lm->effective);
  }
  out += fmt::format(
      "\ntotal {}  effective {}  refusal {}  unparseable {}  transport {}  empty {}\n",
      r.counts.total, r.counts.effective, r.counts.refusal, r.counts.unparseable,
      r.counts.transport, r.counts.empty);
  if (r.distance) {
    out += "\nthreshold_km  fraction  hits\n";
    for (std::size_t k = 0; k < r.distance->thresholds_km.size(); ++k) {
      out += fmt::format("{:>12g}  {:>8.4f}  {:>4}\n", r.distance->thresholds_km[k],
                         r.distance->fractions[k], r.distance->hits[k]);
    }
    out += fmt::format("not geocoded: {}\n", r.distance->not_found);
  }
  return out;
}

std::string report_to_csv(const EvalReport& r) {
  std::string out = "section,key,value\n";
  for (const auto* lm : {&r.country, &r.city}) {
    const char* level = lm == &r.country ? "country" : "city";
    out += fmt::format("{},accuracy,{}\n", level,
                       lm->accuracy ? fmt::format("{:.6f}", *lm->accuracy) : "NA");
    out += fmt::format("{},recall,{:.6f}\n", level, lm->recall);
    out += fmt::format("{},f1,{:.6f}\n", level, lm->f1);
  }
  out += fmt::format("counts,total,{}\ncounts,effective,{}\n", r.counts.total, r.counts.effective);
  out += fmt::format("counts,refusal,{}\ncounts,unparseable,{}\n", r.counts.refusal,
                     r.counts.unparseable);
  out += fmt::format("counts,transport,{}\ncounts,empty,{}\n", r.counts.transport, r.counts.empty);
  if (r.distance) {
    for (std::size_t k = 0; k < r.distance->thresholds_km.size(); ++k) {
      out += fmt::format("threshold_km,{:g},{:.6f}\n", r.distance->thresholds_km[k],
                         r.distance->fractions[k]);
    }
  }
  return out;
}

AblationTable ablation_report(const std::vector<std::pair<std::string, EvalReport>>& runs) {
  if (runs.empty()) throw ValidationError("ablation report needs at least one run");
  AblationTable t;
  t.columns = {"country_accuracy", "country_recall", "country_f1",
               "city_accuracy",    "city_recall",    "city_f1"};
  for (const auto& [name, rep] : runs) {
    t.runs.push_back(name);
    t.values.push_back({rep.country.accuracy, rep.country.recall, rep.country.f1,
                        rep.city.accuracy, rep.city.recall, rep.city.f1});
  }
  t.best.assign(runs.size(), std::vector<bool>(t.columns.size(), false));
  for (std::size_t c = 0; c < t.columns.size(); ++c) {
    std::optional<double> top;
    for (const auto& row : t.values) {
      if (row[c] && (!top || *row[c] > *top)) top = row[c];
    }
    if (!top) continue;
    for (std::size_t r = 0; r < t.values.size(); ++r) {
      t.best[r][c] = t.values[r][c] && *t.values[r][c] == *top;
    }
  }
  return t;
}

std::string AblationTable::to_text() const {
  std::size_t name_w = 3;
  for (const auto& r : runs) name_w = std::max(name_w, r.size());
  std::string out = fmt::format("{:<{}}", "run", name_w);
  for (const auto& c : columns) out += fmt::format("  {:>17}", c);
  out += '\n';
  for (std::size_t r = 0; r < runs.size(); ++r) {
    out += fmt::format("{:<{}}", runs[r], name_w);
    for (std::size_t c = 0; c < columns.size(); ++c) {
      const std::string cell = fmt4(values[r][c]) + (best[r][c] ? "*" : " ");
      out += fmt::format("  {:>17}", cell);
    }
    out += '\n';
  }
  out += "* best in column\n";
  return out;
}

std::string AblationTable::to_csv() const {
  std::string out = "run";
  for (const auto& c : columns) out += "," + c;
  out += ",best\n";
  for (std::size_t r = 0; r < runs.size(); ++r) {
    out += util::csv_field(runs[r]);
    std::string marks;
    for (std::size_t c = 0; c < columns.size(); ++c) {
      out += "," + fmt4(values[r][c]);
      if (best[r][c]) marks += (marks.empty() ? "" : "|") + columns[c];
    }
    out += "," + marks + "\n";
  }
  return out;
}

}  // namespace geoloc::eval

#include "geoloc/locatability/io.hpp"

#include <cmath>

#include <fmt/format.h>

namespace geoloc::loc {
namespace {

using util::Json;

std::string require_string(const Json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string() || it->get<std::string>().empty()) {
    throw ValidationError(fmt::format("{}: missing or empty string field '{}'", where, key));
  }
  return it->get<std::string>();
}

std::vector<double> require_numbers(const Json& j, const char* key,
                                    const std::string& where) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_array()) {
    throw ValidationError(fmt::format("{}: missing array field '{}'", where, key));
  }
  std::vector<double> out;
  out.reserve(it->size());
  for (const Json& v : *it) {
    if (!v.is_number()) {
      throw ValidationError(fmt::format("{}: '{}' must contain only numbers", where, key));
    }
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

std::vector<SegmentationProfile> load_profiles(const std::filesystem::path& path) {
  std::vector<SegmentationProfile> out;
  util::for_each_jsonl(path, [&](std::size_t line, const Json& j) {
    const std::string where = fmt::format("{}:{}", path.string(), line);
    if (!j.is_object()) throw ValidationError(where + ": expected an object");
    SegmentationProfile p;
    p.image_id = require_string(j, "image_id", where);
    p.label_schema_id = require_string(j, "label_schema_id", where);
    p.ratios = require_numbers(j, "ratios", where);
    p.validate();
    out.push_back(std::move(p));
  });
  return out;
}

std::string profiles_to_jsonl(const std::vector<SegmentationProfile>& profiles) {
  std::string out;
  for (const auto& p : profiles) {
    out += util::jsonl_line(Json{{"image_id", p.image_id},
                                 {"label_schema_id", p.label_schema_id},
                                 {"ratios", p.ratios}});
  }
  return out;
}

std::vector<EmbeddingRecord> load_embeddings(const std::filesystem::path& path) {
  std::vector<EmbeddingRecord> out;
  std::size_t dim = 0;
  util::for_each_jsonl(path, [&](std::size_t line, const Json& j) {
    const std::string where = fmt::format("{}:{}", path.string(), line);
    if (!j.is_object()) throw ValidationError(where + ": expected an object");
    EmbeddingRecord r;
    r.id = require_string(j, "id", where);
    const std::string kind = require_string(j, "kind", where);
    if (kind == "clue") {
      r.kind = EmbeddingKind::kClue;
    } else if (kind == "label") {
      r.kind = EmbeddingKind::kLabel;
    } else {
      throw ValidationError(fmt::format("{}: kind must be 'clue' or 'label', got '{}'",
                                        where, kind));
    }
    r.vector = require_numbers(j, "vector", where);
    if (r.vector.empty()) throw ValidationError(where + ": empty vector");
    if (dim == 0) dim = r.vector.size();
    if (r.vector.size() != dim) {
      throw ValidationError(fmt::format("{}: vector dimension {} differs from {}", where,
                                        r.vector.size(), dim));
    }
    double sq = 0.0;
    for (double v : r.vector) sq += v * v;
    if (std::abs(std::sqrt(sq) - 1.0) > 1e-6) {
      throw ValidationError(fmt::format("{}: vector is not unit length (norm {})", where,
                                        std::sqrt(sq)));
    }
    out.push_back(std::move(r));
  });
  return out;
}

std::string embeddings_to_jsonl(const std::vector<EmbeddingRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += util::jsonl_line(Json{{"id", r.id},
                                 {"kind", r.kind == EmbeddingKind::kClue ? "clue" : "label"},
                                 {"vector", r.vector}});
  }
  return out;
}

Vectors vectors_of(const std::vector<EmbeddingRecord>& records, EmbeddingKind kind) {
  Vectors out;
  for (const auto& r : records) {
    if (r.kind == kind) out.push_back(r.vector);
  }
  return out;
}

LabelSchema label_schema_of(const std::vector<EmbeddingRecord>& records, std::string id) {
  LabelSchema schema;
  std::string joined;
  for (const auto& r : records) {
    if (r.kind != EmbeddingKind::kLabel) continue;
    schema.labels.push_back(r.id);
    joined += r.id + "\n";
  }
  schema.id = id.empty() ? "labels-" + util::sha256_hex(joined).substr(0, 12) : std::move(id);
  return schema;
}

Json weights_to_json(const LocatabilityWeights& w) {
  Json j{{"label_schema_id", w.label_schema_id}, {"tau", w.tau}, {"weights", w.weights}};
  if (!w.labels.empty()) j["labels"] = w.labels;
  if (!w.corpus_id.empty()) j["corpus_id"] = w.corpus_id;
  return j;
}

LocatabilityWeights weights_from_json(const Json& j) {
  const std::string where = "weights";
  if (!j.is_object()) throw ValidationError("weights: expected a JSON object");
  LocatabilityWeights w;
  w.label_schema_id = require_string(j, "label_schema_id", where);
  w.weights = require_numbers(j, "weights", where);
  if (auto it = j.find("tau"); it != j.end() && it->is_number()) w.tau = it->get<double>();
  if (auto it = j.find("labels"); it != j.end() && it->is_array()) {
    w.labels = it->get<std::vector<std::string>>();
  }
  if (auto it = j.find("corpus_id"); it != j.end() && it->is_string()) {
    w.corpus_id = it->get<std::string>();
  }
  w.validate();
  return w;
}

void save_weights(const LocatabilityWeights& w, const std::filesystem::path& path) {
  util::write_text_file(path, weights_to_json(w).dump(2) + "\n");
}

LocatabilityWeights load_weights(const std::filesystem::path& path) {
  const std::string text = util::read_text_file(path);
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    const std::size_t byte = e.byte > 0 ? e.byte - 1 : 0;
    throw ParseError(fmt::format("{}: invalid JSON: {}", path.string(), e.what()), byte,
                     util::line_of_offset(text, byte));
  }
  return weights_from_json(j);
}

std::string scores_to_jsonl(const std::vector<LocatabilityScore>& scores) {
  std::string out;
  for (const auto& s : scores) {
    out += util::jsonl_line(Json{{"image_id", s.image_id}, {"score", s.score}});
  }
  return out;
}

std::vector<LocatabilityScore> load_scores(const std::filesystem::path& path) {
  std::vector<LocatabilityScore> out;
  util::for_each_jsonl(path, [&](std::size_t line, const Json& j) {
    const std::string where = fmt::format("{}:{}", path.string(), line);
    if (!j.is_object()) throw ValidationError(where + ": expected an object");
    LocatabilityScore s;
    s.image_id = require_string(j, "image_id", where);
    auto it = j.find("score");
    if (it == j.end() || !it->is_number()) {
      throw ValidationError(where + ": missing numeric 'score'");
    }
    s.score = it->get<double>();
    if (!(s.score >= 0.0 && s.score <= 1.0)) {
      throw ValidationError(fmt::format("{}: score {} outside [0, 1]", where, s.score));
    }
    out.push_back(std::move(s));
  });
  return out;
}

Json curation_to_json(const CurationResult& r) {
  auto list = [](const std::vector<LocatabilityScore>& v) {
    Json a = Json::array();
    for (const auto& s : v) a.push_back(Json{{"image_id", s.image_id}, {"score", s.score}});
    return a;
  };
  return Json{{"threshold", r.threshold}, {"high", list(r.high)}, {"low", list(r.low)}};
}

CurationResult curation_from_json(const Json& j) {
  CurationResult r;
  r.threshold = j.at("threshold").get<double>();
  for (const char* key : {"high", "low"}) {
    auto& dest = std::string(key) == "high" ? r.high : r.low;
    for (const Json& e : j.at(key)) {
      dest.push_back({e.at("image_id").get<std::string>(), e.at("score").get<double>()});
    }
  }
  return r;
}

std::string curve_to_csv(const std::vector<CurveBin>& curve) {
  std::string out = "bin_center,mean_score,count\n";
  for (const auto& b : curve) {
    out += fmt::format("{:.4f},{},{}\n", b.center,
                       b.mean_score ? fmt::format("{:.6f}", *b.mean_score) : "NA", b.count);
  }
  return out;
}

}  // namespace geoloc::loc

#include "geoloc/clues/clue_corpus.hpp"

#include <set>
#include <unordered_map>
#include <utility>

#include <fmt/format.h>

#include "geoloc/error.hpp"
#include "geoloc/gateway/prompt.hpp"
#include "geoloc/util/text.hpp"

namespace geoloc::clues {
namespace {

using util::Json;

// Non-empty trimmed string field, or nullopt.
std::optional<std::string> string_field(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) return std::nullopt;
  std::string v = util::trim(it->get<std::string>());
  if (v.empty()) return std::nullopt;
  return v;
}

}  // namespace

IngestResult ingest_clues(const std::filesystem::path& path) {
  return ingest_clues_text(util::read_text_file(path));
}

IngestResult ingest_clues_text(std::string_view text) {
  IngestResult out;
  std::set<std::pair<std::string, std::string>> seen;
  std::set<std::string> ids;
  std::size_t line_no = 0;
  for (const std::string& line : util::split(text, '\n')) {
    ++line_no;
    if (util::trim(line).empty()) continue;
    const Json j = Json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      out.rejections.push_back({line_no, "malformed JSON"});
      continue;
    }
    if (!j.is_object()) {
      out.rejections.push_back({line_no, "expected a JSON object"});
      continue;
    }
    std::vector<std::string> missing;
    ClueRecord r;
    const auto text_v = string_field(j, "text");
    const auto ref = string_field(j, "image_ref");
    const auto country = string_field(j, "country");
    if (!text_v) missing.emplace_back("text");
    if (!ref) missing.emplace_back("image_ref");
    if (!country) missing.emplace_back("country");
    if (!missing.empty()) {
      std::string reason = "missing";
      for (const auto& m : missing) reason += " " + m;
      out.rejections.push_back({line_no, reason});
      continue;
    }
    r.text = *text_v;
    r.image_ref = *ref;
    r.country = *country;
    r.city = string_field(j, "city");
    r.embedding_ref = string_field(j, "embedding_ref");
    r.id = string_field(j, "id").value_or(fmt::format("clue-{}", line_no));
    if (auto it = j.find("entities"); it != j.end() && it->is_array()) {
      for (const auto& e : *it) {
        if (e.is_string()) r.entities.push_back(e.get<std::string>());
      }
    }
    if (!seen.emplace(r.text, r.image_ref).second) {
      ++out.duplicates;
      continue;
    }
    if (!ids.insert(r.id).second) {
      out.rejections.push_back({line_no, fmt::format("duplicate id '{}'", r.id)});
      continue;
    }
    out.records.push_back(std::move(r));
  }
  return out;
}

Json clue_to_json(const ClueRecord& r) {
  Json j{{"id", r.id}, {"text", r.text}, {"image_ref", r.image_ref}, {"country", r.country}};
  if (r.city) j["city"] = *r.city;
  j["entities"] = r.entities;
  if (r.embedding_ref) j["embedding_ref"] = *r.embedding_ref;
  return j;
}

ClueRecord clue_from_json(const Json& j) {
  ClueRecord r;
  if (!j.is_object()) throw ValidationError("clue record must be a JSON object");
  r.id = string_field(j, "id").value_or("");
  r.text = string_field(j, "text").value_or("");
  r.image_ref = string_field(j, "image_ref").value_or("");
  r.country = string_field(j, "country").value_or("");
  r.city = string_field(j, "city");
  r.embedding_ref = string_field(j, "embedding_ref");
  if (auto it = j.find("entities"); it != j.end() && it->is_array()) {
    for (const auto& e : *it) {
      if (e.is_string()) r.entities.push_back(e.get<std::string>());
    }
  }
  return r;
}

std::string clues_to_jsonl(const std::vector<ClueRecord>& records) {
  std::string out;
  for (const auto& r : records) out += util::jsonl_line(clue_to_json(r));
  return out;
}

Json rejections_to_json(const std::vector<Rejection>& rejections) {
  Json arr = Json::array();
  for (const auto& r : rejections) arr.push_back({{"line", r.line}, {"reason", r.reason}});
  return arr;
}

ExportResult export_reasoning_corpus(const std::vector<ClueRecord>& records) {
  ExportResult out;
  const std::string question = gateway::build_reasoning_prompt();
  for (const auto& r : records) {
    if (util::trim(r.country).empty()) {
      out.skipped.push_back({r.id, "missing country"});
      continue;
    }
    if (util::trim(r.text).empty()) {
      out.skipped.push_back({r.id, "missing reasons text"});
      continue;
    }
    TuningExample e;
    e.image_ref = r.image_ref;
    e.question = question;
    e.country = r.country;
    e.reasons = r.text;
    out.examples.push_back(std::move(e));
  }
  return out;
}

ExportResult export_location_corpus(const std::vector<CuratedImage>& curated) {
  ExportResult out;
  const std::string question = gateway::build_location_prompt();
  for (const auto& c : curated) {
    if (util::trim(c.country).empty()) {
      out.skipped.push_back({c.image_id, "missing country"});
      continue;
    }
    if (!c.city || util::trim(*c.city).empty()) {
      out.skipped.push_back({c.image_id, "missing city"});
      continue;
    }
    TuningExample e;
    e.image_ref = c.image_ref;
    e.question = question;
    e.country = c.country;
    e.city = c.city;
    out.examples.push_back(std::move(e));
  }
  return out;
}

Json example_to_json(const TuningExample& e) {
  Json answer{{"country", e.country}};
  if (e.city) answer["city"] = *e.city;
  if (e.reasons) answer["reasons"] = *e.reasons;
  return Json{{"image_ref", e.image_ref}, {"question", e.question}, {"answer", answer}};
}

std::string examples_to_jsonl(const std::vector<TuningExample>& examples) {
  std::string out;
  for (const auto& e : examples) out += util::jsonl_line(example_to_json(e));
  return out;
}

Json skipped_to_json(const std::vector<Skipped>& skipped) {
  Json arr = Json::array();
  for (const auto& s : skipped) arr.push_back({{"id", s.id}, {"reason", s.reason}});
  return arr;
}

std::vector<CuratedImage> load_geotags(const std::filesystem::path& path) {
  std::vector<CuratedImage> out;
  std::set<std::string> ids;
  util::for_each_jsonl(path, [&](std::size_t line, const Json& j) {
    const std::string where = fmt::format("{}:{}", path.string(), line);
    if (!j.is_object()) throw ValidationError(where + ": expected an object");
    CuratedImage c;
    const auto id = string_field(j, "image_id");
    const auto ref = string_field(j, "image_ref");
    if (!id || !ref) throw ValidationError(where + ": image_id and image_ref are required");
    c.image_id = *id;
    c.image_ref = *ref;
    c.country = string_field(j, "country").value_or("");
    c.city = string_field(j, "city");
    if (!ids.insert(c.image_id).second) {
      throw ValidationError(fmt::format("{}: duplicate image_id '{}'", where, c.image_id));
    }
    out.push_back(std::move(c));
  });
  return out;
}

JoinResult join_high_with_geotags(const std::vector<loc::LocatabilityScore>& high,
                                  const std::vector<CuratedImage>& geotags) {
  std::unordered_map<std::string, const CuratedImage*> by_id;
  for (const auto& g : geotags) by_id.emplace(g.image_id, &g);
  JoinResult out;
  for (const auto& s : high) {
    auto it = by_id.find(s.image_id);
    if (it == by_id.end()) {
      out.unmatched.push_back({s.image_id, "no geo-tag"});
    } else {
      out.images.push_back(*it->second);
    }
  }
  return out;
}

}  // namespace geoloc::clues

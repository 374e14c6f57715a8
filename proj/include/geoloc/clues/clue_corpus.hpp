#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "geoloc/locatability/pipeline.hpp"
#include "geoloc/util/io.hpp"

namespace geoloc::clues {

struct ClueRecord {
  std::string id;
  std::string text;
  std::string image_ref;
  std::string country;
  std::optional<std::string> city;
  std::vector<std::string> entities;
  std::optional<std::string> embedding_ref;
};

struct Rejection {
  std::size_t line = 0;  // 1-based
  std::string reason;
};

struct IngestResult {
  std::vector<ClueRecord> records;
  std::vector<Rejection> rejections;
  std::size_t duplicates = 0;  // repeated (text, image_ref) pairs collapsed
};

/// JSONL with at least {text, image_ref, country}; `id` defaults to
/// "clue-<line>". Malformed JSON and missing fields are itemized rather
/// than fatal; the first occurrence of a (text, image_ref) pair wins.
IngestResult ingest_clues(const std::filesystem::path& path);
IngestResult ingest_clues_text(std::string_view text);

util::Json clue_to_json(const ClueRecord& r);
/// Lenient inverse of clue_to_json: absent fields stay empty.
ClueRecord clue_from_json(const util::Json& j);
std::string clues_to_jsonl(const std::vector<ClueRecord>& records);
util::Json rejections_to_json(const std::vector<Rejection>& rejections);

struct TuningExample {
  std::string image_ref;
  std::string question;
  std::string country;
  std::optional<std::string> city;     // stage 2 only
  std::optional<std::string> reasons;  // stage 1 only
};

struct Skipped {
  std::string id;
  std::string reason;
};

struct ExportResult {
  std::vector<TuningExample> examples;
  std::vector<Skipped> skipped;
};

/// Stage 1: answer = {country, reasons: clue text}. Records without a
/// country or text are skipped.
ExportResult export_reasoning_corpus(const std::vector<ClueRecord>& records);

struct CuratedImage {
  std::string image_id;
  std::string image_ref;
  std::string country;
  std::optional<std::string> city;
};

/// Stage 2: answer = {country, city}. Images without a city or country are
/// skipped.
ExportResult export_location_corpus(const std::vector<CuratedImage>& curated);

util::Json example_to_json(const TuningExample& e);
std::string examples_to_jsonl(const std::vector<TuningExample>& examples);
util::Json skipped_to_json(const std::vector<Skipped>& skipped);

/// Geo-tag JSONL: {"image_id", "image_ref", "country", "city"?}.
std::vector<CuratedImage> load_geotags(const std::filesystem::path& path);

struct JoinResult {
  std::vector<CuratedImage> images;  // in `high` order
  std::vector<Skipped> unmatched;    // high ids with no geo-tag
};

/// Keeps the geo-tags of the high-locatability partition.
JoinResult join_high_with_geotags(const std::vector<loc::LocatabilityScore>& high,
                                  const std::vector<CuratedImage>& geotags);

}  // namespace geoloc::clues

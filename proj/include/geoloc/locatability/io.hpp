#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "geoloc/locatability/pipeline.hpp"
#include "geoloc/util/io.hpp"

namespace geoloc::loc {

enum class EmbeddingKind { kClue, kLabel };

struct EmbeddingRecord {
  std::string id;
  EmbeddingKind kind = EmbeddingKind::kClue;
  std::vector<double> vector;
};

// {"image_id", "label_schema_id", "ratios": [..]} per line.
std::vector<SegmentationProfile> load_profiles(const std::filesystem::path& path);
std::string profiles_to_jsonl(const std::vector<SegmentationProfile>& profiles);

// {"id", "kind": "clue"|"label", "vector": [..]} per line. Vectors must be
// unit length and share one dimension across the file.
std::vector<EmbeddingRecord> load_embeddings(const std::filesystem::path& path);
std::string embeddings_to_jsonl(const std::vector<EmbeddingRecord>& records);

/// Vectors of one kind, in file order.
Vectors vectors_of(const std::vector<EmbeddingRecord>& records, EmbeddingKind kind);

/// Labels in file order. An empty `id` becomes "labels-" plus the first 12
/// hex digits of the SHA-256 of the newline-joined label ids.
LabelSchema label_schema_of(const std::vector<EmbeddingRecord>& records, std::string id = {});

// {"label_schema_id", "tau", "weights": [..], "labels": [..], "corpus_id"}
util::Json weights_to_json(const LocatabilityWeights& w);
LocatabilityWeights weights_from_json(const util::Json& j);
void save_weights(const LocatabilityWeights& w, const std::filesystem::path& path);
LocatabilityWeights load_weights(const std::filesystem::path& path);

// {"image_id", "score"} per line.
std::string scores_to_jsonl(const std::vector<LocatabilityScore>& scores);
std::vector<LocatabilityScore> load_scores(const std::filesystem::path& path);

util::Json curation_to_json(const CurationResult& r);
CurationResult curation_from_json(const util::Json& j);

std::string curve_to_csv(const std::vector<CurveBin>& curve);

}  // namespace geoloc::loc

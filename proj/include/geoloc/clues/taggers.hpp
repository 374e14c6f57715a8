#pragma once

#include <memory>
#include <string>
#include <vector>

#include "geoloc/clues/clue_corpus.hpp"
#include "geoloc/error.hpp"
#include "geoloc/eval/gazetteer.hpp"
#include "geoloc/gateway/http_client.hpp"

namespace geoloc::clues {

/// Raised by a tagger whose backend is temporarily unreachable; callers retry.
class TaggerUnavailable : public EndpointError {
 public:
  using EndpointError::EndpointError;
};

class Tagger {
 public:
  virtual ~Tagger() = default;
  /// Place-entity strings found in `text`, each as written there.
  virtual std::vector<std::string> tag(const std::string& text) = 0;
};

/// Offline matcher: every gazetteer place name occurring in the text at word
/// boundaries (case-sensitive), in order of first occurrence.
class GazetteerTagger : public Tagger {
 public:
  explicit GazetteerTagger(std::vector<std::string> place_names);
  explicit GazetteerTagger(const eval::Gazetteer& gazetteer)
      : GazetteerTagger(gazetteer.place_names()) {}

  std::vector<std::string> tag(const std::string& text) override;

 private:
  std::vector<std::string> names_;  // longest first
};

/// POST {"text"} to <base_url>/v1/entities, expecting {"entities": [...]}.
class EndpointTagger : public Tagger {
 public:
  explicit EndpointTagger(gateway::EndpointConfig config);

  std::vector<std::string> tag(const std::string& text) override;

 private:
  gateway::EndpointConfig config_;
  gateway::RateLimiter limiter_;
};

struct FilterResult {
  std::vector<ClueRecord> kept;
  std::vector<ClueRecord> dropped;
  std::vector<Skipped> drop_causes;  // aligned with `dropped`
};

inline constexpr const char* kCauseNoEntity = "no-entity";
inline constexpr const char* kCauseTaggerUnavailable = "tagger-unavailable";

/// Keeps records with at least one place entity and stores the entities on
/// them. A tagger that stays unavailable after `retries` extra attempts
/// routes the record to `dropped`. Up to `parallelism` records are tagged
/// concurrently; output order follows input order.
FilterResult filter_geo_entities(const std::vector<ClueRecord>& records, Tagger& tagger,
                                 int retries = 2, int parallelism = 1);

}  // namespace geoloc::clues

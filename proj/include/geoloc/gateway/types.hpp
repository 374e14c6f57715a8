#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "geoloc/util/io.hpp"

namespace geoloc::gateway {

enum class FailureCause { kRefusal, kUnparseable, kTransport, kEmpty };

std::string_view cause_name(FailureCause cause);
std::optional<FailureCause> parse_cause(std::string_view name);

/// One model answer. `effective` iff both country and city were parsed
/// non-empty; otherwise `failure_cause` says why not.
struct PredictionRecord {
  std::string image_id;
  std::optional<std::string> country;
  std::optional<std::string> city;
  std::optional<std::string> reasons;
  bool effective = false;
  std::optional<FailureCause> failure_cause;
  std::string raw_text;
  std::int64_t latency_ms = 0;
  int retry_count = 0;

  /// Enforces the effective/failure_cause invariant.
  void validate() const;
};

/// `with_timing` adds latency_ms and retry_count; leave it off for
/// artifacts that must be byte-stable across runs.
util::Json prediction_to_json(const PredictionRecord& p, bool with_timing);
PredictionRecord prediction_from_json(const util::Json& j);

struct EndpointConfig {
  std::string name;
  std::string base_url;                      // scheme://host[:port][/prefix]
  std::string token_env = "GEOLOC_API_TOKEN";  // env var holding the bearer token
  std::string model = "default";
  double timeout_s = 60.0;
  int max_retries = 3;
  int max_parallel = 4;
  double requests_per_minute = 0.0;  // 0 = uncapped
  double backoff_initial_ms = 500.0;
  double backoff_max_ms = 30000.0;

  void validate() const;
};

}  // namespace geoloc::gateway

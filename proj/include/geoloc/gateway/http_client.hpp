#pragma once

#include <chrono>
#include <cstdint>
#include <mutex>
#include <string>
#include <string_view>

#include "geoloc/gateway/types.hpp"
#include "geoloc/util/io.hpp"

namespace geoloc::gateway {

/// Spaces request starts at least 60 / rpm seconds apart. Thread-safe;
/// share one instance per endpoint.
class RateLimiter {
 public:
  explicit RateLimiter(double requests_per_minute);
  void acquire();

 private:
  std::mutex mu_;
  std::chrono::steady_clock::duration spacing_{};
  std::chrono::steady_clock::time_point next_{};
};

struct HttpOutcome {
  bool ok = false;
  int status = 0;          // 0 when no response was received
  std::string body;
  std::string error;       // set when !ok
  int attempts = 0;
  std::int64_t latency_ms = 0;  // wall time across all attempts
};

/// POSTs JSON to base_url + path. Retries transport errors, 5xx and 429 up
/// to config.max_retries times with exponential backoff. Never throws for
/// network trouble; inspect HttpOutcome::ok.
HttpOutcome post_json(const EndpointConfig& config, std::string_view path,
                      const util::Json& body, RateLimiter* limiter = nullptr);

struct QueryResult {
  bool ok = false;
  std::string raw_text;
  std::string error;
  int retry_count = 0;
  std::int64_t latency_ms = 0;
};

/// `image_ref` may be an http(s) URL, a data: URL, or a local file path
/// (sent inline as base64).
util::Json build_chat_request(const EndpointConfig& config, std::string_view image_ref,
                              std::string_view prompt);

/// Assistant text from a chat-completion response body. Falls back to the
/// whole body when the shape is unexpected.
std::string extract_chat_content(std::string_view body);

QueryResult query_model(const EndpointConfig& config, std::string_view image_ref,
                        std::string_view prompt, RateLimiter* limiter = nullptr);

std::string base64_encode(std::string_view bytes);

}  // namespace geoloc::gateway

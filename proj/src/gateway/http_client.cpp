#include "geoloc/gateway/http_client.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>

#include "geoloc/error.hpp"
#include "geoloc/util/text.hpp"

namespace geoloc::gateway {
namespace {

using Clock = std::chrono::steady_clock;

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // "" or "/v2" etc, no trailing slash
};

SplitUrl split_base_url(const std::string& base) {
  const std::size_t scheme_end = base.find("://");
  const std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  const std::size_t path_start = base.find('/', host_start);
  SplitUrl out;
  if (path_start == std::string::npos) {
    out.origin = base;
  } else {
    out.origin = base.substr(0, path_start);
    out.prefix = base.substr(path_start);
    while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
  }
  return out;
}

bool retryable(int status) { return status == 429 || status >= 500; }

std::string mime_for(const std::filesystem::path& p) {
  const std::string ext = util::to_lower_ascii(p.extension().string());
  if (ext == ".png") return "image/png";
  if (ext == ".webp") return "image/webp";
  if (ext == ".gif") return "image/gif";
  return "image/jpeg";
}

std::string image_url_for(std::string_view ref) {
  if (util::starts_with_ci(ref, "http://") || util::starts_with_ci(ref, "https://") ||
      util::starts_with_ci(ref, "data:")) {
    return std::string(ref);
  }
  const std::filesystem::path path{std::string(ref)};
  const std::string bytes = util::read_text_file(path);
  return fmt::format("data:{};base64,{}", mime_for(path), base64_encode(bytes));
}

}  // namespace

RateLimiter::RateLimiter(double requests_per_minute) {
  if (requests_per_minute > 0.0) {
    spacing_ = std::chrono::duration_cast<Clock::duration>(
        std::chrono::duration<double>(60.0 / requests_per_minute));
  }
}

void RateLimiter::acquire() {
  if (spacing_ == Clock::duration::zero()) return;
  Clock::time_point slot;
  {
    std::lock_guard<std::mutex> lock(mu_);
    const auto now = Clock::now();
    slot = std::max(now, next_);
    next_ = slot + spacing_;
  }
  std::this_thread::sleep_until(slot);
}

HttpOutcome post_json(const EndpointConfig& config, std::string_view path,
                      const util::Json& body, RateLimiter* limiter) {
  config.validate();
  const SplitUrl url = split_base_url(config.base_url);
  const std::string full_path = url.prefix + std::string(path);
  const std::string payload = body.dump();

  httplib::Headers headers;
  if (const char* token = std::getenv(config.token_env.c_str());
      token != nullptr && *token != '\0') {
    headers.emplace("Authorization", std::string("Bearer ") + token);
  }

  httplib::Client client(url.origin);
  const auto secs = static_cast<time_t>(config.timeout_s);
  const auto usecs = static_cast<time_t>((config.timeout_s - static_cast<double>(secs)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);

  HttpOutcome out;
  const auto start = Clock::now();
  const int attempts = 1 + config.max_retries;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0) {
      const double delay = std::min(config.backoff_initial_ms * std::pow(2.0, attempt - 1),
                                    config.backoff_max_ms);
      std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(delay));
    }
    if (limiter != nullptr) limiter->acquire();
    ++out.attempts;
    auto res = client.Post(full_path, headers, payload, "application/json");
    if (!res) {
      out.status = 0;
      out.error = fmt::format("{} {}: {}", config.base_url, full_path,
                              httplib::to_string(res.error()));
      continue;
    }
    out.status = res->status;
    out.body = res->body;
    if (res->status >= 200 && res->status < 300) {
      out.ok = true;
      out.error.clear();
      break;
    }
    out.error = fmt::format("{} {}: HTTP {}", config.base_url, full_path, res->status);
    if (!retryable(res->status)) break;
  }
  out.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start)
                       .count();
  return out;
}

util::Json build_chat_request(const EndpointConfig& config, std::string_view image_ref,
                              std::string_view prompt) {
  using util::Json;
  Json content = Json::array();
  content.push_back(Json{{"type", "text"}, {"text", std::string(prompt)}});
  content.push_back(
      Json{{"type", "image_url"}, {"image_url", Json{{"url", image_url_for(image_ref)}}}});
  return Json{{"model", config.model},
              {"messages", Json::array({Json{{"role", "user"}, {"content", content}}})}};
}

std::string extract_chat_content(std::string_view body) {
  using util::Json;
  Json j = Json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::string(body);
  auto choices = j.find("choices");
  if (choices == j.end() || !choices->is_array() || choices->empty()) {
    return std::string(body);
  }
  const Json& first = (*choices)[0];
  if (!first.is_object()) return std::string(body);
  auto msg = first.find("message");
  if (msg == first.end() || !msg->is_object()) return std::string(body);
  auto content = msg->find("content");
  if (content == msg->end()) return std::string(body);
  if (content->is_string()) return content->get<std::string>();
  if (content->is_null()) return {};
  if (content->is_array()) {
    std::string text;
    for (const Json& part : *content) {
      if (part.is_object() && part.value("type", "") == "text" && part.contains("text") &&
          part["text"].is_string()) {
        text += part["text"].get<std::string>();
      }
    }
    return text;
  }
  return std::string(body);
}

QueryResult query_model(const EndpointConfig& config, std::string_view image_ref,
                        std::string_view prompt, RateLimiter* limiter) {
  QueryResult r;
  util::Json request;
  try {
    request = build_chat_request(config, image_ref, prompt);
  } catch (const Error& e) {
    r.error = e.what();
    return r;
  }
  const HttpOutcome http = post_json(config, "/v1/chat/completions", request, limiter);
  r.retry_count = std::max(0, http.attempts - 1);
  r.latency_ms = http.latency_ms;
  if (!http.ok) {
    r.error = http.error;
    return r;
  }
  r.ok = true;
  r.raw_text = extract_chat_content(http.body);
  return r;
}

std::string base64_encode(std::string_view bytes) {
  static constexpr char kAlphabet[] =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 3 <= bytes.size(); i += 3) {
    const auto n = (static_cast<unsigned char>(bytes[i]) << 16) |
                   (static_cast<unsigned char>(bytes[i + 1]) << 8) |
                   static_cast<unsigned char>(bytes[i + 2]);
    out.push_back(kAlphabet[(n >> 18) & 63]);
    out.push_back(kAlphabet[(n >> 12) & 63]);
    out.push_back(kAlphabet[(n >> 6) & 63]);
    out.push_back(kAlphabet[n & 63]);
  }
  const std::size_t rest = bytes.size() - i;
  if (rest > 0) {
    unsigned n = static_cast<unsigned char>(bytes[i]) << 16;
    if (rest == 2) n |= static_cast<unsigned char>(bytes[i + 1]) << 8;
    out.push_back(kAlphabet[(n >> 18) & 63]);
    out.push_back(kAlphabet[(n >> 12) & 63]);
    out.push_back(rest == 2 ? kAlphabet[(n >> 6) & 63] : '=');
    out.push_back('=');
  }
  return out;
}

}  // namespace geoloc::gateway

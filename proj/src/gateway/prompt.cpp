#include "geoloc/gateway/prompt.hpp"

#include <fmt/format.h>

#include "geoloc/error.hpp"

namespace geoloc::gateway {

namespace {

constexpr std::string_view kGeolocPrompt =
    "According to the content of the image, please think step by step and deduce "
    "in which country and city the image is most likely located and offer possible "
    "explanations. Output in JSON format, e.g., {'country': '', 'city': '', "
    "'reasons':''}";

constexpr std::string_view kReasoningPrompt =
    "According to the content of the image, please think step by step and deduce "
    "in which country the image is most likely located and offer possible "
    "explanations. Output in JSON format, e.g., {'country': '', 'reasons':''}";

constexpr std::string_view kLocationPrompt =
    "According to the content of the image, please deduce in which country and "
    "city the image is most likely located. Output in JSON format, e.g., "
    "{'country': '', 'city': ''}";

}  // namespace

std::string build_geoloc_prompt() { return std::string(kGeolocPrompt); }
std::string build_reasoning_prompt() { return std::string(kReasoningPrompt); }
std::string build_location_prompt() { return std::string(kLocationPrompt); }

std::string_view cause_name(FailureCause cause) {
  switch (cause) {
    case FailureCause::kRefusal: return "refusal";
    case FailureCause::kUnparseable: return "unparseable";
    case FailureCause::kTransport: return "transport";
    case FailureCause::kEmpty: return "empty";
  }
  return "";
}

std::optional<FailureCause> parse_cause(std::string_view name) {
  if (name == "refusal") return FailureCause::kRefusal;
  if (name == "unparseable") return FailureCause::kUnparseable;
  if (name == "transport") return FailureCause::kTransport;
  if (name == "empty") return FailureCause::kEmpty;
  return std::nullopt;
}

void PredictionRecord::validate() const {
  const bool both = country && !country->empty() && city && !city->empty();
  if (effective != both) {
    throw ValidationError(fmt::format(
        "prediction '{}': effective={} but country/city presence is {}", image_id,
        effective, both));
  }
  if (!effective && !failure_cause) {
    throw ValidationError(
        fmt::format("prediction '{}': ineffective answer without a failure cause", image_id));
  }
  if (effective && failure_cause) {
    throw ValidationError(
        fmt::format("prediction '{}': effective answer carries a failure cause", image_id));
  }
}

util::Json prediction_to_json(const PredictionRecord& p, bool with_timing) {
  using util::Json;
  auto opt = [](const std::optional<std::string>& s) { return s ? Json(*s) : Json(nullptr); };
  Json j{{"image_id", p.image_id},
         {"country", opt(p.country)},
         {"city", opt(p.city)},
         {"reasons", opt(p.reasons)},
         {"effective", p.effective},
         {"failure_cause",
          p.failure_cause ? Json(std::string(cause_name(*p.failure_cause))) : Json(nullptr)},
         {"raw_text", p.raw_text}};
  if (with_timing) {
    j["latency_ms"] = p.latency_ms;
    j["retry_count"] = p.retry_count;
  }
  return j;
}

PredictionRecord prediction_from_json(const util::Json& j) {
  using util::Json;
  if (!j.is_object()) throw ValidationError("prediction: expected a JSON object");
  auto opt = [&j](const char* key) -> std::optional<std::string> {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) {
      throw ValidationError(fmt::format("prediction: '{}' must be a string", key));
    }
    return it->get<std::string>();
  };
  PredictionRecord p;
  auto id = j.find("image_id");
  if (id == j.end() || !id->is_string() || id->get<std::string>().empty()) {
    throw ValidationError("prediction: missing 'image_id'");
  }
  p.image_id = id->get<std::string>();
  p.country = opt("country");
  p.city = opt("city");
  p.reasons = opt("reasons");
  p.effective = j.value("effective", false);
  if (auto cause = opt("failure_cause")) {
    p.failure_cause = parse_cause(*cause);
    if (!p.failure_cause) {
      throw ValidationError(fmt::format("prediction '{}': unknown failure cause '{}'",
                                        p.image_id, *cause));
    }
  }
  p.raw_text = j.value("raw_text", std::string());
  p.latency_ms = j.value("latency_ms", std::int64_t{0});
  p.retry_count = j.value("retry_count", 0);
  p.validate();
  return p;
}

void EndpointConfig::validate() const {
  if (base_url.empty()) {
    throw ValidationError(fmt::format("endpoint '{}': base_url is required", name));
  }
  if (!(timeout_s > 0.0)) {
    throw ValidationError(fmt::format("endpoint '{}': timeout must be > 0", name));
  }
  if (max_parallel < 1) {
    throw ValidationError(fmt::format("endpoint '{}': max_parallel must be >= 1", name));
  }
  if (max_retries < 0) {
    throw ValidationError(fmt::format("endpoint '{}': max_retries must be >= 0", name));
  }
  if (requests_per_minute < 0.0) {
    throw ValidationError(
        fmt::format("endpoint '{}': requests_per_minute must be >= 0", name));
  }
}

}  // namespace geoloc::gateway

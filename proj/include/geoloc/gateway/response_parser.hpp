#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "geoloc/gateway/types.hpp"

namespace geoloc::gateway {

/// Case- and whitespace-insensitive substring matcher for refusal replies.
class RefusalDetector {
 public:
  /// Seeded with the two refusal replies observed from GPT-4V.
  RefusalDetector();
  explicit RefusalDetector(std::vector<std::string> patterns);

  static const std::vector<std::string>& default_patterns();

  void add_pattern(std::string pattern);
  bool matches(std::string_view text) const;
  const std::vector<std::string>& patterns() const noexcept { return patterns_; }

 private:
  std::vector<std::string> patterns_;
  std::vector<std::string> folded_;
};

struct ParsedAnswer {
  std::optional<std::string> country;
  std::optional<std::string> city;
  std::optional<std::string> reasons;
  bool effective = false;
  std::optional<FailureCause> failure_cause;
};

/// Lenient object extraction: the first '{' that starts a parsable object
/// wins. Accepts single- or double-quoted strings, bare keys, and trailing
/// commas. Nested values are flattened to text. Keys are lowercased.
/// Returns nullopt when no object can be read.
std::optional<std::map<std::string, std::string>> extract_first_object(
    std::string_view text);

/// Never throws. Order: blank -> empty; refusal pattern -> refusal; no
/// object -> unparseable; object lacking country or city -> empty.
ParsedAnswer parse_prediction(std::string_view raw,
                              const RefusalDetector& refusals = RefusalDetector());

PredictionRecord make_prediction(std::string image_id, std::string raw,
                                 const RefusalDetector& refusals = RefusalDetector());

}  // namespace geoloc::gateway

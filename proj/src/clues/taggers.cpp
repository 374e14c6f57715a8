#include "geoloc/clues/taggers.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <thread>

#include <fmt/format.h>

namespace geoloc::clues {
namespace {

// Bytes >= 0x80 belong to multi-byte letters, so they count as word chars.
bool is_word_byte(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u >= 0x80 || std::isalnum(u) != 0 || c == '_';
}

}  // namespace

GazetteerTagger::GazetteerTagger(std::vector<std::string> place_names)
    : names_(std::move(place_names)) {
  names_.erase(std::remove_if(names_.begin(), names_.end(),
                              [](const std::string& s) { return s.empty(); }),
               names_.end());
  std::sort(names_.begin(), names_.end(), [](const std::string& a, const std::string& b) {
    return a.size() != b.size() ? a.size() > b.size() : a < b;
  });
  names_.erase(std::unique(names_.begin(), names_.end()), names_.end());
}

std::vector<std::string> GazetteerTagger::tag(const std::string& text) {
  // Longer names claim their span first so "New York" hides "York".
  std::vector<bool> taken(text.size(), false);
  std::vector<std::pair<std::size_t, std::string>> hits;
  for (const auto& name : names_) {
    for (std::size_t pos = text.find(name); pos != std::string::npos;
         pos = text.find(name, pos + 1)) {
      const std::size_t end = pos + name.size();
      if (pos > 0 && is_word_byte(text[pos - 1])) continue;
      if (end < text.size() && is_word_byte(text[end])) continue;
      if (std::any_of(taken.begin() + pos, taken.begin() + end, [](bool b) { return b; })) {
        continue;
      }
      std::fill(taken.begin() + pos, taken.begin() + end, true);
      hits.emplace_back(pos, name);
    }
  }
  std::sort(hits.begin(), hits.end());
  std::vector<std::string> out;
  for (auto& [pos, name] : hits) {
    if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(std::move(name));
  }
  return out;
}

EndpointTagger::EndpointTagger(gateway::EndpointConfig config)
    : config_(std::move(config)), limiter_(config_.requests_per_minute) {
  config_.validate();
}

std::vector<std::string> EndpointTagger::tag(const std::string& text) {
  const auto outcome = gateway::post_json(config_, "/v1/entities", util::Json{{"text", text}},
                                          &limiter_);
  if (!outcome.ok) {
    throw TaggerUnavailable(fmt::format("entity endpoint '{}' failed: {}", config_.name,
                                        outcome.error));
  }
  const util::Json j = util::Json::parse(outcome.body, nullptr, false);
  if (j.is_discarded() || !j.contains("entities") || !j["entities"].is_array()) {
    throw TaggerUnavailable("entity endpoint returned an unexpected body");
  }
  std::vector<std::string> out;
  for (const auto& e : j["entities"]) {
    if (!e.is_string()) continue;
    std::string s = e.get<std::string>();
    // Only spans that really occur in the text are kept.
    if (!s.empty() && text.find(s) != std::string::npos &&
        std::find(out.begin(), out.end(), s) == out.end()) {
      out.push_back(std::move(s));
    }
  }
  return out;
}

FilterResult filter_geo_entities(const std::vector<ClueRecord>& records, Tagger& tagger,
                                 int retries, int parallelism) {
  if (retries < 0) throw ValidationError("tagger retries must be >= 0");
  if (parallelism < 1) throw ValidationError("tagger parallelism must be >= 1");

  struct Outcome {
    std::vector<std::string> entities;
    bool unavailable = false;
  };
  std::vector<Outcome> outcomes(records.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < records.size(); i = next++) {
      for (int attempt = 0;; ++attempt) {
        try {
          outcomes[i].entities = tagger.tag(records[i].text);
          break;
        } catch (const TaggerUnavailable&) {
          if (attempt >= retries) {
            outcomes[i].unavailable = true;
            break;
          }
        }
      }
    }
  };
  const std::size_t n_threads =
      std::min<std::size_t>(static_cast<std::size_t>(parallelism), records.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  FilterResult out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    ClueRecord r = records[i];
    if (outcomes[i].unavailable) {
      r.entities.clear();
      out.drop_causes.push_back({r.id, kCauseTaggerUnavailable});
      out.dropped.push_back(std::move(r));
    } else if (outcomes[i].entities.empty()) {
      r.entities.clear();
      out.drop_causes.push_back({r.id, kCauseNoEntity});
      out.dropped.push_back(std::move(r));
    } else {
      r.entities = std::move(outcomes[i].entities);
      out.kept.push_back(std::move(r));
    }
  }
  return out;
}

}  // namespace geoloc::clues

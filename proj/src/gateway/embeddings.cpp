#include "geoloc/gateway/embeddings.hpp"

#include <cmath>

#include <fmt/format.h>

#include "geoloc/error.hpp"
#include "geoloc/gateway/http_client.hpp"

namespace geoloc::gateway {

std::vector<loc::EmbeddingRecord> fetch_embeddings(const std::vector<TextItem>& items,
                                                   loc::EmbeddingKind kind,
                                                   const EndpointConfig& endpoint,
                                                   std::size_t batch_size) {
  using util::Json;
  std::vector<loc::EmbeddingRecord> out;
  if (items.empty()) return out;
  if (batch_size == 0) batch_size = 1;
  RateLimiter limiter(endpoint.requests_per_minute);
  std::size_t dim = 0;

  for (std::size_t start = 0; start < items.size(); start += batch_size) {
    const std::size_t end = std::min(items.size(), start + batch_size);
    Json input = Json::array();
    for (std::size_t i = start; i < end; ++i) input.push_back(items[i].text);
    const HttpOutcome http =
        post_json(endpoint, "/v1/embeddings", Json{{"model", endpoint.model}, {"input", input}},
                  &limiter);
    if (!http.ok) throw EndpointError(fmt::format("embedding request failed: {}", http.error));

    Json body = Json::parse(http.body, nullptr, false);
    if (body.is_discarded() || !body.contains("data") || !body["data"].is_array() ||
        body["data"].size() != end - start) {
      throw EndpointError("embedding response lacks one 'data' entry per input");
    }
    std::vector<std::vector<double>> vectors(end - start);
    for (std::size_t k = 0; k < body["data"].size(); ++k) {
      const Json& entry = body["data"][k];
      const std::size_t index = entry.value("index", k);
      if (index >= vectors.size() || !entry.contains("embedding") ||
          !entry["embedding"].is_array()) {
        throw EndpointError("malformed embedding entry in response");
      }
      vectors[index] = entry["embedding"].get<std::vector<double>>();
    }
    for (std::size_t k = 0; k < vectors.size(); ++k) {
      auto& v = vectors[k];
      const auto& item = items[start + k];
      if (dim == 0) dim = v.size();
      if (v.empty() || v.size() != dim) {
        throw ValidationError(fmt::format(
            "embedding for '{}' has dimension {}, batch uses {}", item.id, v.size(), dim));
      }
      double sq = 0.0;
      for (double x : v) sq += x * x;
      const double norm = std::sqrt(sq);
      if (!(norm > 0.0) || !std::isfinite(norm)) {
        throw ValidationError(fmt::format("embedding for '{}' is a zero vector", item.id));
      }
      for (double& x : v) x /= norm;
      out.push_back({item.id, kind, std::move(v)});
    }
  }
  return out;
}

}  // namespace geoloc::gateway

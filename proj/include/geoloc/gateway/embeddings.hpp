#pragma once

#include <string>
#include <vector>

#include "geoloc/gateway/types.hpp"
#include "geoloc/locatability/io.hpp"

namespace geoloc::gateway {

struct TextItem {
  std::string id;
  std::string text;
};

/// Embeds `items` through an embeddings endpoint (POST /v1/embeddings) in
/// batches and unit-normalizes each vector. Throws EndpointError when the
/// service fails and ValidationError on zero vectors or when dimensions
/// disagree across the batch.
std::vector<loc::EmbeddingRecord> fetch_embeddings(const std::vector<TextItem>& items,
                                                   loc::EmbeddingKind kind,
                                                   const EndpointConfig& endpoint,
                                                   std::size_t batch_size = 64);

}  // namespace geoloc::gateway

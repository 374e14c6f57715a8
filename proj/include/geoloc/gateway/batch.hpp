#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "geoloc/gateway/http_client.hpp"
#include "geoloc/gateway/response_parser.hpp"
#include "geoloc/gateway/types.hpp"

namespace geoloc::gateway {

struct ManifestEntry {
  std::string image_id;
  std::string image_ref;
};

/// `.jsonl` files hold {"image_id", "image_ref"} objects; anything else is
/// read as CSV with an `image_id,image_ref` header.
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);

/// Throws ValidationError on empty or duplicate ids.
void validate_manifest(const std::vector<ManifestEntry>& manifest);

/// Reads an existing checkpoint. A missing file is an empty checkpoint;
/// an unreadable one throws StageError so a batch never silently re-bills.
std::vector<PredictionRecord> read_checkpoint(const std::filesystem::path& path);

struct BatchOptions {
  std::filesystem::path checkpoint;
  std::string prompt;  // empty = build_geoloc_prompt()
  RefusalDetector refusals;
  /// Polled before each request; returning true stops issuing new work.
  std::function<bool()> should_stop;
  /// Checkpointed transport failures are queried again on resume.
  bool retry_transport_failures = true;
};

struct BatchResult {
  std::vector<PredictionRecord> records;  // manifest order, completed only
  std::size_t requests_issued = 0;        // queries sent in this run
  std::size_t resumed = 0;                // taken from the checkpoint
  bool complete = false;                  // every manifest id has a record
};

/// Queries every manifest image not yet in the checkpoint with at most
/// endpoint.max_parallel requests in flight. Each result is appended to the
/// checkpoint as soon as it completes.
BatchResult batch_infer(const std::vector<ManifestEntry>& manifest,
                        const EndpointConfig& endpoint, const BatchOptions& options);

}  // namespace geoloc::gateway

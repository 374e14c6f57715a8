#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "geoloc/gateway/types.hpp"

namespace geoloc::pipeline {

/// Input files. Relative paths in the config file resolve against the
/// config file's directory.
struct PipelinePaths {
  std::optional<std::filesystem::path> roads;
  std::optional<std::filesystem::path> profiles;
  std::optional<std::filesystem::path> embeddings;  // clue + label vectors
  std::optional<std::filesystem::path> clues;
  std::optional<std::filesystem::path> geotags;
  std::optional<std::filesystem::path> manifest;
  std::optional<std::filesystem::path> gazetteer;
  std::optional<std::filesystem::path> aliases;  // optional everywhere
  std::optional<std::filesystem::path> truth;
  std::filesystem::path output = "out";
};

struct PipelineParams {
  double interval_m = 4000.0;
  double tau = 0.5;
  double locatability_threshold = 0.4;
  std::vector<double> thresholds_km = {1.0, 25.0, 750.0};
  std::uint64_t seed = 0;
  std::string label_schema_id;  // empty = derived from the label ids
  std::string tagger = "gazetteer";  // or "endpoint:<name-or-url>"
  int tagger_retries = 2;
  std::string infer_endpoint;        // name of an [endpoint.<name>] section
  double curve_bin_width = 0.05;
};

struct PipelineConfig {
  PipelinePaths paths;
  PipelineParams params;
  std::map<std::string, gateway::EndpointConfig> endpoints;
  /// Extra finished runs for the ablation table: name -> report.json.
  std::map<std::string, std::filesystem::path> ablation;
  /// Endpoints whose values could not be resolved (e.g. an unset ${VAR});
  /// reported only when the endpoint is actually used.
  std::map<std::string, std::string> endpoint_errors;

  /// INI sections [paths], [params], [endpoint.<name>], [ablation].
  /// Values may reference ${ENV_VAR}; an unset variable is an error, except
  /// inside an endpoint section, where it only fails uses of that endpoint.
  static PipelineConfig load(const std::filesystem::path& path);
  static PipelineConfig from_text(std::string_view text,
                                  const std::filesystem::path& base_dir,
                                  std::string_view source = "<memory>");

  /// Throws ValidationError naming every path and setting `run-all` needs
  /// that is missing.
  void require_complete() const;

  const gateway::EndpointConfig& endpoint(const std::string& name) const;
};

/// Replaces ${NAME} with the environment value; throws ValidationError when
/// a referenced variable is unset.
std::string interpolate_env(std::string_view value);

}  // namespace geoloc::pipeline

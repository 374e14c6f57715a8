#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "geoloc/eval/metrics.hpp"
#include "geoloc/pipeline/config.hpp"
#include "geoloc/util/io.hpp"

namespace geoloc::pipeline {

/// Stage names in execution order.
const std::vector<std::string>& stage_names();

/// Output files of a stage, relative to the output directory.
std::vector<std::string> stage_outputs(std::string_view stage);

enum class StageStatus { kRan, kSkipped };

struct StageRun {
  std::string stage;
  StageStatus status = StageStatus::kRan;
  util::Json entry;  // the run-manifest record for this stage
};

struct RunContext {
  /// Polled by the infer stage between requests; true interrupts it.
  std::function<bool()> should_stop;
  /// Re-run even when the recorded hashes say nothing changed.
  bool force = false;
};

inline constexpr const char* kRunManifestName = "run-manifest.json";

/// Runs one stage. Inputs produced by another stage must already exist;
/// otherwise a StageError names that stage. The stage is skipped when the
/// run manifest shows the same input hashes, parameters and intact outputs.
StageRun run_stage(std::string_view stage, const PipelineConfig& config,
                   const RunContext& ctx = {});

/// Every stage in order; returns the evaluation report.
eval::EvalReport run_all(const PipelineConfig& config, const RunContext& ctx = {},
                         std::vector<StageRun>* runs = nullptr);

/// Recomputes every recorded input and output hash; returns a list of
/// mismatch descriptions (empty when the chain is intact).
std::vector<std::string> verify_run_manifest(const std::filesystem::path& output_dir);

}  // namespace geoloc::pipeline

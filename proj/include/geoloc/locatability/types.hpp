#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "geoloc/error.hpp"

namespace geoloc::loc {

/// Ordered segmentation label names; index k of every profile refers to
/// labels[k].
struct LabelSchema {
  std::string id;
  std::vector<std::string> labels;

  void validate() const;
  /// Throws ValidationError when `name` is not a label.
  std::size_t index_of(const std::string& name) const;
};

/// Per-image pixel-area fraction for each label of a schema.
struct SegmentationProfile {
  std::string image_id;
  std::string label_schema_id;
  std::vector<double> ratios;

  /// Ratios in [0, 1] and summing to at most 1 (unlabeled pixels allowed).
  void validate() const;
};

enum class MatrixStage { kRaw, kNormalized, kThresholded };

const char* stage_name(MatrixStage stage);

/// Dense clue x label similarity matrix, row-major.
class SimilarityMatrix {
 public:
  SimilarityMatrix(std::size_t rows, std::size_t cols, std::vector<double> values,
                   MatrixStage stage, double tau = 0.0);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  MatrixStage stage() const noexcept { return stage_; }
  /// Threshold applied to reach kThresholded; 0 otherwise.
  double tau() const noexcept { return tau_; }

  double at(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
  std::span<const double> values() const noexcept { return values_; }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> values_;
  MatrixStage stage_;
  double tau_;
};

/// Non-negative label weights summing to 1.
struct LocatabilityWeights {
  std::string label_schema_id;
  std::vector<std::string> labels;  // optional, informational
  std::vector<double> weights;
  double tau = 0.0;
  std::string corpus_id;

  void validate() const;
};

struct LocatabilityScore {
  std::string image_id;
  double score = 0.0;
};

/// Raised when every matrix entry is equal, so min-max scaling is undefined.
/// Usually means the embedding service returned identical vectors.
class DegenerateMatrixError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Raised when thresholding left no non-zero similarity.
class NoSignalError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

}  // namespace geoloc::loc

#include "geoloc/locatability/types.hpp"

#include <cmath>
#include <unordered_set>

#include <fmt/format.h>

namespace geoloc::loc {
namespace {

constexpr double kRatioSlack = 1e-9;

}  // namespace

void LabelSchema::validate() const {
  if (labels.empty()) {
    throw ValidationError(fmt::format("label schema '{}' has no labels", id));
  }
  std::unordered_set<std::string> seen;
  for (const auto& name : labels) {
    if (name.empty()) {
      throw ValidationError(fmt::format("label schema '{}' has an empty label", id));
    }
    if (!seen.insert(name).second) {
      throw ValidationError(
          fmt::format("label schema '{}' repeats label '{}'", id, name));
    }
  }
}

std::size_t LabelSchema::index_of(const std::string& name) const {
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels[k] == name) return k;
  }
  throw ValidationError(fmt::format("unknown label '{}' in schema '{}'", name, id));
}

void SegmentationProfile::validate() const {
  double sum = 0.0;
  for (std::size_t k = 0; k < ratios.size(); ++k) {
    const double r = ratios[k];
    if (!std::isfinite(r) || r < 0.0 || r > 1.0) {
      throw ValidationError(fmt::format(
          "profile '{}': ratio[{}] = {} outside [0, 1]", image_id, k, r));
    }
    sum += r;
  }
  if (sum > 1.0 + kRatioSlack) {
    throw ValidationError(
        fmt::format("profile '{}': ratios sum to {} > 1", image_id, sum));
  }
}

const char* stage_name(MatrixStage stage) {
  switch (stage) {
    case MatrixStage::kRaw: return "raw";
    case MatrixStage::kNormalized: return "normalized";
    case MatrixStage::kThresholded: return "thresholded";
  }
  return "?";
}

SimilarityMatrix::SimilarityMatrix(std::size_t rows, std::size_t cols,
                                   std::vector<double> values, MatrixStage stage,
                                   double tau)
    : rows_(rows), cols_(cols), values_(std::move(values)), stage_(stage), tau_(tau) {
  if (rows_ == 0 || cols_ == 0) {
    throw ValidationError("similarity matrix must be at least 1 x 1");
  }
  if (values_.size() != rows_ * cols_) {
    throw ValidationError(fmt::format("similarity matrix {}x{} given {} values",
                                      rows_, cols_, values_.size()));
  }
  // Raw values only need to be finite; min-max scaling is defined for any range.
  for (double v : values_) {
    if (!std::isfinite(v)) {
      throw ValidationError(fmt::format("{} similarity value {} is not finite", stage_name(stage_), v));
    }
    if (stage_ != MatrixStage::kRaw && (v < 0.0 || v > 1.0)) {
      throw ValidationError(
          fmt::format("{} similarity value {} outside [0, 1]", stage_name(stage_), v));
    }
    if (stage_ == MatrixStage::kThresholded && v != 0.0 && v < tau_) {
      throw ValidationError(fmt::format(
          "thresholded similarity value {} below tau {}", v, tau_));
    }
  }
}

void LocatabilityWeights::validate() const {
  if (weights.empty()) throw ValidationError("locatability weights are empty");
  if (!labels.empty() && labels.size() != weights.size()) {
    throw ValidationError(fmt::format("weights have {} entries but {} labels",
                                      weights.size(), labels.size()));
  }
  double sum = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) {
      throw ValidationError(fmt::format("negative or non-finite weight {}", w));
    }
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ValidationError(fmt::format("weights sum to {}, expected 1", sum));
  }
}

}  // namespace geoloc::loc

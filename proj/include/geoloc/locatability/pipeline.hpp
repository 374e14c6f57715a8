#pragma once

#include <optional>
#include <string>
#include <vector>

#include "geoloc/locatability/types.hpp"

namespace geoloc::loc {

inline constexpr double kDefaultTau = 0.5;
inline constexpr double kDefaultLocatabilityThreshold = 0.4;

using Vectors = std::vector<std::vector<double>>;

/// Cosine similarity of every clue against every label. All vectors must
/// share a dimension and have unit norm (within 1e-6).
SimilarityMatrix build_similarity_matrix(const Vectors& clue_vectors,
                                         const Vectors& label_vectors);

/// Global min-max scaling into [0, 1]. Throws DegenerateMatrixError when
/// max == min.
SimilarityMatrix minmax_normalize(const SimilarityMatrix& raw);

/// Zeroes entries strictly below tau; entries equal to tau survive.
SimilarityMatrix threshold_zero(const SimilarityMatrix& normalized, double tau);

/// Column means of the thresholded matrix, L1-normalized. Throws
/// NoSignalError when the matrix is all zero.
LocatabilityWeights reduce_to_weights(const SimilarityMatrix& thresholded,
                                      std::string label_schema_id,
                                      std::string corpus_id = {});

/// Raw embeddings -> weights in one call.
LocatabilityWeights build_weights(const Vectors& clue_vectors,
                                  const Vectors& label_vectors, double tau,
                                  const LabelSchema& schema,
                                  std::string corpus_id = {});

/// Weighted sum of area ratios.
LocatabilityScore locatability_score(const SegmentationProfile& profile,
                                     const LocatabilityWeights& weights);

/// Batched scoring; output order follows `profiles`.
std::vector<LocatabilityScore> score_profiles(
    const std::vector<SegmentationProfile>& profiles,
    const LocatabilityWeights& weights);

struct CurationResult {
  double threshold = kDefaultLocatabilityThreshold;
  std::vector<LocatabilityScore> high;  // score >= threshold
  std::vector<LocatabilityScore> low;
};

/// Both partitions are ordered by descending score, ties by image id.
CurationResult filter_by_locatability(std::vector<LocatabilityScore> scores,
                                      double threshold = kDefaultLocatabilityThreshold);

CurationResult filter_by_locatability(const std::vector<SegmentationProfile>& profiles,
                                      const LocatabilityWeights& weights,
                                      double threshold = kDefaultLocatabilityThreshold);

struct CurveBin {
  double center = 0.0;
  std::optional<double> mean_score;  // empty for bins without images
  std::size_t count = 0;
};

/// Bins images by the area ratio of `label` and averages their scores per
/// bin. `scores` must align index-for-index with `profiles`.
std::vector<CurveBin> class_proportion_curve(
    const std::vector<SegmentationProfile>& profiles,
    const std::vector<LocatabilityScore>& scores, const LabelSchema& schema,
    const std::string& label, double bin_width = 0.05);

}  // namespace geoloc::loc

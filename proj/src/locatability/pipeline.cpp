#include "geoloc/locatability/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "geoloc/kernels/kernels.hpp"

namespace geoloc::loc {
namespace {

constexpr double kUnitNormSlack = 1e-6;

std::vector<double> flatten_unit_vectors(const Vectors& vectors, std::size_t dim,
                                         const char* what) {
  const auto& k = kernels::active();
  std::vector<double> flat;
  flat.reserve(vectors.size() * dim);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    const auto& v = vectors[i];
    if (v.size() != dim) {
      throw ValidationError(fmt::format("{} vector {} has dimension {}, expected {}",
                                        what, i, v.size(), dim));
    }
    const double norm = std::sqrt(k.dot(v.data(), v.data(), dim));
    if (norm == 0.0) {
      throw ValidationError(fmt::format("{} vector {} is the zero vector", what, i));
    }
    if (std::abs(norm - 1.0) > kUnitNormSlack) {
      throw ValidationError(
          fmt::format("{} vector {} has norm {}, expected unit length", what, i, norm));
    }
    flat.insert(flat.end(), v.begin(), v.end());
  }
  return flat;
}

void sort_desc(std::vector<LocatabilityScore>& v) {
  std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.image_id < b.image_id;
  });
}

}  // namespace

SimilarityMatrix build_similarity_matrix(const Vectors& clue_vectors,
                                         const Vectors& label_vectors) {
  if (clue_vectors.empty() || label_vectors.empty()) {
    throw ValidationError("similarity matrix needs at least one clue and one label");
  }
  const std::size_t dim = clue_vectors.front().size();
  if (dim == 0) throw ValidationError("embedding vectors have dimension 0");
  const auto clues = flatten_unit_vectors(clue_vectors, dim, "clue");
  const auto labels = flatten_unit_vectors(label_vectors, dim, "label");

  const std::size_t m = clue_vectors.size();
  const std::size_t n = label_vectors.size();
  std::vector<double> values(m * n);
  kernels::active().gram(clues.data(), m, labels.data(), n, dim, values.data());
  // Rounding can push the cosine of (anti)parallel unit vectors past +-1.
  for (double& v : values) v = std::clamp(v, -1.0, 1.0);
  return SimilarityMatrix(m, n, std::move(values), MatrixStage::kRaw);
}

SimilarityMatrix minmax_normalize(const SimilarityMatrix& raw) {
  if (raw.stage() != MatrixStage::kRaw) {
    throw ValidationError(fmt::format("minmax_normalize expects a raw matrix, got {}",
                                      stage_name(raw.stage())));
  }
  const auto& k = kernels::active();
  const auto values = raw.values();
  const kernels::MinMax mm = k.min_max(values.data(), values.size());
  if (mm.max == mm.min) {
    throw DegenerateMatrixError(fmt::format(
        "similarity matrix is constant ({}); min-max normalization is undefined. "
        "Check that the embedding service returns distinct vectors for clues and labels",
        mm.min));
  }
  std::vector<double> out(values.size());
  k.affine(values.data(), values.size(), mm.min, mm.max - mm.min, out.data());
  return SimilarityMatrix(raw.rows(), raw.cols(), std::move(out),
                          MatrixStage::kNormalized);
}

SimilarityMatrix threshold_zero(const SimilarityMatrix& normalized, double tau) {
  if (normalized.stage() != MatrixStage::kNormalized) {
    throw ValidationError(fmt::format("threshold_zero expects a normalized matrix, got {}",
                                      stage_name(normalized.stage())));
  }
  if (!(tau >= 0.0 && tau <= 1.0)) {
    throw ValidationError(fmt::format("tau must lie in [0, 1], got {}", tau));
  }
  const auto values = normalized.values();
  std::vector<double> out(values.size());
  kernels::active().threshold_zero(values.data(), values.size(), tau, out.data());
  return SimilarityMatrix(normalized.rows(), normalized.cols(), std::move(out),
                          MatrixStage::kThresholded, tau);
}

LocatabilityWeights reduce_to_weights(const SimilarityMatrix& thresholded,
                                      std::string label_schema_id,
                                      std::string corpus_id) {
  if (thresholded.stage() != MatrixStage::kThresholded) {
    throw ValidationError(fmt::format("reduce_to_weights expects a thresholded matrix, got {}",
                                      stage_name(thresholded.stage())));
  }
  const std::size_t m = thresholded.rows();
  const std::size_t n = thresholded.cols();
  std::vector<double> means(n);
  kernels::active().column_sums(thresholded.values().data(), m, n, means.data());
  double total = 0.0;
  for (double& v : means) {
    v /= static_cast<double>(m);
    total += v;
  }
  if (total <= 0.0) {
    throw NoSignalError(fmt::format(
        "no clue-label similarity reaches tau = {}; lower tau or check the embeddings",
        thresholded.tau()));
  }
  LocatabilityWeights w;
  w.label_schema_id = std::move(label_schema_id);
  w.corpus_id = std::move(corpus_id);
  w.tau = thresholded.tau();
  w.weights.resize(n);
  for (std::size_t j = 0; j < n; ++j) w.weights[j] = means[j] / total;
  return w;
}

LocatabilityWeights build_weights(const Vectors& clue_vectors,
                                  const Vectors& label_vectors, double tau,
                                  const LabelSchema& schema, std::string corpus_id) {
  schema.validate();
  if (label_vectors.size() != schema.labels.size()) {
    throw ValidationError(fmt::format("schema '{}' has {} labels but {} label vectors given",
                                      schema.id, schema.labels.size(),
                                      label_vectors.size()));
  }
  const auto raw = build_similarity_matrix(clue_vectors, label_vectors);
  auto w = reduce_to_weights(threshold_zero(minmax_normalize(raw), tau), schema.id,
                             std::move(corpus_id));
  w.labels = schema.labels;
  return w;
}

LocatabilityScore locatability_score(const SegmentationProfile& profile,
                                     const LocatabilityWeights& weights) {
  if (profile.label_schema_id != weights.label_schema_id) {
    throw ValidationError(fmt::format(
        "profile '{}' uses label schema '{}' but weights were built for '{}'",
        profile.image_id, profile.label_schema_id, weights.label_schema_id));
  }
  if (profile.ratios.size() != weights.weights.size()) {
    throw ValidationError(fmt::format("profile '{}' has {} ratios, weights have {}",
                                      profile.image_id, profile.ratios.size(),
                                      weights.weights.size()));
  }
  profile.validate();
  const double s = kernels::active().dot(profile.ratios.data(), weights.weights.data(),
                                         profile.ratios.size());
  return {profile.image_id, std::clamp(s, 0.0, 1.0)};
}

std::vector<LocatabilityScore> score_profiles(
    const std::vector<SegmentationProfile>& profiles,
    const LocatabilityWeights& weights) {
  const std::size_t n = weights.weights.size();
  std::vector<double> packed;
  packed.reserve(profiles.size() * n);
  for (const auto& p : profiles) {
    if (p.label_schema_id != weights.label_schema_id) {
      throw ValidationError(fmt::format(
          "profile '{}' uses label schema '{}' but weights were built for '{}'",
          p.image_id, p.label_schema_id, weights.label_schema_id));
    }
    if (p.ratios.size() != n) {
      throw ValidationError(fmt::format("profile '{}' has {} ratios, weights have {}",
                                        p.image_id, p.ratios.size(), n));
    }
    p.validate();
    packed.insert(packed.end(), p.ratios.begin(), p.ratios.end());
  }
  std::vector<double> raw(profiles.size());
  kernels::active().row_dots(packed.data(), profiles.size(), n, weights.weights.data(),
                             raw.data());
  std::vector<LocatabilityScore> out;
  out.reserve(profiles.size());
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    out.push_back({profiles[i].image_id, std::clamp(raw[i], 0.0, 1.0)});
  }
  return out;
}

CurationResult filter_by_locatability(std::vector<LocatabilityScore> scores,
                                      double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw ValidationError(
        fmt::format("locatability threshold must lie in [0, 1], got {}", threshold));
  }
  CurationResult r;
  r.threshold = threshold;
  for (auto& s : scores) {
    (s.score >= threshold ? r.high : r.low).push_back(std::move(s));
  }
  sort_desc(r.high);
  sort_desc(r.low);
  return r;
}

CurationResult filter_by_locatability(const std::vector<SegmentationProfile>& profiles,
                                      const LocatabilityWeights& weights,
                                      double threshold) {
  return filter_by_locatability(score_profiles(profiles, weights), threshold);
}

std::vector<CurveBin> class_proportion_curve(
    const std::vector<SegmentationProfile>& profiles,
    const std::vector<LocatabilityScore>& scores, const LabelSchema& schema,
    const std::string& label, double bin_width) {
  if (!(bin_width > 0.0 && bin_width <= 1.0)) {
    throw ValidationError(fmt::format("bin width must lie in (0, 1], got {}", bin_width));
  }
  if (scores.size() != profiles.size()) {
    throw ValidationError("scores must align with profiles");
  }
  const std::size_t k = schema.index_of(label);
  // 1 / 0.05 is 20.000000000000004 in binary; don't let that add a bin.
  const auto bins =
      static_cast<std::size_t>(std::max(1.0, std::ceil(1.0 / bin_width - 1e-9)));
  std::vector<double> sums(bins, 0.0);
  std::vector<std::size_t> counts(bins, 0);
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    const auto& p = profiles[i];
    if (p.image_id != scores[i].image_id) {
      throw ValidationError(fmt::format("score for '{}' does not align with profile '{}'",
                                        scores[i].image_id, p.image_id));
    }
    if (k >= p.ratios.size()) {
      throw ValidationError(fmt::format("profile '{}' lacks label index {}", p.image_id, k));
    }
    auto b = static_cast<std::size_t>(std::floor(p.ratios[k] / bin_width + 1e-12));
    b = std::min(b, bins - 1);
    sums[b] += scores[i].score;
    ++counts[b];
  }
  std::vector<CurveBin> out(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    out[b].center = (static_cast<double>(b) + 0.5) * bin_width;
    out[b].count = counts[b];
    if (counts[b] > 0) out[b].mean_score = sums[b] / static_cast<double>(counts[b]);
  }
  return out;
}

}  // namespace geoloc::loc

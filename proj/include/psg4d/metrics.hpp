#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "psg4d/model.hpp"

namespace psg4d {

inline constexpr double kDefaultViouThreshold = 0.5;

struct TripletMatch {
  std::size_t gt_index = 0;
  std::size_t pred_index = 0;
  double credit = 0.0;

  friend bool operator==(const TripletMatch&, const TripletMatch&) = default;
};

struct RecallResult {
  /// Absent when the ground truth has no triplets.
  std::optional<double> recall;
  /// Only predicates that occur in the ground truth.
  std::map<ClassId, double> per_predicate;
  std::vector<TripletMatch> matched;
  std::size_t gt_count = 0;
};

/// Soft triplet recall over the top-k predictions.
///
/// Predictions are ranked by confidence (stable on input order) and the first
/// k are scanned in rank order. Each takes the first unmatched ground-truth
/// triplet, in ground-truth order, for which
///   - subject, object and predicate labels agree,
///   - subject and object tube vIOU are both strictly above viou_threshold,
///   - the two intervals overlap in at least one frame,
/// and is credited the interval IoU. Recall is the credit sum over |GT|.
/// Throws VocabularyMismatch and InvalidArgument (k == 0).
RecallResult recall_at_k(const SceneGraph4D& pred, const SceneGraph4D& gt, std::size_t k,
                         double viou_threshold = kDefaultViouThreshold);

/// Unweighted mean over the predicates present. Throws NoGroundTruth when empty.
double mean_recall_at_k(const std::map<ClassId, double>& per_predicate);

struct KMetrics {
  std::optional<double> recall;
  std::optional<double> mean_recall;
  std::map<ClassId, double> per_predicate;
};

struct VideoMetrics {
  std::string video_id;
  std::size_t gt_triplets = 0;
  std::map<std::size_t, KMetrics> per_k;
  std::map<std::size_t, std::vector<TripletMatch>> matched;
};

struct DatasetMatch {
  std::string video_id;
  TripletMatch match;
};

/// Dataset figures are macro averages over videos with a non-empty ground
/// truth: recall and mean recall are means of the per-video values, and each
/// per-predicate entry is the mean over the videos where that predicate occurs.
struct EvaluationReport {
  std::vector<std::size_t> ks;
  double viou_threshold = kDefaultViouThreshold;
  std::map<std::size_t, KMetrics> per_k;
  std::map<std::size_t, std::vector<DatasetMatch>> matched;
  /// Sorted by video id.
  std::vector<VideoMetrics> per_video;
};

struct EvaluationPair {
  const SceneGraph4D* pred = nullptr;
  const SceneGraph4D* gt = nullptr;
};

/// Throws DuplicateVideoId, plus anything recall_at_k throws. The report does
/// not depend on `parallelism`.
EvaluationReport evaluate_dataset(std::span<const EvaluationPair> pairs, std::span<const std::size_t> ks,
                                  double viou_threshold = kDefaultViouThreshold,
                                  unsigned parallelism = 1);

}  // namespace psg4d

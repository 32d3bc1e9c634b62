#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "psg4d/model.hpp"
#include "psg4d/rle.hpp"

namespace psg4d {

struct Assignment {
  /// (row, col) pairs sorted by row; min(rows, cols) of them.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  double cost = 0.0;
};

/// Minimum-cost assignment on a rectangular matrix. Among all optimal
/// assignments the lexicographically smallest (sorted pair list) is returned.
/// Throws EmptyMatrix for a 0-row or 0-column matrix, InvalidArgument for
/// non-finite costs.
Assignment hungarian(const Eigen::MatrixXd& cost);

struct TubeMatch {
  std::size_t pred_index = 0;
  IouCounts viou;
};

/// One-to-one gt -> prediction matching that maximizes total vIOU, then drops
/// pairs whose vIOU is below min_viou. Throws KindMismatch.
std::map<std::size_t, TubeMatch> assign_tubes(std::span<const Tube> pred, std::span<const Tube> gt,
                                              double min_viou);

using SegmentMask = std::variant<RleMask, std::vector<std::uint32_t>>;

/// One frame-level detection with its association embedding.
struct FrameSegment {
  FrameIndex frame = 0;
  SegmentMask mask;
  ClassId category_id = 0;
  double score = 1.0;
  std::vector<double> embedding;
};

struct TrackerConfig {
  /// Minimum cosine similarity for a link.
  double tau = 0.5;
  /// When set, links also need frame IoU >= iou_gate.
  std::optional<double> iou_gate;
};

struct TrackingResult {
  std::vector<EntityNode> entities;
  /// Entity id assigned to each input segment, parallel to the input.
  std::vector<EntityId> segment_entity;
};

/// Links segments of adjacent frames by optimal cosine-similarity assignment.
/// Unlinked segments open new tracks; a track that misses a frame is closed.
/// Throws InvalidThreshold, InvalidArgument (zero or inconsistent embeddings)
/// and KindMismatch (mixed mask and point segments).
TrackingResult link_tracks(std::span<const FrameSegment> segments, const TrackerConfig& config = {});

/// IDF1 for detections that carry both a true and a predicted identity.
/// Identities are matched one-to-one to maximize co-occurring detections.
double identity_f1(std::span<const EntityId> truth, std::span<const EntityId> predicted);

}  // namespace psg4d

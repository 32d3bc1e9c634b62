#pragma once

#include <cstdint>
#include <span>

#include "psg4d/model.hpp"
#include "psg4d/rle.hpp"

namespace psg4d {

/// Intersection size of two strictly increasing index lists.
std::uint64_t sorted_intersection_count(std::span<const std::uint32_t> a,
                                        std::span<const std::uint32_t> b) noexcept;

/// Per-frame IoU of two point-index sets.
IouCounts point_iou(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b) noexcept;

/// Volume IoU: summed per-frame intersections over summed per-frame unions,
/// across the union of both tubes' frames. A tube is empty on frames it lacks.
/// Throws ShapeMismatch on differing mask dimensions.
IouCounts volume_iou(const MaskTube& a, const MaskTube& b);
IouCounts volume_iou(const PointTube& a, const PointTube& b);
/// Throws KindMismatch when one tube is a mask tube and the other a point tube.
IouCounts volume_iou(const Tube& a, const Tube& b);

/// Exact integer overlap and union lengths of two frame intervals.
struct SpanOverlap {
  FrameIndex overlap = 0;
  FrameIndex union_length = 0;
  double iou() const noexcept {
    return union_length == 0 ? 0.0
                             : static_cast<double>(overlap) / static_cast<double>(union_length);
  }
};

SpanOverlap span_overlap(const FrameInterval& a, const FrameInterval& b) noexcept;

inline double span_iou(const FrameInterval& a, const FrameInterval& b) noexcept {
  return span_overlap(a, b).iou();
}

}  // namespace psg4d

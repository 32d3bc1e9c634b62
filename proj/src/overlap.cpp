#include "psg4d/overlap.hpp"

#include <algorithm>
#include <string>

#include "psg4d/error.hpp"

namespace psg4d {

std::uint64_t sorted_intersection_count(std::span<const std::uint32_t> a,
                                        std::span<const std::uint32_t> b) noexcept {
  std::uint64_t n = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++n;
      ++ia;
      ++ib;
    }
  }
  return n;
}

IouCounts point_iou(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b) noexcept {
  const std::uint64_t inter = sorted_intersection_count(a, b);
  return {inter, a.size() + b.size() - inter};
}

namespace {

// Merge-walks two frame maps; fn(frame, a_or_null, b_or_null).
template <typename Map, typename Fn>
void merge_frames(const Map& a, const Map& b, Fn&& fn) {
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() || ib != b.end()) {
    if (ib == b.end() || (ia != a.end() && ia->first < ib->first)) {
      fn(&ia->second, nullptr);
      ++ia;
    } else if (ia == a.end() || ib->first < ia->first) {
      fn(nullptr, &ib->second);
      ++ib;
    } else {
      fn(&ia->second, &ib->second);
      ++ia;
      ++ib;
    }
  }
}

}  // namespace

IouCounts volume_iou(const MaskTube& a, const MaskTube& b) {
  if (a.height != b.height || a.width != b.width) {
    throw Error(ErrorCode::ShapeMismatch,
                "tubes " + std::to_string(a.entity_id) + " and " + std::to_string(b.entity_id) +
                    " have different frame sizes");
  }
  IouCounts total;
  merge_frames(a.frames, b.frames, [&](const RleMask* ma, const RleMask* mb) {
    if (ma && mb) {
      total += frame_iou(*ma, *mb);
    } else {
      total.union_count += (ma ? ma : mb)->area();
    }
  });
  return total;
}

IouCounts volume_iou(const PointTube& a, const PointTube& b) {
  IouCounts total;
  merge_frames(a.frames, b.frames,
               [&](const std::vector<std::uint32_t>* pa, const std::vector<std::uint32_t>* pb) {
                 if (pa && pb) {
                   total += point_iou(*pa, *pb);
                 } else {
                   total.union_count += (pa ? pa : pb)->size();
                 }
               });
  return total;
}

IouCounts volume_iou(const Tube& a, const Tube& b) {
  if (a.index() != b.index()) {
    throw Error(ErrorCode::KindMismatch, "cannot compare a mask tube with a point tube");
  }
  if (const auto* ma = std::get_if<MaskTube>(&a)) return volume_iou(*ma, std::get<MaskTube>(b));
  return volume_iou(std::get<PointTube>(a), std::get<PointTube>(b));
}

SpanOverlap span_overlap(const FrameInterval& a, const FrameInterval& b) noexcept {
  const FrameIndex overlap = std::max<FrameIndex>(0, std::min(a.end, b.end) - std::max(a.start, b.start));
  return {overlap, a.length() + b.length() - overlap};
}

}  // namespace psg4d

#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace psg4d {

/// Binary mask stored as row-major run lengths. Runs alternate zeros/ones and
/// the first run always counts zeros, so an all-ones mask is [0, H*W].
/// Instances are always canonical: no zero-length run after the first one.
class RleMask {
 public:
  RleMask() = default;

  /// Validates the run list; throws MalformedRle on a bad sum or an internal
  /// zero-length run.
  static RleMask from_runs(std::uint32_t height, std::uint32_t width,
                           std::vector<std::uint32_t> runs);
  static RleMask encode(std::span<const std::uint8_t> bitmap, std::uint32_t height,
                        std::uint32_t width);
  static RleMask empty(std::uint32_t height, std::uint32_t width);

  std::vector<std::uint8_t> decode() const;

  std::uint32_t height() const noexcept { return height_; }
  std::uint32_t width() const noexcept { return width_; }
  std::uint64_t pixel_count() const noexcept {
    return std::uint64_t{height_} * width_;
  }
  const std::vector<std::uint32_t>& runs() const noexcept { return runs_; }

  /// Number of set pixels.
  std::uint64_t area() const noexcept;
  bool is_empty() const noexcept { return runs_.size() < 2; }

  /// Calls fn(begin, end) for every half-open span of set pixels, in scan order.
  template <typename Fn>
  void for_each_span(Fn&& fn) const {
    std::uint64_t pos = 0;
    for (std::size_t i = 0; i < runs_.size(); ++i) {
      const std::uint64_t next = pos + runs_[i];
      if (i % 2 == 1) fn(pos, next);
      pos = next;
    }
  }

  friend bool operator==(const RleMask&, const RleMask&) = default;

 private:
  RleMask(std::uint32_t h, std::uint32_t w, std::vector<std::uint32_t> runs)
      : height_(h), width_(w), runs_(std::move(runs)) {}

  std::uint32_t height_ = 0;
  std::uint32_t width_ = 0;
  std::vector<std::uint32_t> runs_{0};
};

/// Intersection and union sizes; the IoU is kept as an exact ratio of the two.
struct IouCounts {
  std::uint64_t intersection = 0;
  std::uint64_t union_count = 0;

  /// Both-empty is defined as 0.
  double iou() const noexcept {
    return union_count == 0 ? 0.0
                            : static_cast<double>(intersection) / static_cast<double>(union_count);
  }

  /// Exact test of intersection / union > threshold, with no rounding of the
  /// ratio. A zero union never exceeds anything.
  bool exceeds(double threshold) const noexcept;

  IouCounts& operator+=(const IouCounts& o) noexcept {
    intersection += o.intersection;
    union_count += o.union_count;
    return *this;
  }
  friend bool operator==(const IouCounts&, const IouCounts&) = default;
};

/// |a ∩ b| computed on the runs directly. Throws ShapeMismatch.
std::uint64_t intersection_count(const RleMask& a, const RleMask& b);

/// Throws ShapeMismatch when the masks have different dimensions.
IouCounts frame_iou(const RleMask& a, const RleMask& b);

}  // namespace psg4d

#include "psg4d/rle.hpp"

#include <cmath>
#include <string>

#include "psg4d/error.hpp"

namespace psg4d {

RleMask RleMask::from_runs(std::uint32_t height, std::uint32_t width,
                           std::vector<std::uint32_t> runs) {
  if (runs.empty()) throw Error(ErrorCode::MalformedRle, "run list is empty");
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (i > 0 && runs[i] == 0) {
      throw Error(ErrorCode::MalformedRle, "zero-length run at position " + std::to_string(i));
    }
    total += runs[i];
  }
  const std::uint64_t expected = std::uint64_t{height} * width;
  if (total != expected) {
    throw Error(ErrorCode::MalformedRle, "runs sum to " + std::to_string(total) + ", expected " +
                                             std::to_string(expected));
  }
  return RleMask(height, width, std::move(runs));
}

RleMask RleMask::encode(std::span<const std::uint8_t> bitmap, std::uint32_t height,
                        std::uint32_t width) {
  const std::uint64_t n = std::uint64_t{height} * width;
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "cannot encode an empty bitmap");
  if (bitmap.size() != n) {
    throw Error(ErrorCode::ShapeMismatch, "bitmap has " + std::to_string(bitmap.size()) +
                                              " pixels, expected " + std::to_string(n));
  }
  std::vector<std::uint32_t> runs;
  bool current = false;
  std::uint32_t length = 0;
  for (const std::uint8_t px : bitmap) {
    const bool on = px != 0;
    if (on != current) {
      runs.push_back(length);
      length = 0;
      current = on;
    }
    ++length;
  }
  runs.push_back(length);
  return RleMask(height, width, std::move(runs));
}

RleMask RleMask::empty(std::uint32_t height, std::uint32_t width) {
  return RleMask(height, width, {height * width});
}

std::vector<std::uint8_t> RleMask::decode() const {
  std::vector<std::uint8_t> out(pixel_count(), 0);
  for_each_span([&](std::uint64_t b, std::uint64_t e) {
    std::fill(out.begin() + static_cast<std::ptrdiff_t>(b),
              out.begin() + static_cast<std::ptrdiff_t>(e), 1);
  });
  return out;
}

std::uint64_t RleMask::area() const noexcept {
  std::uint64_t sum = 0;
  for (std::size_t i = 1; i < runs_.size(); i += 2) sum += runs_[i];
  return sum;
}

bool IouCounts::exceeds(double threshold) const noexcept {
  if (union_count == 0) return false;
  if (std::isnan(threshold)) return false;
  if (threshold < 0.0) return true;
  if (threshold >= 1.0) return false;
  // threshold = mantissa * 2^exp exactly, mantissa a 53-bit integer.
  int exp = 0;
  const double frac = std::frexp(threshold, &exp);
  auto mantissa = static_cast<std::uint64_t>(std::ldexp(frac, 53));
  exp -= 53;
  // Compare intersection * 2^-exp > mantissa * union, both sides exact in 128 bits
  // after dropping common powers of two.
  while (exp < 0 && (mantissa & 1U) == 0) {
    mantissa >>= 1;
    ++exp;
  }
  const int shift = -exp;
  using u128 = unsigned __int128;
  const u128 rhs = static_cast<u128>(mantissa) * union_count;
  if (shift >= 64) {
    // Threshold is tiny: lhs dominates whenever the intersection is non-zero
    // unless rhs is also huge; fall back to long double for the scale check.
    return static_cast<long double>(intersection) >
           std::ldexp(static_cast<long double>(mantissa) * union_count, -shift);
  }
  const u128 lhs = static_cast<u128>(intersection) << shift;
  return lhs > rhs;
}

std::uint64_t intersection_count(const RleMask& a, const RleMask& b) {
  if (a.height() != b.height() || a.width() != b.width()) {
    throw Error(ErrorCode::ShapeMismatch, "mask shapes differ: " + std::to_string(a.height()) +
                                              "x" + std::to_string(a.width()) + " vs " +
                                              std::to_string(b.height()) + "x" +
                                              std::to_string(b.width()));
  }
  const auto& ra = a.runs();
  const auto& rb = b.runs();
  // Walk the set-pixel spans of both masks in lockstep.
  std::size_t ia = 1, ib = 1;
  std::uint64_t a_begin = ra[0], b_begin = rb[0];
  std::uint64_t total = 0;
  while (ia < ra.size() && ib < rb.size()) {
    const std::uint64_t a_end = a_begin + ra[ia];
    const std::uint64_t b_end = b_begin + rb[ib];
    const std::uint64_t lo = std::max(a_begin, b_begin);
    const std::uint64_t hi = std::min(a_end, b_end);
    if (hi > lo) total += hi - lo;
    if (a_end <= b_end) {
      if (ia + 1 >= ra.size()) break;
      a_begin = a_end + ra[ia + 1];
      ia += 2;
    } else {
      if (ib + 1 >= rb.size()) break;
      b_begin = b_end + rb[ib + 1];
      ib += 2;
    }
  }
  return total;
}

IouCounts frame_iou(const RleMask& a, const RleMask& b) {
  const std::uint64_t inter = intersection_count(a, b);
  return {inter, a.area() + b.area() - inter};
}

}  // namespace psg4d

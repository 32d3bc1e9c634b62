#pragma once

#include <cstdint>
#include <string_view>

namespace psg4d {

/// SplitMix64 (Steele, Lea & Flood). Chosen because the whole algorithm is a
/// few integer operations that any language reproduces bit-for-bit, unlike
/// std:: distributions whose output is implementation-defined.
///
/// Derived quantities:
///   uniform()      = (next() >> 11) * 2^-53            in [0, 1)
///   below(n)       = high 64 bits of next() * n         in [0, n)
///   split(stream)  = SplitMix64(mix(state ^ (stream + 1) * 0xD1B54A32D192ED03))
class SplitMix64 {
 public:
  static constexpr std::string_view kAlgorithm = "splitmix64-v1";

  explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  constexpr std::uint64_t next() noexcept {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix(state_);
  }

  constexpr double uniform() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  std::uint64_t below(std::uint64_t n) noexcept {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next()) * n) >> 64);
  }

  /// Inclusive integer range.
  std::int64_t between(std::int64_t lo, std::int64_t hi) noexcept {
    return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  double between(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  bool chance(double p) noexcept { return uniform() < p; }

  /// Independent child stream; does not advance this generator.
  constexpr SplitMix64 split(std::uint64_t stream) const noexcept {
    return SplitMix64(mix(state_ ^ ((stream + 1) * 0xD1B54A32D192ED03ULL)));
  }

  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

}  // namespace psg4d

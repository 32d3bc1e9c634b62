#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "psg4d/model.hpp"

namespace fixture {

inline psg4d::Vocabulary vocabulary() {
  psg4d::Vocabulary v;
  v.object_classes = {{0, "person", true}, {1, "coffee", true}, {2, "table", true}, {3, "floor", false}};
  v.predicate_classes = {{0, "drink", }, {1, "near"}, {2, "on"}};
  return v;
}

// Filled rectangle [r0, r1) x [c0, c1) in an h x w frame.
inline psg4d::RleMask rect(std::uint32_t h, std::uint32_t w, std::uint32_t r0, std::uint32_t c0, std::uint32_t r1,
                           std::uint32_t c1) {
  r1 = std::min(r1, h);
  c1 = std::min(c1, w);
  if (r0 >= r1 || c0 >= c1) return psg4d::RleMask::empty(h, w);
  std::vector<std::uint32_t> runs{0};
  auto push = [&](bool on, std::uint32_t n) {
    if (n == 0) return;
    if ((runs.size() % 2 == 1) == on) runs.push_back(n);
    else runs.back() += n;
  };
  push(false, r0 * w + c0);
  for (std::uint32_t r = r0; r < r1; ++r) {
    push(true, c1 - c0);
    push(false, r + 1 < r1 ? w - (c1 - c0) : 0);
  }
  push(false, static_cast<std::uint32_t>(std::uint64_t{h} * w - (std::uint64_t{r1 - 1} * w + c1)));
  return psg4d::RleMask::from_runs(h, w, std::move(runs));
}

// Entity whose mask is the same rectangle on frames [f0, f1).
inline psg4d::EntityNode box_entity(psg4d::EntityId id, psg4d::ClassId category, psg4d::FrameIndex f0,
                                    psg4d::FrameIndex f1, std::uint32_t r0, std::uint32_t c0, std::uint32_t r1,
                                    std::uint32_t c1, std::uint32_t h = 16, std::uint32_t w = 16) {
  psg4d::MaskTube tube{id, h, w, {}};
  for (auto f = f0; f < f1; ++f) tube.frames.emplace(f, rect(h, w, r0, c0, r1, c1));
  return {id, category, 1.0, tube, std::nullopt};
}

inline psg4d::SceneGraph4D graph(const std::string& id, std::vector<psg4d::EntityNode> entities,
                                 std::vector<psg4d::RelationTriplet> triplets,
                                 const psg4d::Vocabulary& vocab = vocabulary()) {
  return {id, std::move(entities), std::move(triplets), vocab.checksum()};
}

}  // namespace fixture

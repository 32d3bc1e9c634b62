#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "psg4d/error.hpp"
#include "psg4d/synthgen.hpp"

namespace psg4d {

std::vector<std::string> NoiseConfig::problems() const {
  std::vector<std::string> out;
  if (!(label_flip_prob >= 0.0 && label_flip_prob <= 1.0)) out.emplace_back("label_flip_prob outside [0, 1]");
  if (!(drop_triplet_prob >= 0.0 && drop_triplet_prob <= 1.0)) {
    out.emplace_back("drop_triplet_prob outside [0, 1]");
  }
  return out;
}

namespace {

using Bitmap = std::vector<std::uint8_t>;

// Separable Chebyshev max (dilate) or min (erode) filter. Pixels outside the
// image count as unset.
Bitmap morph(const Bitmap& in, std::uint32_t h, std::uint32_t w, int radius) {
  if (radius == 0) return in;
  const bool dilate = radius > 0;
  const auto r = static_cast<std::int64_t>(std::abs(radius));
  const auto H = static_cast<std::int64_t>(h);
  const auto W = static_cast<std::int64_t>(w);
  auto pass = [&](const Bitmap& src, bool horizontal) {
    Bitmap dst(src.size(), 0);
    for (std::int64_t y = 0; y < H; ++y) {
      for (std::int64_t x = 0; x < W; ++x) {
        bool acc = !dilate;
        for (std::int64_t d = -r; d <= r; ++d) {
          const std::int64_t yy = horizontal ? y : y + d;
          const std::int64_t xx = horizontal ? x + d : x;
          const bool inside = yy >= 0 && yy < H && xx >= 0 && xx < W;
          const bool on = inside && src[static_cast<std::size_t>(yy * W + xx)] != 0;
          if (dilate) {
            acc = acc || on;
          } else {
            acc = acc && on;
          }
        }
        dst[static_cast<std::size_t>(y * W + x)] = acc ? 1 : 0;
      }
    }
    return dst;
  };
  return pass(pass(in, true), false);
}

// Dense per-frame support of a tube: pixels as flat indices, or point indices.
using DenseTube = std::map<FrameIndex, std::vector<std::uint8_t>>;

DenseTube densify(const Tube& tube, std::size_t point_universe) {
  DenseTube out;
  if (const auto* mt = std::get_if<MaskTube>(&tube)) {
    for (const auto& [f, m] : mt->frames) out.emplace(f, m.decode());
  } else {
    for (const auto& [f, idx] : std::get<PointTube>(tube).frames) {
      std::vector<std::uint8_t> dense(point_universe, 0);
      for (const auto i : idx) dense[i] = 1;
      out.emplace(f, std::move(dense));
    }
  }
  return out;
}

// Brute-force voxel counting over the union of frames.
bool dense_viou_exceeds(const DenseTube& a, const DenseTube& b, double threshold) {
  std::set<FrameIndex> frames;
  for (const auto& [f, _] : a) frames.insert(f);
  for (const auto& [f, _] : b) frames.insert(f);
  std::uint64_t inter = 0, uni = 0;
  for (const auto f : frames) {
    const auto ia = a.find(f);
    const auto ib = b.find(f);
    const std::size_t n = ia != a.end() ? ia->second.size() : ib->second.size();
    for (std::size_t p = 0; p < n; ++p) {
      const bool x = ia != a.end() && ia->second[p] != 0;
      const bool y = ib != b.end() && ib->second[p] != 0;
      inter += (x && y) ? 1 : 0;
      uni += (x || y) ? 1 : 0;
    }
  }
  return uni > 0 && static_cast<long double>(inter) > static_cast<long double>(threshold) * uni;
}

std::size_t point_universe(const SceneGraph4D& a, const SceneGraph4D& b) {
  std::uint32_t max_index = 0;
  for (const auto* g : {&a, &b}) {
    for (const auto& e : g->entities) {
      if (const auto* pt = std::get_if<PointTube>(&e.tube)) {
        for (const auto& [_, idx] : pt->frames) {
          if (!idx.empty()) max_index = std::max(max_index, idx.back());
        }
      }
    }
  }
  return std::size_t{max_index} + 1;
}

OracleRecall replay_recall(const SceneGraph4D& pred, const SceneGraph4D& gt, std::size_t k,
                           const std::vector<std::vector<char>>& tube_match,
                           const std::map<EntityId, std::size_t>& pred_pos,
                           const std::map<EntityId, std::size_t>& gt_pos) {
  std::vector<std::size_t> rank(pred.triplets.size());
  std::iota(rank.begin(), rank.end(), 0);
  std::stable_sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) {
    return pred.triplets[a].confidence > pred.triplets[b].confidence;
  });
  rank.resize(std::min(rank.size(), k));

  std::vector<double> credit(gt.triplets.size(), 0.0);
  std::vector<char> taken(gt.triplets.size(), 0);
  for (const auto p : rank) {
    const auto& pt = pred.triplets[p];
    const std::size_t ps = pred_pos.at(pt.subject_id);
    const std::size_t po = pred_pos.at(pt.object_id);
    for (std::size_t g = 0; g < gt.triplets.size(); ++g) {
      const auto& gtt = gt.triplets[g];
      if (taken[g] || gtt.predicate_id != pt.predicate_id) continue;
      const std::size_t gs = gt_pos.at(gtt.subject_id);
      const std::size_t go = gt_pos.at(gtt.object_id);
      if (pred.entities[ps].category_id != gt.entities[gs].category_id ||
          pred.entities[po].category_id != gt.entities[go].category_id) {
        continue;
      }
      const FrameIndex lo = std::max(pt.interval.start, gtt.interval.start);
      const FrameIndex hi = std::min(pt.interval.end, gtt.interval.end);
      if (hi <= lo) continue;
      if (!tube_match[ps][gs] || !tube_match[po][go]) continue;
      const FrameIndex overlap = hi - lo;
      const FrameIndex uni = pt.interval.length() + gtt.interval.length() - overlap;
      taken[g] = 1;
      credit[g] = static_cast<double>(overlap) / static_cast<double>(uni);
      break;
    }
  }

  OracleRecall out;
  if (gt.triplets.empty()) return out;
  std::map<ClassId, std::pair<double, std::size_t>> per;
  double total = 0.0;
  for (std::size_t g = 0; g < gt.triplets.size(); ++g) {
    total += credit[g];
    per[gt.triplets[g].predicate_id].first += credit[g];
    per[gt.triplets[g].predicate_id].second += 1;
  }
  out.recall = total / static_cast<double>(gt.triplets.size());
  double mean = 0.0;
  for (const auto& [pid, v] : per) {
    const double r = v.first / static_cast<double>(v.second);
    out.per_predicate.emplace(pid, r);
    mean += r;
  }
  out.mean_recall = mean / static_cast<double>(per.size());
  return out;
}

}  // namespace

PerturbedPrediction perturb_predictions(const SceneGraph4D& gt, const Vocabulary& vocab, const NoiseConfig& noise,
                                        std::uint64_t seed, std::span<const std::size_t> ks,
                                        double viou_threshold) {
  const auto problems = noise.problems();
  if (!problems.empty()) throw Error(ErrorCode::InvalidArgument, "noise: " + problems.front());

  const SplitMix64 root(seed);
  SplitMix64 flips = root.split(1);
  SplitMix64 drops = root.split(2);
  SplitMix64 confidences = root.split(3);

  PerturbedPrediction out;
  SceneGraph4D& pred = out.pred;
  pred.video_id = gt.video_id;
  pred.vocabulary_ref = gt.vocabulary_ref;

  std::set<EntityId> kept;
  const auto n_classes = vocab.object_classes.size();
  for (const auto& e : gt.entities) {
    EntityNode p = e;
    if (n_classes >= 2 && flips.chance(noise.label_flip_prob)) {
      // Uniform over the other classes.
      auto other = static_cast<ClassId>(flips.below(n_classes - 1));
      if (other >= e.category_id) ++other;
      p.category_id = other;
    }
    if (auto* mt = std::get_if<MaskTube>(&p.tube); mt && noise.mask_erode_dilate != 0) {
      std::map<FrameIndex, RleMask> frames;
      for (const auto& [f, m] : mt->frames) {
        const Bitmap changed = morph(m.decode(), mt->height, mt->width, noise.mask_erode_dilate);
        if (std::any_of(changed.begin(), changed.end(), [](std::uint8_t b) { return b != 0; })) {
          frames.emplace(f, RleMask::encode(changed, mt->height, mt->width));
        }
      }
      mt->frames = std::move(frames);
      if (mt->frames.empty()) continue;
    }
    kept.insert(p.entity_id);
    pred.entities.push_back(std::move(p));
  }

  for (const auto& t : gt.triplets) {
    if (drops.chance(noise.drop_triplet_prob)) continue;
    if (!kept.contains(t.subject_id) || !kept.contains(t.object_id)) continue;
    RelationTriplet p = t;
    if (noise.interval_jitter > 0) {
      p.interval.end = std::max(p.interval.start + 1, p.interval.end - noise.interval_jitter);
    } else if (noise.interval_jitter < 0) {
      p.interval.start -= noise.interval_jitter;
      p.interval.end -= noise.interval_jitter;
    }
    pred.triplets.push_back(p);
  }
  const auto n = pred.triplets.size();
  for (std::size_t i = 0; i < n; ++i) {
    pred.triplets[i].confidence = noise.confidence_mode == ConfidenceMode::OracleDescending
                                      ? static_cast<double>(n - i) / static_cast<double>(n)
                                      : 1.0 - confidences.uniform();
  }

  // Oracle: dense tube comparison for every (pred, gt) entity pair.
  const std::size_t universe = point_universe(pred, gt);
  std::vector<DenseTube> pred_dense, gt_dense;
  for (const auto& e : pred.entities) pred_dense.push_back(densify(e.tube, universe));
  for (const auto& e : gt.entities) gt_dense.push_back(densify(e.tube, universe));
  std::vector<std::vector<char>> tube_match(pred.entities.size(), std::vector<char>(gt.entities.size(), 0));
  for (std::size_t p = 0; p < pred.entities.size(); ++p) {
    for (std::size_t g = 0; g < gt.entities.size(); ++g) {
      tube_match[p][g] = dense_viou_exceeds(pred_dense[p], gt_dense[g], viou_threshold) ? 1 : 0;
    }
  }
  std::map<EntityId, std::size_t> pred_pos, gt_pos;
  for (std::size_t i = 0; i < pred.entities.size(); ++i) pred_pos.emplace(pred.entities[i].entity_id, i);
  for (std::size_t i = 0; i < gt.entities.size(); ++i) gt_pos.emplace(gt.entities[i].entity_id, i);
  for (const auto k : ks) {
    out.oracle.emplace(k, replay_recall(pred, gt, k, tube_match, pred_pos, gt_pos));
  }
  return out;
}

}  // namespace psg4d

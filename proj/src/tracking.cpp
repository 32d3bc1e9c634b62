#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "psg4d/error.hpp"
#include "psg4d/matching.hpp"
#include "psg4d/overlap.hpp"

namespace psg4d {

namespace {

struct Track {
  FrameIndex last_frame = 0;
  std::size_t last_segment = 0;
  std::vector<std::size_t> members;
};

double norm(const std::vector<double>& v) {
  return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
}

double segment_iou(const SegmentMask& a, const SegmentMask& b) {
  if (a.index() != b.index()) throw Error(ErrorCode::KindMismatch, "mixed mask and point segments");
  if (const auto* ma = std::get_if<RleMask>(&a)) return frame_iou(*ma, std::get<RleMask>(b)).iou();
  return point_iou(std::get<std::vector<std::uint32_t>>(a), std::get<std::vector<std::uint32_t>>(b)).iou();
}

EntityNode build_entity(EntityId id, const std::vector<std::size_t>& members,
                        std::span<const FrameSegment> segments) {
  std::map<ClassId, std::pair<std::size_t, double>> votes;  // count, score sum
  double score_sum = 0.0;
  for (const auto m : members) {
    auto& v = votes[segments[m].category_id];
    ++v.first;
    v.second += segments[m].score;
    score_sum += segments[m].score;
  }
  // Majority, then highest mean score, then smallest class id.
  ClassId best = votes.begin()->first;
  for (const auto& [cls, v] : votes) {
    const auto& b = votes[best];
    const double mean = v.second / static_cast<double>(v.first);
    const double best_mean = b.second / static_cast<double>(b.first);
    if (v.first > b.first || (v.first == b.first && mean > best_mean)) best = cls;
  }

  EntityNode node;
  node.entity_id = id;
  node.category_id = best;
  node.score = score_sum / static_cast<double>(members.size());
  EmbeddingTube emb;
  const auto& first = segments[members.front()].mask;
  if (const auto* rle = std::get_if<RleMask>(&first)) {
    MaskTube tube{id, rle->height(), rle->width(), {}};
    for (const auto m : members) tube.frames.emplace(segments[m].frame, std::get<RleMask>(segments[m].mask));
    node.tube = std::move(tube);
  } else {
    PointTube tube{id, {}};
    for (const auto m : members) {
      tube.frames.emplace(segments[m].frame, std::get<std::vector<std::uint32_t>>(segments[m].mask));
    }
    node.tube = std::move(tube);
  }
  for (const auto m : members) emb.emplace(segments[m].frame, segments[m].embedding);
  node.embeddings = std::move(emb);
  return node;
}

}  // namespace

TrackingResult link_tracks(std::span<const FrameSegment> segments, const TrackerConfig& config) {
  if (!(config.tau >= 0.0 && config.tau <= 1.0)) {
    throw Error(ErrorCode::InvalidThreshold, "tau must lie in [0, 1]");
  }
  if (config.iou_gate && !(*config.iou_gate >= 0.0 && *config.iou_gate <= 1.0)) {
    throw Error(ErrorCode::InvalidThreshold, "iou gate must lie in [0, 1]");
  }
  std::vector<double> norms(segments.size());
  for (std::size_t s = 0; s < segments.size(); ++s) {
    const auto& e = segments[s].embedding;
    if (e.size() != segments.front().embedding.size()) {
      throw Error(ErrorCode::InvalidArgument, "embedding dimensions differ");
    }
    if (segments[s].mask.index() != segments.front().mask.index()) {
      throw Error(ErrorCode::KindMismatch, "mixed mask and point segments");
    }
    norms[s] = norm(e);
    if (!(norms[s] > 0.0) || !std::isfinite(norms[s])) {
      throw Error(ErrorCode::InvalidArgument, "embedding of segment " + std::to_string(s) +
                                                  " is zero or not finite");
    }
  }

  std::map<FrameIndex, std::vector<std::size_t>> by_frame;
  for (std::size_t s = 0; s < segments.size(); ++s) by_frame[segments[s].frame].push_back(s);

  std::vector<Track> tracks;
  std::vector<EntityId> owner(segments.size(), -1);
  auto cosine = [&](std::size_t a, std::size_t b) {
    const auto& ea = segments[a].embedding;
    const auto& eb = segments[b].embedding;
    return std::inner_product(ea.begin(), ea.end(), eb.begin(), 0.0) / (norms[a] * norms[b]);
  };

  for (const auto& [frame, current] : by_frame) {
    std::vector<std::size_t> active;
    for (std::size_t t = 0; t < tracks.size(); ++t) {
      if (tracks[t].last_frame == frame - 1) active.push_back(t);
    }
    std::vector<char> linked(current.size(), 0);
    if (!active.empty()) {
      Eigen::MatrixXd cost(static_cast<Eigen::Index>(active.size()),
                           static_cast<Eigen::Index>(current.size()));
      for (std::size_t r = 0; r < active.size(); ++r) {
        for (std::size_t c = 0; c < current.size(); ++c) {
          cost(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
              1.0 - cosine(tracks[active[r]].last_segment, current[c]);
        }
      }
      for (const auto& [r, c] : hungarian(cost).pairs) {
        Track& track = tracks[active[r]];
        const std::size_t seg = current[c];
        if (cosine(track.last_segment, seg) < config.tau) continue;
        if (config.iou_gate &&
            segment_iou(segments[track.last_segment].mask, segments[seg].mask) < *config.iou_gate) {
          continue;
        }
        track.last_frame = frame;
        track.last_segment = seg;
        track.members.push_back(seg);
        owner[seg] = static_cast<EntityId>(active[r]);
        linked[c] = 1;
      }
    }
    for (std::size_t c = 0; c < current.size(); ++c) {
      if (linked[c]) continue;
      owner[current[c]] = static_cast<EntityId>(tracks.size());
      tracks.push_back({frame, current[c], {current[c]}});
    }
  }

  TrackingResult out;
  out.segment_entity = std::move(owner);
  out.entities.reserve(tracks.size());
  for (std::size_t t = 0; t < tracks.size(); ++t) {
    out.entities.push_back(build_entity(static_cast<EntityId>(t), tracks[t].members, segments));
  }
  return out;
}

}  // namespace psg4d

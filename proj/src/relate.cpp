#include "psg4d/relate.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "psg4d/error.hpp"

namespace psg4d {

std::string_view to_string(RuleKind kind) {
  switch (kind) {
    case RuleKind::Near: return "near";
    case RuleKind::Above: return "above";
    case RuleKind::Contact: return "contact";
  }
  return "near";
}

std::optional<RuleKind> parse_rule_kind(std::string_view text) {
  if (text == "near") return RuleKind::Near;
  if (text == "above") return RuleKind::Above;
  if (text == "contact") return RuleKind::Contact;
  return std::nullopt;
}

std::vector<std::string> Rulebook::problems(const Vocabulary& vocab) const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const auto& r = rules[i];
    const std::string where = "rule " + std::to_string(i) + ": ";
    if (!(r.threshold > 0.0) || !std::isfinite(r.threshold)) out.push_back(where + "threshold must be > 0");
    if (r.min_duration < 1) out.push_back(where + "min_duration must be >= 1");
    if (!vocab.has_predicate(r.predicate_id)) {
      out.push_back(where + "unknown predicate " + std::to_string(r.predicate_id));
    }
  }
  return out;
}

namespace {

using VoxelCache = std::map<EntityId, std::map<FrameIndex, std::vector<Voxel>>>;

bool share_voxel(const std::vector<Voxel>& a, const std::vector<Voxel>& b) {
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      return true;
    }
  }
  return false;
}

// Returns the per-frame score of the rule, or nullopt when it does not hold.
std::optional<double> evaluate(const Rule& rule, const Eigen::Vector3d& subject,
                               const Eigen::Vector3d& object, const std::vector<Voxel>* sv,
                               const std::vector<Voxel>* ov) {
  switch (rule.kind) {
    case RuleKind::Near: {
      const double d = (subject - object).norm();
      if (!(d < rule.threshold)) return std::nullopt;
      return std::max(0.0, 1.0 - d / rule.threshold);
    }
    case RuleKind::Above: {
      const double lift = subject.z() - object.z();
      const double horizontal = std::hypot(subject.x() - object.x(), subject.y() - object.y());
      if (!(lift > rule.threshold) || !(horizontal < rule.threshold)) return std::nullopt;
      return std::max(0.0, 1.0 - horizontal / rule.threshold);
    }
    case RuleKind::Contact:
      if (sv == nullptr || ov == nullptr || !share_voxel(*sv, *ov)) return std::nullopt;
      return 1.0;
  }
  return std::nullopt;
}

}  // namespace

std::vector<RelationTriplet> score_pairs_geometric(std::span<const EntityNode> entities,
                                                   const std::map<EntityId, TubeGeometry>& geometry,
                                                   const Rulebook& rulebook) {
  for (const auto& e : entities) {
    if (!geometry.contains(e.entity_id)) {
      throw Error(ErrorCode::MissingTrajectory, "no trajectory for entity " + std::to_string(e.entity_id));
    }
  }

  std::vector<RelationTriplet> out;
  for (const Rule& rule : rulebook.rules) {
    VoxelCache voxels;
    if (rule.kind == RuleKind::Contact) {
      for (const auto& e : entities) {
        auto& per_frame = voxels[e.entity_id];
        for (const auto& [f, pts] : geometry.at(e.entity_id).points) {
          per_frame.emplace(f, voxelize(pts, rule.threshold));
        }
      }
    }
    for (const auto& subject : entities) {
      for (const auto& object : entities) {
        if (subject.entity_id == object.entity_id) continue;
        const auto& sc = geometry.at(subject.entity_id).centroids;
        const auto& oc = geometry.at(object.entity_id).centroids;

        FrameIndex run_start = 0;
        FrameIndex run_last = 0;
        double run_sum = 0.0;
        bool in_run = false;
        auto close_run = [&] {
          if (in_run && run_last + 1 - run_start >= rule.min_duration) {
            const auto len = static_cast<double>(run_last + 1 - run_start);
            out.push_back({subject.entity_id, object.entity_id, rule.predicate_id,
                           {run_start, run_last + 1}, run_sum / len});
          }
          in_run = false;
          run_sum = 0.0;
        };

        for (const auto& [frame, s_pos] : sc) {
          const auto o_it = oc.find(frame);
          if (o_it == oc.end()) {
            close_run();
            continue;
          }
          const std::vector<Voxel>* sv = nullptr;
          const std::vector<Voxel>* ov = nullptr;
          if (rule.kind == RuleKind::Contact) {
            const auto& svm = voxels[subject.entity_id];
            const auto& ovm = voxels[object.entity_id];
            if (auto it = svm.find(frame); it != svm.end()) sv = &it->second;
            if (auto it = ovm.find(frame); it != ovm.end()) ov = &it->second;
          }
          const auto score = evaluate(rule, s_pos, o_it->second, sv, ov);
          if (!score || (in_run && frame != run_last + 1)) close_run();
          if (!score) continue;
          if (!in_run) {
            in_run = true;
            run_start = frame;
          }
          run_last = frame;
          run_sum += *score;
        }
        close_run();
      }
    }
  }

  std::sort(out.begin(), out.end(), [](const RelationTriplet& a, const RelationTriplet& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    return std::tie(a.subject_id, a.object_id, a.predicate_id, a.interval.start) <
           std::tie(b.subject_id, b.object_id, b.predicate_id, b.interval.start);
  });
  return out;
}

}  // namespace psg4d

#include "psg4d/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <tuple>
#include <unordered_set>

#include "psg4d/error.hpp"

namespace psg4d {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidThreshold: return "InvalidThreshold";
    case ErrorCode::InvalidVoxelSize: return "InvalidVoxelSize";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::MalformedRle: return "MalformedRle";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::KindMismatch: return "KindMismatch";
    case ErrorCode::EmptyMatrix: return "EmptyMatrix";
    case ErrorCode::MissingTrajectory: return "MissingTrajectory";
    case ErrorCode::VocabularyMismatch: return "VocabularyMismatch";
    case ErrorCode::NoGroundTruth: return "NoGroundTruth";
    case ErrorCode::DuplicateVideoId: return "DuplicateVideoId";
    case ErrorCode::FrustumViolation: return "FrustumViolation";
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
  }
  return "Unknown";
}

std::string_view to_string(ViolationCode code) {
  switch (code) {
    case ViolationCode::VocabularyMismatch: return "VocabularyMismatch";
    case ViolationCode::InvalidVocabulary: return "InvalidVocabulary";
    case ViolationCode::DuplicateEntity: return "DuplicateEntity";
    case ViolationCode::TubeIdMismatch: return "TubeIdMismatch";
    case ViolationCode::InvalidCategory: return "InvalidCategory";
    case ViolationCode::InvalidScore: return "InvalidScore";
    case ViolationCode::GroundTruthScore: return "GroundTruthScore";
    case ViolationCode::EmptyTube: return "EmptyTube";
    case ViolationCode::NegativeFrame: return "NegativeFrame";
    case ViolationCode::MaskShape: return "MaskShape";
    case ViolationCode::UnsortedPointIndices: return "UnsortedPointIndices";
    case ViolationCode::PointIndexOutOfRange: return "PointIndexOutOfRange";
    case ViolationCode::EmbeddingDimension: return "EmbeddingDimension";
    case ViolationCode::UnresolvedEntity: return "UnresolvedEntity";
    case ViolationCode::SelfRelation: return "SelfRelation";
    case ViolationCode::InvalidPredicate: return "InvalidPredicate";
    case ViolationCode::InvalidInterval: return "InvalidInterval";
    case ViolationCode::InvalidConfidence: return "InvalidConfidence";
    case ViolationCode::GroundTruthConfidence: return "GroundTruthConfidence";
    case ViolationCode::PanopticOverlap: return "PanopticOverlap";
  }
  return "Unknown";
}

std::vector<std::string> Vocabulary::problems() const {
  std::vector<std::string> out;
  if (object_classes.empty()) out.emplace_back("no object classes");
  if (predicate_classes.empty()) out.emplace_back("no predicate classes");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < object_classes.size(); ++i) {
    const auto& c = object_classes[i];
    if (c.id != static_cast<ClassId>(i)) {
      out.push_back("object class '" + c.name + "' has id " + std::to_string(c.id) +
                    ", expected " + std::to_string(i));
    }
    if (!seen.insert(c.name).second) out.push_back("duplicate object class name '" + c.name + "'");
  }
  seen.clear();
  for (std::size_t i = 0; i < predicate_classes.size(); ++i) {
    const auto& c = predicate_classes[i];
    if (c.id != static_cast<ClassId>(i)) {
      out.push_back("predicate class '" + c.name + "' has id " + std::to_string(c.id) +
                    ", expected " + std::to_string(i));
    }
    if (!seen.insert(c.name).second) {
      out.push_back("duplicate predicate class name '" + c.name + "'");
    }
  }
  return out;
}

std::string Vocabulary::checksum() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](std::string_view s) {
    for (const unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& c : object_classes) {
    feed("o\t" + std::to_string(c.id) + "\t" + c.name + "\t" + (c.is_thing ? "1" : "0") + "\n");
  }
  for (const auto& c : predicate_classes) {
    feed("p\t" + std::to_string(c.id) + "\t" + c.name + "\n");
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

const EntityNode* SceneGraph4D::find_entity(EntityId id) const noexcept {
  for (const auto& e : entities) {
    if (e.entity_id == id) return &e;
  }
  return nullptr;
}

EntityId tube_entity_id(const Tube& tube) noexcept {
  return std::visit([](const auto& t) { return t.entity_id; }, tube);
}

namespace {

void check_mask_tube(const MaskTube& tube, EntityId id, std::vector<Violation>& out) {
  bool any = false;
  for (const auto& [frame, mask] : tube.frames) {
    if (frame < 0) out.push_back({ViolationCode::NegativeFrame, id, "frame " + std::to_string(frame)});
    if (mask.height() != tube.height || mask.width() != tube.width) {
      out.push_back({ViolationCode::MaskShape, id,
                     "frame " + std::to_string(frame) + " is " + std::to_string(mask.height()) +
                         "x" + std::to_string(mask.width())});
    }
    any = any || !mask.is_empty();
  }
  if (!any) out.push_back({ViolationCode::EmptyTube, id, "no frame with a non-empty mask"});
}

void check_point_tube(const PointTube& tube, EntityId id, const PointCounts* counts,
                      std::vector<Violation>& out) {
  bool any = false;
  for (const auto& [frame, indices] : tube.frames) {
    if (frame < 0) out.push_back({ViolationCode::NegativeFrame, id, "frame " + std::to_string(frame)});
    if (std::adjacent_find(indices.begin(), indices.end(), std::greater_equal<>()) !=
        indices.end()) {
      out.push_back({ViolationCode::UnsortedPointIndices, id, "frame " + std::to_string(frame)});
    }
    if (counts != nullptr && !indices.empty()) {
      const auto it = counts->find(frame);
      const std::size_t n = it == counts->end() ? 0 : it->second;
      const auto max_index = *std::max_element(indices.begin(), indices.end());
      if (max_index >= n) {
        out.push_back({ViolationCode::PointIndexOutOfRange, id,
                       "frame " + std::to_string(frame) + " index " + std::to_string(max_index) +
                           " >= " + std::to_string(n)});
      }
    }
    any = any || !indices.empty();
  }
  if (!any) out.push_back({ViolationCode::EmptyTube, id, "no frame with a non-empty point set"});
}

void check_panoptic(const SceneGraph4D& graph, std::vector<Violation>& out) {
  std::map<FrameIndex, std::vector<const RleMask*>> masks;
  std::map<FrameIndex, std::vector<const std::vector<std::uint32_t>*>> points;
  for (const auto& e : graph.entities) {
    if (const auto* mt = std::get_if<MaskTube>(&e.tube)) {
      for (const auto& [f, m] : mt->frames) {
        if (!m.is_empty()) masks[f].push_back(&m);
      }
    } else {
      for (const auto& [f, idx] : std::get<PointTube>(e.tube).frames) {
        if (!idx.empty()) points[f].push_back(&idx);
      }
    }
  }
  std::set<FrameIndex> overlapping;
  for (const auto& [frame, list] : masks) {
    for (std::size_t i = 0; i < list.size() && !overlapping.contains(frame); ++i) {
      for (std::size_t j = i + 1; j < list.size(); ++j) {
        const auto& a = *list[i];
        const auto& b = *list[j];
        if (a.height() == b.height() && a.width() == b.width() && intersection_count(a, b) > 0) {
          overlapping.insert(frame);
          break;
        }
      }
    }
  }
  for (const auto& [frame, list] : points) {
    std::unordered_set<std::uint32_t> seen;
    for (const auto* idx : list) {
      for (const auto v : *idx) {
        if (!seen.insert(v).second) {
          overlapping.insert(frame);
          break;
        }
      }
      if (overlapping.contains(frame)) break;
    }
  }
  for (const auto f : overlapping) {
    out.push_back({ViolationCode::PanopticOverlap, f, "frame " + std::to_string(f)});
  }
}

}  // namespace

std::vector<Violation> validate_scene_graph(const SceneGraph4D& graph, const Vocabulary& vocab,
                                            ValidationMode mode, const PointCounts* point_counts) {
  std::vector<Violation> out;
  const bool gt = mode == ValidationMode::GroundTruth;

  for (const auto& p : vocab.problems()) out.push_back({ViolationCode::InvalidVocabulary, 0, p});
  if (graph.vocabulary_ref != vocab.checksum()) {
    out.push_back({ViolationCode::VocabularyMismatch, 0,
                   "graph references '" + graph.vocabulary_ref + "', vocabulary is '" +
                       vocab.checksum() + "'"});
  }

  std::set<EntityId> ids;
  for (const auto& e : graph.entities) {
    const EntityId id = e.entity_id;
    if (!ids.insert(id).second) out.push_back({ViolationCode::DuplicateEntity, id, ""});
    if (tube_entity_id(e.tube) != id) {
      out.push_back({ViolationCode::TubeIdMismatch, id,
                     "tube carries id " + std::to_string(tube_entity_id(e.tube))});
    }
    if (!vocab.has_object(e.category_id)) {
      out.push_back({ViolationCode::InvalidCategory, id, "category " + std::to_string(e.category_id)});
    }
    if (!(e.score >= 0.0 && e.score <= 1.0)) {
      out.push_back({ViolationCode::InvalidScore, id, "score " + std::to_string(e.score)});
    } else if (gt && e.score != 1.0) {
      out.push_back({ViolationCode::GroundTruthScore, id, "score " + std::to_string(e.score)});
    }
    if (const auto* mt = std::get_if<MaskTube>(&e.tube)) {
      check_mask_tube(*mt, id, out);
    } else {
      check_point_tube(std::get<PointTube>(e.tube), id, point_counts, out);
    }
    if (e.embeddings) {
      std::optional<std::size_t> dim;
      for (const auto& [f, v] : *e.embeddings) {
        const bool finite = std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
        if (!dim) dim = v.size();
        if (v.size() != *dim || v.empty() || !finite) {
          out.push_back({ViolationCode::EmbeddingDimension, id, "frame " + std::to_string(f)});
          break;
        }
      }
    }
  }

  for (std::size_t i = 0; i < graph.triplets.size(); ++i) {
    const auto& t = graph.triplets[i];
    const auto idx = static_cast<std::int64_t>(i);
    for (const EntityId ref : {t.subject_id, t.object_id}) {
      if (!ids.contains(ref)) {
        out.push_back({ViolationCode::UnresolvedEntity, ref, "triplet " + std::to_string(i)});
      }
    }
    if (t.subject_id == t.object_id) out.push_back({ViolationCode::SelfRelation, idx, ""});
    if (!vocab.has_predicate(t.predicate_id)) {
      out.push_back({ViolationCode::InvalidPredicate, idx,
                     "predicate " + std::to_string(t.predicate_id)});
    }
    if (!t.interval.valid()) {
      out.push_back({ViolationCode::InvalidInterval, idx,
                     "[" + std::to_string(t.interval.start) + "," + std::to_string(t.interval.end) + ")"});
    }
    if (!(t.confidence >= 0.0 && t.confidence <= 1.0)) {
      out.push_back({ViolationCode::InvalidConfidence, idx, std::to_string(t.confidence)});
    } else if (gt && t.confidence != 1.0) {
      out.push_back({ViolationCode::GroundTruthConfidence, idx, std::to_string(t.confidence)});
    }
  }

  if (gt) check_panoptic(graph, out);

  std::stable_sort(out.begin(), out.end(), [](const Violation& a, const Violation& b) {
    return std::tie(a.code, a.id, a.detail) < std::tie(b.code, b.id, b.detail);
  });
  return out;
}

}  // namespace psg4d

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "psg4d/rle.hpp"

namespace psg4d {

using EntityId = std::int64_t;
using FrameIndex = std::int64_t;
using ClassId = std::int32_t;

struct ObjectClass {
  ClassId id = 0;
  std::string name;
  bool is_thing = true;
  friend bool operator==(const ObjectClass&, const ObjectClass&) = default;
};

struct PredicateClass {
  ClassId id = 0;
  std::string name;
  friend bool operator==(const PredicateClass&, const PredicateClass&) = default;
};

/// Object and predicate label sets. Ids are dense and equal to the position
/// in each list.
struct Vocabulary {
  std::vector<ObjectClass> object_classes;
  std::vector<PredicateClass> predicate_classes;

  bool has_object(ClassId id) const noexcept {
    return id >= 0 && static_cast<std::size_t>(id) < object_classes.size();
  }
  bool has_predicate(ClassId id) const noexcept {
    return id >= 0 && static_cast<std::size_t>(id) < predicate_classes.size();
  }

  /// Human-readable descriptions of every broken invariant; empty when valid.
  std::vector<std::string> problems() const;

  /// 16 hex digits of FNV-1a/64 over a canonical text rendering of both lists.
  std::string checksum() const;

  friend bool operator==(const Vocabulary&, const Vocabulary&) = default;
};

/// Half-open frame range [start, end).
struct FrameInterval {
  FrameIndex start = 0;
  FrameIndex end = 1;

  FrameIndex length() const noexcept { return end - start; }
  bool valid() const noexcept { return start >= 0 && start < end; }
  friend auto operator<=>(const FrameInterval&, const FrameInterval&) = default;
};

struct MaskTube {
  EntityId entity_id = 0;
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::map<FrameIndex, RleMask> frames;

  friend bool operator==(const MaskTube&, const MaskTube&) = default;
};

/// Per-frame sorted indices into that frame's point cloud.
struct PointTube {
  EntityId entity_id = 0;
  std::map<FrameIndex, std::vector<std::uint32_t>> frames;

  friend bool operator==(const PointTube&, const PointTube&) = default;
};

using Tube = std::variant<MaskTube, PointTube>;

using EmbeddingTube = std::map<FrameIndex, std::vector<double>>;

struct EntityNode {
  EntityId entity_id = 0;
  ClassId category_id = 0;
  double score = 1.0;
  Tube tube;
  std::optional<EmbeddingTube> embeddings;

  friend bool operator==(const EntityNode&, const EntityNode&) = default;
};

struct RelationTriplet {
  EntityId subject_id = 0;
  EntityId object_id = 0;
  ClassId predicate_id = 0;
  FrameInterval interval;
  double confidence = 1.0;

  friend bool operator==(const RelationTriplet&, const RelationTriplet&) = default;
};

struct SceneGraph4D {
  std::string video_id;
  std::vector<EntityNode> entities;
  std::vector<RelationTriplet> triplets;
  std::string vocabulary_ref;

  /// Linear scan; graphs hold tens of entities.
  const EntityNode* find_entity(EntityId id) const noexcept;

  friend bool operator==(const SceneGraph4D&, const SceneGraph4D&) = default;
};

enum class ValidationMode { GroundTruth, Prediction };

/// Declaration order is the sort order of reported violations.
enum class ViolationCode {
  VocabularyMismatch,
  InvalidVocabulary,
  DuplicateEntity,
  TubeIdMismatch,
  InvalidCategory,
  InvalidScore,
  GroundTruthScore,
  EmptyTube,
  NegativeFrame,
  MaskShape,
  UnsortedPointIndices,
  PointIndexOutOfRange,
  EmbeddingDimension,
  UnresolvedEntity,
  SelfRelation,
  InvalidPredicate,
  InvalidInterval,
  InvalidConfidence,
  GroundTruthConfidence,
  PanopticOverlap,
};

std::string_view to_string(ViolationCode code);

struct Violation {
  ViolationCode code;
  /// Entity id, triplet index, or frame index depending on the code.
  std::int64_t id = 0;
  std::string detail;

  friend bool operator==(const Violation&, const Violation&) = default;
};

/// Optional per-frame point counts used to range-check PointTube indices.
using PointCounts = std::map<FrameIndex, std::size_t>;

/// Returns every invariant violation, sorted by (code, id, detail). Ground-truth
/// mode additionally requires pixel-disjoint mask tubes, score 1 and
/// confidence 1.
std::vector<Violation> validate_scene_graph(const SceneGraph4D& graph, const Vocabulary& vocab,
                                            ValidationMode mode,
                                            const PointCounts* point_counts = nullptr);

EntityId tube_entity_id(const Tube& tube) noexcept;

}  // namespace psg4d

#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "psg4d/geometry.hpp"
#include "psg4d/model.hpp"

namespace psg4d {

enum class RuleKind { Near, Above, Contact };

std::string_view to_string(RuleKind kind);
std::optional<RuleKind> parse_rule_kind(std::string_view text);

/// A geometric stand-in for one predicate class.
///   near:    centroid distance < threshold
///   above:   subject z - object z > threshold and horizontal distance < threshold
///   contact: the two tubes, voxelized at `threshold`, share a voxel
struct Rule {
  ClassId predicate_id = 0;
  RuleKind kind = RuleKind::Near;
  double threshold = 1.0;  // meters
  FrameIndex min_duration = 1;

  friend bool operator==(const Rule&, const Rule&) = default;
};

struct Rulebook {
  std::vector<Rule> rules;

  std::vector<std::string> problems(const Vocabulary& vocab) const;
  friend bool operator==(const Rulebook&, const Rulebook&) = default;
};

/// Pluggable relation scorer: turns tracked entities into ranked triplets.
class RelationScorer {
 public:
  virtual ~RelationScorer() = default;
  virtual std::vector<RelationTriplet> score(std::span<const EntityNode> entities,
                                             const std::map<EntityId, TubeGeometry>& geometry) const = 0;
};

/// Applies every rule to every ordered entity pair. Each maximal run of
/// consecutive frames where the rule holds, at least min_duration long, yields
/// one triplet with confidence = mean over the run of max(0, 1 - distance /
/// threshold) (1 for contact). Sorted by confidence descending, then
/// (subject, object, predicate, start). Throws MissingTrajectory.
std::vector<RelationTriplet> score_pairs_geometric(std::span<const EntityNode> entities,
                                                   const std::map<EntityId, TubeGeometry>& geometry,
                                                   const Rulebook& rulebook);

class GeometricScorer final : public RelationScorer {
 public:
  explicit GeometricScorer(Rulebook rulebook) : rulebook_(std::move(rulebook)) {}
  std::vector<RelationTriplet> score(std::span<const EntityNode> entities,
                                     const std::map<EntityId, TubeGeometry>& geometry) const override {
    return score_pairs_geometric(entities, geometry, rulebook_);
  }

 private:
  Rulebook rulebook_;
};

}  // namespace psg4d

#include "doctest.h"
#include "fixtures.hpp"
#include "psg4d/synthgen.hpp"

using namespace psg4d;

namespace {

std::vector<ViolationCode> codes(const std::vector<Violation>& v) {
  std::vector<ViolationCode> out;
  for (const auto& x : v) out.push_back(x.code);
  return out;
}

}  // namespace

TEST_CASE("a well-formed graph without triplets is valid") {
  const auto g = fixture::graph("v", {fixture::box_entity(0, 0, 0, 3, 0, 0, 4, 4)}, {});
  CHECK(validate_scene_graph(g, fixture::vocabulary(), ValidationMode::GroundTruth).empty());
}

TEST_CASE("unresolved triplet endpoints are reported with the missing id") {
  const auto g = fixture::graph("v", {fixture::box_entity(0, 0, 0, 3, 0, 0, 4, 4)}, {{0, 99, 0, {0, 3}, 1.0}});
  const auto v = validate_scene_graph(g, fixture::vocabulary(), ValidationMode::GroundTruth);
  REQUIRE(v.size() == 1);
  CHECK(v[0].code == ViolationCode::UnresolvedEntity);
  CHECK(v[0].id == 99);
}

TEST_CASE("ground truth tubes must not share pixels") {
  auto a = fixture::box_entity(0, 0, 0, 5, 0, 0, 6, 6);
  auto b = fixture::box_entity(1, 1, 3, 4, 5, 5, 9, 9);
  const auto g = fixture::graph("v", {a, b}, {});
  const auto v = validate_scene_graph(g, fixture::vocabulary(), ValidationMode::GroundTruth);
  REQUIRE(v.size() == 1);
  CHECK(v[0].code == ViolationCode::PanopticOverlap);
  CHECK(v[0].id == 3);
  CHECK(validate_scene_graph(g, fixture::vocabulary(), ValidationMode::Prediction).empty());
}

TEST_CASE("point tube overlap and index range") {
  EntityNode a{0, 0, 1.0, PointTube{0, {{2, {1, 4}}}}, std::nullopt};
  EntityNode b{1, 1, 1.0, PointTube{1, {{2, {4, 9}}}}, std::nullopt};
  const auto g = fixture::graph("v", {a, b}, {});
  const PointCounts counts{{2, 8}};
  const auto v = validate_scene_graph(g, fixture::vocabulary(), ValidationMode::GroundTruth, &counts);
  CHECK(codes(v) == std::vector<ViolationCode>{ViolationCode::PointIndexOutOfRange, ViolationCode::PanopticOverlap});
}

TEST_CASE("every per-field rule fires and the order is stable") {
  auto dup = fixture::box_entity(0, 0, 0, 1, 0, 0, 2, 2);
  auto dup2 = fixture::box_entity(0, 0, 0, 1, 10, 10, 12, 12);
  auto bad = fixture::box_entity(2, 17, 0, 1, 4, 4, 6, 6);
  bad.score = 0.5;
  auto neg = fixture::box_entity(3, 0, -1, 0, 8, 8, 9, 9);
  EntityNode empty{4, 0, 1.0, MaskTube{4, 16, 16, {}}, std::nullopt};
  const auto g = fixture::graph("v", {dup, dup2, bad, neg, empty},
                                {{0, 0, 0, {0, 1}, 1.0}, {0, 2, 9, {3, 3}, 0.5}, {2, 0, 1, {0, 1}, 1.5}});
  const auto v = validate_scene_graph(g, fixture::vocabulary(), ValidationMode::GroundTruth);
  CHECK(codes(v) == std::vector<ViolationCode>{
                        ViolationCode::DuplicateEntity, ViolationCode::InvalidCategory, ViolationCode::GroundTruthScore,
                        ViolationCode::EmptyTube, ViolationCode::NegativeFrame, ViolationCode::SelfRelation,
                        ViolationCode::InvalidPredicate, ViolationCode::InvalidInterval,
                        ViolationCode::InvalidConfidence, ViolationCode::GroundTruthConfidence});
  CHECK(validate_scene_graph(g, fixture::vocabulary(), ValidationMode::GroundTruth) == v);
  for (std::size_t i = 1; i < v.size(); ++i) {
    CHECK((v[i - 1].code < v[i].code || (v[i - 1].code == v[i].code && v[i - 1].id <= v[i].id)));
  }
}

TEST_CASE("vocabulary checks") {
  auto vocab = fixture::vocabulary();
  auto g = fixture::graph("v", {fixture::box_entity(0, 0, 0, 1, 0, 0, 2, 2)}, {});
  g.vocabulary_ref = "0000000000000000";
  CHECK(codes(validate_scene_graph(g, vocab, ValidationMode::Prediction)) ==
        std::vector<ViolationCode>{ViolationCode::VocabularyMismatch});

  vocab.predicate_classes.push_back({3, "near"});
  CHECK_FALSE(vocab.problems().empty());
  CHECK(vocab.checksum() != fixture::vocabulary().checksum());
  CHECK(fixture::vocabulary().checksum() == fixture::vocabulary().checksum());
  CHECK(fixture::vocabulary().checksum().size() == 16);
}

TEST_CASE("generated ground truth always validates") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const auto recipe = random_recipe({}, seed, "scene");
    const auto scene = generate_scene(recipe);
    CHECK(validate_scene_graph(scene.gt, recipe.vocabulary, ValidationMode::GroundTruth).empty());
  }
}

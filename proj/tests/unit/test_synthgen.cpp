#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "psg4d/error.hpp"
#include "psg4d/synthgen.hpp"

using namespace psg4d;

namespace {

SceneRecipe two_object_recipe() {
  SceneRecipe r;
  r.video_id = "scripted";
  r.frame_count = 30;
  r.intrinsics = {60.0, 60.0, 40.0, 30.0, 80, 60};
  r.cam_to_world = default_camera_pose();
  r.vocabulary = default_vocabulary();
  r.rulebook = {{{0, RuleKind::Near, 1.0, 3}}};
  ObjectScript a;
  a.category_id = 0;
  a.size = {0.4, 0.05, 0.4};
  a.waypoints = {{0, {-1.5, 4.0, 0.0}}};
  ObjectScript b;
  b.category_id = 1;
  b.size = {0.4, 0.05, 0.4};
  b.waypoints = {{9, {1.5, 4.0, 0.0}}, {10, {-0.9, 4.0, 0.0}}, {19, {-0.9, 4.0, 0.2}}, {20, {1.5, 4.0, 0.0}}};
  r.objects = {a, b};
  return r;
}

Eigen::Vector3d interpolate(const std::vector<Waypoint>& w, FrameIndex f) {
  if (f <= w.front().frame) return w.front().position;
  if (f >= w.back().frame) return w.back().position;
  for (std::size_t i = 1; i < w.size(); ++i) {
    if (f <= w[i].frame) {
      const double t = static_cast<double>(f - w[i - 1].frame) / static_cast<double>(w[i].frame - w[i - 1].frame);
      return w[i - 1].position + t * (w[i].position - w[i - 1].position);
    }
  }
  return w.back().position;
}

}  // namespace

TEST_CASE("scripted near interval matches an independent distance loop") {
  const auto r = two_object_recipe();
  const auto scene = generate_scene(r);
  std::vector<RelationTriplet> expect;
  for (EntityId s = 0; s < 2; ++s) {
    const EntityId o = 1 - s;
    FrameIndex start = -1;
    for (FrameIndex f = 0; f <= r.frame_count; ++f) {
      const bool near = f < r.frame_count &&
                        (interpolate(r.objects[static_cast<std::size_t>(s)].waypoints, f) -
                         interpolate(r.objects[static_cast<std::size_t>(o)].waypoints, f)).norm() < 1.0;
      if (near && start < 0) start = f;
      if (!near && start >= 0) {
        if (f - start >= 3) expect.push_back({s, o, 0, {start, f}, 1.0});
        start = -1;
      }
    }
  }
  REQUIRE(expect.size() == 2);
  CHECK(expect[0].interval == FrameInterval{10, 20});
  CHECK(scene.gt.triplets == expect);
  CHECK(scene.gt.entities.size() == 2);
  CHECK(validate_scene_graph(scene.gt, r.vocabulary, ValidationMode::GroundTruth).empty());
}

TEST_CASE("generation is deterministic") {
  const auto r = random_recipe({}, 77, "x");
  const auto a = generate_scene(r), b = generate_scene(r);
  CHECK(a.gt == b.gt);
  REQUIRE(a.frames.size() == b.frames.size());
  for (std::size_t i = 0; i < a.frames.size(); ++i) {
    CHECK(a.frames[i].raw_depth == b.frames[i].raw_depth);
    CHECK(a.frames[i].rgb.data == b.frames[i].rgb.data);
  }
  const auto r2 = random_recipe({}, 77, "x");
  CHECK(r2.objects.size() == r.objects.size());
  CHECK(r2.objects[0].waypoints[0].position == r.objects[0].waypoints[0].position);
}

TEST_CASE("object count stays within the random scene bounds") {
  RandomSceneSpec spec;
  spec.min_objects = spec.max_objects = 3;
  for (std::uint64_t seed = 0; seed < 5; ++seed) CHECK(generate_scene(random_recipe(spec, seed, "s")).gt.entities.size() == 3);
}

TEST_CASE("objects leaving the view are rejected") {
  auto r = two_object_recipe();
  r.objects[0].waypoints = {{0, {-5.0, 4.0, 0.0}}};
  try {
    generate_scene(r);
    FAIL("expected FrustumViolation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::FrustumViolation);
  }
  r = two_object_recipe();
  r.objects[0].waypoints = {{0, {0.0, -4.0, 0.0}}};
  CHECK_THROWS_AS(generate_scene(r), Error);
}

TEST_CASE("depth is quantized and the nearer box wins") {
  auto r = two_object_recipe();
  r.objects[1].waypoints = {{0, {-1.5, 3.0, 0.0}}};
  const auto scene = generate_scene(r);
  const auto& f = scene.frames[0];
  const std::size_t centre = 30 * 80 + 40 - static_cast<std::size_t>(std::lround(1.5 / 3.0 * 60.0));
  CHECK(f.raw_depth[centre] == 3000 - 25);
  CHECK(f.depth.meters[centre] == f.raw_depth[centre] / 1000.0);
  const auto& nearer = std::get<MaskTube>(scene.gt.entities[1].tube).frames.at(0);
  CHECK(nearer.decode()[centre] == 1);
  CHECK(f.raw_depth[0] == 0);
}

TEST_CASE("rendered centroids follow the scripted trajectory") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    RandomSceneSpec spec;
    spec.frame_count = 5;
    spec.min_objects = spec.max_objects = 1;
    const auto r = random_recipe(spec, seed, "c");
    const auto scene = generate_scene(r);
    std::map<FrameIndex, DepthFrameView> views;
    for (std::size_t f = 0; f < scene.frames.size(); ++f) {
      views.emplace(static_cast<FrameIndex>(f), DepthFrameView{&scene.frames[f].depth, r.intrinsics, r.cam_to_world});
    }
    const auto traj = tube_trajectory(scene.gt.entities[0], views);
    const double voxel = 0.1;
    for (const auto& [f, c] : traj) {
      CHECK((c - scene.trajectories.at(0).at(f)).norm() < voxel * std::sqrt(3.0));
      CHECK((c - scene.trajectories.at(0).at(f)).norm() < voxel / 2.0);
    }
  }
}

TEST_CASE("perturbation without noise reproduces the ground truth") {
  const auto gt = generate_scene(random_recipe({}, 3, "p")).gt;
  const std::vector<std::size_t> ks{gt.triplets.size() + 1};
  const auto p = perturb_predictions(gt, default_vocabulary(), {}, 1, ks);
  CHECK(p.pred.entities == gt.entities);
  CHECK(p.pred.triplets.size() == gt.triplets.size());
  if (!gt.triplets.empty()) CHECK(*p.oracle.at(ks[0]).recall == 1.0);
}

TEST_CASE("flipping every label zeroes the oracle") {
  NoiseConfig n;
  n.label_flip_prob = 1.0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto gt = generate_scene(random_recipe({}, 40 + s, "f")).gt;
    if (gt.triplets.empty()) continue;
    const std::vector<std::size_t> ks{100};
    const auto p = perturb_predictions(gt, default_vocabulary(), n, s, ks);
    CHECK(*p.oracle.at(100).recall == 0.0);
    for (std::size_t i = 0; i < gt.entities.size(); ++i) CHECK(p.pred.entities[i].category_id != gt.entities[i].category_id);
  }
}

TEST_CASE("shortening every interval by three tenths") {
  auto r = two_object_recipe();
  r.objects[1].waypoints = {{0, {-0.9, 4.0, 0.0}}};
  r.frame_count = 10;
  const auto gt = generate_scene(r).gt;
  REQUIRE(gt.triplets.size() == 2);
  REQUIRE(gt.triplets[0].interval == FrameInterval{0, 10});
  NoiseConfig n;
  n.interval_jitter = 3;
  const std::vector<std::size_t> ks{20};
  const auto p = perturb_predictions(gt, r.vocabulary, n, 0, ks);
  CHECK(p.pred.triplets[0].interval == FrameInterval{0, 7});
  CHECK(*p.oracle.at(20).recall == doctest::Approx(0.7));
}

TEST_CASE("noise configuration is checked") {
  NoiseConfig n;
  n.label_flip_prob = 1.5;
  CHECK_FALSE(n.problems().empty());
  n = {};
  n.drop_triplet_prob = -0.1;
  CHECK_FALSE(n.problems().empty());
}

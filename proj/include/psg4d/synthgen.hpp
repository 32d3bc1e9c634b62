#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "psg4d/geometry.hpp"
#include "psg4d/model.hpp"
#include "psg4d/relate.hpp"
#include "psg4d/rng.hpp"

namespace psg4d {

struct Waypoint {
  FrameIndex frame = 0;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();  // world-space box center
};

/// An axis-aligned box moving along piecewise-linear waypoints.
struct ObjectScript {
  ClassId category_id = 0;
  Eigen::Vector3d size = Eigen::Vector3d::Constant(0.3);  // full extents, meters
  std::vector<Waypoint> waypoints;
  std::array<std::uint8_t, 3> color{200, 200, 200};

  /// Linear interpolation between waypoints; clamped outside their range.
  Eigen::Vector3d position_at(FrameIndex frame) const;
};

struct SceneRecipe {
  std::string video_id = "video";
  std::uint64_t seed = 0;
  FrameIndex frame_count = 1;
  double fps = 30.0;
  double depth_scale = 1000.0;  // stored depth units per meter
  CameraIntrinsics intrinsics;
  RigidTransform cam_to_world;
  Vocabulary vocabulary;
  std::vector<ObjectScript> objects;
  Rulebook rulebook;

  std::vector<std::string> problems() const;
};

/// One rendered RGB-D frame. depth.meters holds the quantized values
/// (raw_depth / depth_scale), so it matches what a reader gets back.
struct RenderedFrame {
  std::vector<std::uint16_t> raw_depth;
  DepthImage depth;
  RgbImage rgb;
};

struct GeneratedScene {
  std::vector<RenderedFrame> frames;
  SceneGraph4D gt;
  /// Scripted box centers per entity and frame.
  std::map<EntityId, std::map<FrameIndex, Eigen::Vector3d>> trajectories;
};

inline constexpr std::array<std::uint8_t, 3> kBackgroundColor{32, 32, 32};

/// Renders the boxes (nearest surface wins each pixel) and derives the ground
/// truth: entity i owns the pixels where box i is nearest; triplets come from
/// the rulebook applied to the scripted boxes. Throws FrustumViolation when a
/// box leaves the view at a waypoint, lies beyond the depth range, or is
/// never visible; InvalidArgument for other recipe problems.
GeneratedScene generate_scene(const SceneRecipe& recipe);

/// World-space geometry of the scripted boxes: centers, plus for contact rules
/// a lattice over each box dense enough that voxelizing it at any contact
/// threshold in `rulebook` yields exactly the voxels the box intersects.
std::map<EntityId, TubeGeometry> scripted_geometry(const SceneRecipe& recipe);

/// Knobs for random scenes built by random_recipe.
struct RandomSceneSpec {
  std::uint32_t width = 80;
  std::uint32_t height = 60;
  double focal = 60.0;
  FrameIndex frame_count = 30;
  std::size_t min_objects = 3;
  std::size_t max_objects = 5;
  std::size_t max_waypoints = 3;
};

/// A small indoor vocabulary and matching rulebook used by the generator's
/// default scenes.
Vocabulary default_vocabulary();
Rulebook default_rulebook();

/// The z-up world camera used by random scenes: looks along +y, image down = -z.
RigidTransform default_camera_pose();

/// Deterministic random recipe; retries internally until the scene renders.
SceneRecipe random_recipe(const RandomSceneSpec& spec, std::uint64_t seed, const std::string& video_id,
                          const Vocabulary& vocabulary = default_vocabulary(),
                          const Rulebook& rulebook = default_rulebook());

enum class ConfidenceMode { OracleDescending, UniformRandom };

/// Perturbation channels applied by perturb_predictions.
struct NoiseConfig {
  /// Chebyshev dilation (> 0) or erosion (< 0) radius in pixels, mask tubes only.
  int mask_erode_dilate = 0;
  /// Per entity: replace the category by a different one, uniformly.
  double label_flip_prob = 0.0;
  /// > 0 shortens each interval's end by that many frames (keeping one frame);
  /// < 0 shifts each interval later by that many frames.
  FrameIndex interval_jitter = 0;
  ConfidenceMode confidence_mode = ConfidenceMode::OracleDescending;
  /// Per triplet: drop it.
  double drop_triplet_prob = 0.0;

  std::vector<std::string> problems() const;
};

struct OracleRecall {
  std::optional<double> recall;
  std::optional<double> mean_recall;
  std::map<ClassId, double> per_predicate;
};

struct PerturbedPrediction {
  SceneGraph4D pred;
  std::map<std::size_t, OracleRecall> oracle;
};

/// Builds a prediction from the ground truth and, alongside it, the exact
/// recall an evaluator must report for every k. The expected values come from
/// dense per-voxel tube comparison and a standalone replay of the matching
/// rules; nothing here calls the overlap or metrics code.
///
/// Random streams (split from `seed`): 1 = label flips, 2 = triplet drops,
/// 3 = confidences.
PerturbedPrediction perturb_predictions(const SceneGraph4D& gt, const Vocabulary& vocab,
                                        const NoiseConfig& noise, std::uint64_t seed,
                                        std::span<const std::size_t> ks,
                                        double viou_threshold = 0.5);

}  // namespace psg4d

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "psg4d/geometry.hpp"
#include "psg4d/matching.hpp"
#include "psg4d/metrics.hpp"
#include "psg4d/model.hpp"
#include "psg4d/relate.hpp"
#include "psg4d/synthgen.hpp"

namespace psg4d {

namespace fs = std::filesystem;

// On-disk layout of a dataset root:
//
//   manifest.json                      vocabulary, checksum, video list
//   videos/<id>/video.json             per-video camera and timing metadata
//   videos/<id>/masks.json             entity -> {frame -> RLE runs}
//   videos/<id>/relations.json         ordered relation list
//   videos/<id>/frames/NNNNNN.depth.png   16-bit depth, value / depth_scale = m
//   videos/<id>/frames/NNNNNN.rgb.png     8-bit RGB
//   videos/<id>/frames/NNNNNN.pts         point-cloud videos: u32 count + count x 6 f32
//
// Every document is written canonically (sorted keys, fixed indentation,
// shortest round-trip number formatting) so equal content gives equal bytes.

inline constexpr int kFormatVersion = 1;

enum class Modality { Rgbd, PointCloud };

struct VideoManifest {
  std::string video_id;
  Modality modality = Modality::Rgbd;
  FrameIndex frame_count = 0;
  double fps = 30.0;
  double depth_scale = 1000.0;
  double lambda = kDefaultDepthThreshold;
  CameraIntrinsics intrinsics;
  /// Camera-to-world per frame; empty means identity for every frame.
  std::vector<RigidTransform> extrinsics;
  std::string vocabulary_ref;

  RigidTransform cam_to_world(FrameIndex frame) const;
};

struct VideoRecord {
  VideoManifest manifest;
  SceneGraph4D graph;
};

struct Dataset {
  Vocabulary vocabulary;
  std::vector<VideoRecord> videos;
  /// Free-form string metadata kept in the root manifest (generator, seed...).
  std::map<std::string, std::string> metadata;
};

struct FileViolation {
  std::string file;
  Violation violation;
};

struct DatasetReadResult {
  Dataset dataset;
  /// Ground-truth validation findings; reading still succeeds.
  std::vector<FileViolation> violations;
};

/// Throws MissingFile, SchemaViolation and ChecksumMismatch.
DatasetReadResult read_dataset(const fs::path& root);
/// Reads only the vocabulary from manifest.json, checking its checksum.
Vocabulary read_dataset_vocabulary(const fs::path& root);
/// Writes manifests, masks and relations (frame files are written separately).
void write_dataset(const fs::path& root, const Dataset& dataset);

fs::path video_dir(const fs::path& root, const std::string& video_id);
fs::path depth_frame_path(const fs::path& video_directory, FrameIndex frame);
fs::path rgb_frame_path(const fs::path& video_directory, FrameIndex frame);
fs::path points_frame_path(const fs::path& video_directory, FrameIndex frame);

VideoManifest read_video_manifest(const fs::path& video_directory);
void write_video_manifest(const fs::path& video_directory, const VideoManifest& manifest);
/// Reads masks.json and relations.json of one video directory.
SceneGraph4D read_video_graph(const fs::path& video_directory, const std::string& video_id,
                              const std::string& vocabulary_ref);
void write_video_graph(const fs::path& video_directory, const SceneGraph4D& graph);

// Frame files.
void write_depth_png(const fs::path& path, std::uint32_t height, std::uint32_t width,
                     const std::vector<std::uint16_t>& raw);
std::vector<std::uint16_t> read_depth_png(const fs::path& path, std::uint32_t& height, std::uint32_t& width);
void write_rgb_png(const fs::path& path, const RgbImage& image);
RgbImage read_rgb_png(const fs::path& path);
DepthImage read_depth_frame(const fs::path& video_directory, const VideoManifest& manifest, FrameIndex frame);
void write_point_frame(const fs::path& path, const PointCloudFrame& frame);
PointCloudFrame read_point_frame(const fs::path& path);

/// Prediction file: one document holding every video's predicted graph.
void write_predictions(const fs::path& path, const std::string& vocabulary_ref,
                       const std::vector<SceneGraph4D>& graphs);
std::vector<SceneGraph4D> read_predictions(const fs::path& path);

std::string report_to_json(const EvaluationReport& report);

Rulebook read_rulebook(const fs::path& path);
void write_rulebook(const fs::path& path, const Rulebook& rulebook);

/// Tracker input: {"frames": [{"frame": t, "segments": [{"mask": {"height",
/// "width", "runs"} | "points": [...], "category_id", "score", "embedding"}]}]}
std::vector<FrameSegment> read_segments(const fs::path& path);
void write_segments(const fs::path& path, const std::vector<FrameSegment>& segments);
/// Tracker output: entities document (same shape as masks.json, with embeddings).
void write_entities(const fs::path& path, const std::vector<EntityNode>& entities);

/// Generator input: vocabulary, rulebook, explicit scenes and/or a random-scene
/// block, and an optional noise block that also emits predictions.
struct RecipeFile {
  Vocabulary vocabulary = default_vocabulary();
  Rulebook rulebook = default_rulebook();
  std::vector<SceneRecipe> scenes;
  std::size_t random_scene_count = 0;
  RandomSceneSpec random_spec;
  std::optional<NoiseConfig> noise;
  std::vector<std::size_t> ks{20, 50, 100};
};
RecipeFile read_recipe_file(const fs::path& path);

/// Canonical JSON text of one graph document (entities + relations).
std::string graph_to_json(const SceneGraph4D& graph);

}  // namespace psg4d

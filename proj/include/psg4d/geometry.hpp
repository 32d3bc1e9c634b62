#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "psg4d/model.hpp"

namespace psg4d {

/// Retained depth when nothing else is configured, in meters.
inline constexpr double kDefaultDepthThreshold = 20.0;

/// Pinhole camera, no distortion.
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  std::uint32_t width = 1;
  std::uint32_t height = 1;

  std::vector<std::string> problems() const;
  friend bool operator==(const CameraIntrinsics&, const CameraIntrinsics&) = default;
};

class RigidTransform {
 public:
  RigidTransform() : m_(Eigen::Matrix4d::Identity()) {}

  /// Throws InvalidArgument unless the bottom row is (0,0,0,1) and the
  /// rotation block is orthonormal within 1e-6.
  static RigidTransform from_row_major(std::span<const double> values);
  static RigidTransform from_matrix(const Eigen::Matrix4d& m);
  static RigidTransform from_parts(const Eigen::Matrix3d& rotation,
                                   const Eigen::Vector3d& translation);

  const Eigen::Matrix4d& matrix() const noexcept { return m_; }
  Eigen::Matrix3d rotation() const { return m_.topLeftCorner<3, 3>(); }
  Eigen::Vector3d translation() const { return m_.topRightCorner<3, 1>(); }
  std::array<double, 16> to_row_major() const;

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const {
    return m_.topLeftCorner<3, 3>() * p + m_.topRightCorner<3, 1>();
  }
  RigidTransform inverse() const;
  bool is_identity() const { return m_ == Eigen::Matrix4d::Identity(); }

  friend bool operator==(const RigidTransform& a, const RigidTransform& b) { return a.m_ == b.m_; }

 private:
  explicit RigidTransform(const Eigen::Matrix4d& m) : m_(m) {}
  Eigen::Matrix4d m_;
};

/// Metric depth, row-major; 0 marks a missing return.
struct DepthImage {
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::vector<double> meters;

  double at(std::uint32_t row, std::uint32_t col) const { return meters[std::size_t{row} * width + col]; }
};

/// Interleaved 8-bit RGB, row-major.
struct RgbImage {
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::vector<std::uint8_t> data;
};

struct ColoredPoint {
  Eigen::Vector3d position;
  std::array<std::uint8_t, 3> rgb{};
};

struct PixelCoord {
  std::uint32_t row = 0;
  std::uint32_t col = 0;
  friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
};

/// One colored point cloud (M x 6 payload). source_pixels is either empty or
/// parallel to points.
struct PointCloudFrame {
  std::vector<ColoredPoint> points;
  std::vector<PixelCoord> source_pixels;

  std::size_t size() const noexcept { return points.size(); }
};

/// Back-projects every pixel with 0 < depth <= lambda through the pinhole
/// model and cam_to_world, in row-major scan order. lambda may be +inf.
/// Throws DimensionMismatch and InvalidThreshold.
PointCloudFrame depth_frame_to_points(const DepthImage& depth, const RgbImage& rgb,
                                      const CameraIntrinsics& intrinsics,
                                      const RigidTransform& cam_to_world,
                                      double lambda = kDefaultDepthThreshold);

/// Inverse of the back-projection for one world point: (col, row, camera depth).
Eigen::Vector3d project_to_pixel(const Eigen::Vector3d& world, const CameraIntrinsics& intrinsics,
                                 const RigidTransform& cam_to_world);

PointCloudFrame transform_points(const PointCloudFrame& frame, const RigidTransform& transform);

using Voxel = std::array<std::int64_t, 3>;

/// floor(p / voxel_size) per point, deduplicated and sorted. Throws
/// InvalidVoxelSize when voxel_size <= 0.
std::vector<Voxel> voxelize(const PointCloudFrame& frame, double voxel_size);
std::vector<Voxel> voxelize(std::span<const Eigen::Vector3d> points, double voxel_size);

/// Non-owning view of one RGB-D frame's geometry.
struct DepthFrameView {
  const DepthImage* depth = nullptr;
  CameraIntrinsics intrinsics;
  RigidTransform cam_to_world;
  double lambda = std::numeric_limits<double>::infinity();
};

/// World-space support of one entity: per-frame covered points and their mean.
/// Frames where the tube covers no valid point are absent from both maps.
struct TubeGeometry {
  std::map<FrameIndex, Eigen::Vector3d> centroids;
  std::map<FrameIndex, std::vector<Eigen::Vector3d>> points;
};

/// RGB-D mode: mask pixels are back-projected. Throws KindMismatch for point tubes.
TubeGeometry tube_geometry(const EntityNode& entity,
                           const std::map<FrameIndex, DepthFrameView>& frames);
/// Point mode: indices select points. Throws KindMismatch for mask tubes.
TubeGeometry tube_geometry(const EntityNode& entity,
                           const std::map<FrameIndex, PointCloudFrame>& frames);

std::map<FrameIndex, Eigen::Vector3d> tube_trajectory(
    const EntityNode& entity, const std::map<FrameIndex, DepthFrameView>& frames);
std::map<FrameIndex, Eigen::Vector3d> tube_trajectory(
    const EntityNode& entity, const std::map<FrameIndex, PointCloudFrame>& frames);

}  // namespace psg4d

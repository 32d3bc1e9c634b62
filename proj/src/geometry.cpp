#include "psg4d/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "psg4d/error.hpp"

namespace psg4d {

std::vector<std::string> CameraIntrinsics::problems() const {
  std::vector<std::string> out;
  if (!(fx > 0.0) || !(fy > 0.0)) out.emplace_back("focal lengths must be positive");
  if (width == 0 || height == 0) out.emplace_back("image size must be positive");
  if (!(cx >= 0.0 && cx < width)) out.emplace_back("cx outside [0, width)");
  if (!(cy >= 0.0 && cy < height)) out.emplace_back("cy outside [0, height)");
  return out;
}

RigidTransform RigidTransform::from_row_major(std::span<const double> values) {
  if (values.size() != 16) {
    throw Error(ErrorCode::InvalidArgument, "transform needs 16 values, got " +
                                                std::to_string(values.size()));
  }
  Eigen::Matrix4d m;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) m(r, c) = values[static_cast<std::size_t>(r * 4 + c)];
  }
  return from_matrix(m);
}

RigidTransform RigidTransform::from_matrix(const Eigen::Matrix4d& m) {
  if (!m.allFinite()) throw Error(ErrorCode::InvalidArgument, "transform is not finite");
  if (m(3, 0) != 0.0 || m(3, 1) != 0.0 || m(3, 2) != 0.0 || m(3, 3) != 1.0) {
    throw Error(ErrorCode::InvalidArgument, "transform bottom row must be (0, 0, 0, 1)");
  }
  const Eigen::Matrix3d r = m.topLeftCorner<3, 3>();
  if (((r.transpose() * r) - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-6) {
    throw Error(ErrorCode::InvalidArgument, "transform rotation is not orthonormal");
  }
  return RigidTransform(m);
}

RigidTransform RigidTransform::from_parts(const Eigen::Matrix3d& rotation,
                                          const Eigen::Vector3d& translation) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = translation;
  return from_matrix(m);
}

std::array<double, 16> RigidTransform::to_row_major() const {
  std::array<double, 16> out{};
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) out[static_cast<std::size_t>(r * 4 + c)] = m_(r, c);
  }
  return out;
}

RigidTransform RigidTransform::inverse() const {
  Eigen::Matrix4d inv = Eigen::Matrix4d::Identity();
  const Eigen::Matrix3d rt = m_.topLeftCorner<3, 3>().transpose();
  inv.topLeftCorner<3, 3>() = rt;
  inv.topRightCorner<3, 1>() = -rt * m_.topRightCorner<3, 1>();
  return RigidTransform(inv);
}

namespace {

void check_intrinsics(const CameraIntrinsics& k) {
  const auto p = k.problems();
  if (!p.empty()) throw Error(ErrorCode::InvalidArgument, "intrinsics: " + p.front());
}

}  // namespace

PointCloudFrame depth_frame_to_points(const DepthImage& depth, const RgbImage& rgb,
                                      const CameraIntrinsics& intrinsics,
                                      const RigidTransform& cam_to_world, double lambda) {
  if (!(lambda > 0.0)) {
    throw Error(ErrorCode::InvalidThreshold, "depth threshold must be positive");
  }
  check_intrinsics(intrinsics);
  if (depth.height != intrinsics.height || depth.width != intrinsics.width ||
      rgb.height != intrinsics.height || rgb.width != intrinsics.width ||
      depth.meters.size() != std::size_t{depth.height} * depth.width ||
      rgb.data.size() != std::size_t{rgb.height} * rgb.width * 3) {
    throw Error(ErrorCode::DimensionMismatch,
                "depth, rgb and intrinsics must share one image size");
  }

  const Eigen::Matrix3d rot = cam_to_world.rotation();
  const Eigen::Vector3d trans = cam_to_world.translation();
  const double inv_fx = 1.0 / intrinsics.fx;
  const double inv_fy = 1.0 / intrinsics.fy;

  PointCloudFrame out;
  for (std::uint32_t v = 0; v < depth.height; ++v) {
    const double ray_y = (v - intrinsics.cy) * inv_fy;
    for (std::uint32_t u = 0; u < depth.width; ++u) {
      const std::size_t i = std::size_t{v} * depth.width + u;
      const double d = depth.meters[i];
      if (!(d > 0.0) || d > lambda) continue;
      const Eigen::Vector3d cam((u - intrinsics.cx) * inv_fx * d, ray_y * d, d);
      out.points.push_back({rot * cam + trans, {rgb.data[3 * i], rgb.data[3 * i + 1], rgb.data[3 * i + 2]}});
      out.source_pixels.push_back({v, u});
    }
  }
  return out;
}

Eigen::Vector3d project_to_pixel(const Eigen::Vector3d& world, const CameraIntrinsics& intrinsics,
                                 const RigidTransform& cam_to_world) {
  const Eigen::Vector3d cam = cam_to_world.inverse().apply(world);
  return {intrinsics.fx * cam.x() / cam.z() + intrinsics.cx,
          intrinsics.fy * cam.y() / cam.z() + intrinsics.cy, cam.z()};
}

PointCloudFrame transform_points(const PointCloudFrame& frame, const RigidTransform& transform) {
  PointCloudFrame out = frame;
  for (auto& p : out.points) p.position = transform.apply(p.position);
  return out;
}

std::vector<Voxel> voxelize(std::span<const Eigen::Vector3d> points, double voxel_size) {
  if (!(voxel_size > 0.0)) {
    throw Error(ErrorCode::InvalidVoxelSize, "voxel size must be positive");
  }
  std::vector<Voxel> out;
  out.reserve(points.size());
  for (const auto& p : points) {
    out.push_back({static_cast<std::int64_t>(std::floor(p.x() / voxel_size)),
                   static_cast<std::int64_t>(std::floor(p.y() / voxel_size)),
                   static_cast<std::int64_t>(std::floor(p.z() / voxel_size))});
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<Voxel> voxelize(const PointCloudFrame& frame, double voxel_size) {
  std::vector<Eigen::Vector3d> pts;
  pts.reserve(frame.size());
  for (const auto& p : frame.points) pts.push_back(p.position);
  return voxelize(pts, voxel_size);
}

namespace {

void finish_frame(TubeGeometry& g, FrameIndex frame, std::vector<Eigen::Vector3d> pts) {
  if (pts.empty()) return;
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  for (const auto& p : pts) sum += p;
  g.centroids.emplace(frame, sum / static_cast<double>(pts.size()));
  g.points.emplace(frame, std::move(pts));
}

}  // namespace

TubeGeometry tube_geometry(const EntityNode& entity,
                           const std::map<FrameIndex, DepthFrameView>& frames) {
  const auto* tube = std::get_if<MaskTube>(&entity.tube);
  if (tube == nullptr) {
    throw Error(ErrorCode::KindMismatch, "entity " + std::to_string(entity.entity_id) +
                                             " has a point tube; RGB-D frames need a mask tube");
  }
  TubeGeometry g;
  for (const auto& [frame, mask] : tube->frames) {
    const auto it = frames.find(frame);
    if (it == frames.end() || it->second.depth == nullptr) continue;
    const DepthFrameView& view = it->second;
    const DepthImage& depth = *view.depth;
    if (depth.height != mask.height() || depth.width != mask.width()) {
      throw Error(ErrorCode::DimensionMismatch, "mask and depth sizes differ at frame " +
                                                    std::to_string(frame));
    }
    const Eigen::Matrix3d rot = view.cam_to_world.rotation();
    const Eigen::Vector3d trans = view.cam_to_world.translation();
    const auto& k = view.intrinsics;
    std::vector<Eigen::Vector3d> pts;
    mask.for_each_span([&](std::uint64_t begin, std::uint64_t end) {
      for (std::uint64_t i = begin; i < end; ++i) {
        const double d = depth.meters[i];
        if (!(d > 0.0) || d > view.lambda) continue;
        const auto v = static_cast<double>(i / depth.width);
        const auto u = static_cast<double>(i % depth.width);
        const Eigen::Vector3d cam((u - k.cx) * d / k.fx, (v - k.cy) * d / k.fy, d);
        pts.push_back(rot * cam + trans);
      }
    });
    finish_frame(g, frame, std::move(pts));
  }
  return g;
}

TubeGeometry tube_geometry(const EntityNode& entity,
                           const std::map<FrameIndex, PointCloudFrame>& frames) {
  const auto* tube = std::get_if<PointTube>(&entity.tube);
  if (tube == nullptr) {
    throw Error(ErrorCode::KindMismatch, "entity " + std::to_string(entity.entity_id) +
                                             " has a mask tube; point frames need a point tube");
  }
  TubeGeometry g;
  for (const auto& [frame, indices] : tube->frames) {
    const auto it = frames.find(frame);
    if (it == frames.end()) continue;
    std::vector<Eigen::Vector3d> pts;
    pts.reserve(indices.size());
    for (const auto idx : indices) {
      if (idx < it->second.size()) pts.push_back(it->second.points[idx].position);
    }
    finish_frame(g, frame, std::move(pts));
  }
  return g;
}

std::map<FrameIndex, Eigen::Vector3d> tube_trajectory(
    const EntityNode& entity, const std::map<FrameIndex, DepthFrameView>& frames) {
  return tube_geometry(entity, frames).centroids;
}

std::map<FrameIndex, Eigen::Vector3d> tube_trajectory(
    const EntityNode& entity, const std::map<FrameIndex, PointCloudFrame>& frames) {
  return tube_geometry(entity, frames).centroids;
}

}  // namespace psg4d

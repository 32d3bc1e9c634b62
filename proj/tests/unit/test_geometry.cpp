#include <cmath>
#include <limits>
#include <set>

#include "doctest.h"
#include "oracles.hpp"
#include "psg4d/error.hpp"
#include "psg4d/geometry.hpp"

using namespace psg4d;

namespace {

CameraIntrinsics unit_camera(std::uint32_t w, std::uint32_t h) { return {1.0, 1.0, 0.0, 0.0, w, h}; }

DepthImage depth_of(std::uint32_t h, std::uint32_t w, std::vector<double> m) { return {h, w, std::move(m)}; }

RgbImage gray(std::uint32_t h, std::uint32_t w) { return {h, w, std::vector<std::uint8_t>(std::size_t{h} * w * 3, 128)}; }

RigidTransform random_pose(SplitMix64& rng) {
  const Eigen::Vector3d t(rng.between(-3.0, 3.0), rng.between(-3.0, 3.0), rng.between(-3.0, 3.0));
  return RigidTransform::from_parts(oracle::random_rotation(rng), t);
}

}  // namespace

TEST_CASE("pinhole back-projection of single pixels") {
  const auto f = depth_frame_to_points(depth_of(1, 1, {1.0}), gray(1, 1), unit_camera(1, 1), {}, 10.0);
  REQUIRE(f.size() == 1);
  CHECK(f.points[0].position.isApprox(Eigen::Vector3d(0, 0, 1)));

  auto d = depth_of(1, 3, {0.0, 0.0, 2.0});
  const auto g = depth_frame_to_points(d, gray(1, 3), unit_camera(3, 1), {}, 10.0);
  REQUIRE(g.size() == 1);
  CHECK(g.points[0].position.x() == 4.0);
  CHECK(g.points[0].position.y() == 0.0);
  CHECK(g.points[0].position.z() == 2.0);
  CHECK(g.source_pixels[0] == PixelCoord{0, 2});
  CHECK(g.points[0].rgb == std::array<std::uint8_t, 3>{128, 128, 128});
}

TEST_CASE("dense depth map against a straight-line projection") {
  SplitMix64 rng(99);
  const CameraIntrinsics k{500.0, 500.0, 2.0, 2.0, 4, 4};
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> m(16);
    for (auto& v : m) v = rng.between(0.5, 8.0);
    const RigidTransform pose = random_pose(rng);
    const auto cloud = depth_frame_to_points(depth_of(4, 4, m), gray(4, 4), k, pose, 20.0);
    REQUIRE(cloud.size() == 16);
    const Eigen::Matrix4d M = pose.matrix();
    for (int v = 0; v < 4; ++v) {
      for (int u = 0; u < 4; ++u) {
        const double d = m[static_cast<std::size_t>(v * 4 + u)];
        const double xc = (u - 2.0) * d / 500.0, yc = (v - 2.0) * d / 500.0, zc = d;
        const auto& p = cloud.points[static_cast<std::size_t>(v * 4 + u)].position;
        for (int r = 0; r < 3; ++r) {
          const double expect = M(r, 0) * xc + M(r, 1) * yc + M(r, 2) * zc + M(r, 3);
          CHECK(std::abs(p[r] - expect) < 1e-9);
        }
      }
    }
  }
}

TEST_CASE("the depth threshold filter commutes with projection") {
  SplitMix64 rng(4);
  const CameraIntrinsics k{40.0, 42.0, 7.5, 5.5, 16, 12};
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> m(16 * 12);
    for (auto& v : m) v = rng.chance(0.1) ? 0.0 : rng.between(0.1, 30.0);
    const double lambda = rng.between(1.0, 25.0);
    const auto all = depth_frame_to_points(depth_of(12, 16, m), gray(12, 16), k, {},
                                           std::numeric_limits<double>::infinity());
    const auto cut = depth_frame_to_points(depth_of(12, 16, m), gray(12, 16), k, {}, lambda);
    std::vector<Eigen::Vector3d> filtered;
    for (const auto& p : all.points)
      if (p.position.z() <= lambda) filtered.push_back(p.position);
    REQUIRE(filtered.size() == cut.size());
    for (std::size_t i = 0; i < filtered.size(); ++i) CHECK(filtered[i] == cut.points[i].position);
    CHECK(cut.size() <= m.size());
    const bool all_valid = std::all_of(m.begin(), m.end(), [&](double d) { return d > 0.0 && d <= lambda; });
    CHECK((cut.size() == m.size()) == all_valid);
  }
}

TEST_CASE("back-projection errors") {
  auto check_code = [](auto&& fn, ErrorCode code) {
    try {
      fn();
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == code);
    }
  };
  check_code([] { depth_frame_to_points(depth_of(1, 1, {1.0}), gray(1, 1), unit_camera(1, 1), {}, 0.0); },
             ErrorCode::InvalidThreshold);
  check_code([] { depth_frame_to_points(depth_of(1, 2, {1.0, 1.0}), gray(1, 1), unit_camera(2, 1), {}, 1.0); },
             ErrorCode::DimensionMismatch);
}

TEST_CASE("rigid transforms invert and reject non-rigid matrices") {
  SplitMix64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const RigidTransform t = random_pose(rng);
    PointCloudFrame f;
    for (int i = 0; i < 20; ++i) {
      f.points.push_back({Eigen::Vector3d(rng.between(-5.0, 5.0), rng.between(-5.0, 5.0), rng.between(-5.0, 5.0)), {}});
    }
    const auto back = transform_points(transform_points(f, t), t.inverse());
    for (std::size_t i = 0; i < f.size(); ++i) CHECK((back.points[i].position - f.points[i].position).norm() < 1e-9);
    const auto rm = t.to_row_major();
    CHECK(RigidTransform::from_row_major(rm) == t);
  }
  std::array<double, 16> scaled{2, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};
  CHECK_THROWS_AS(RigidTransform::from_row_major(scaled), Error);
  std::array<double, 16> bad_row{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 1, 1};
  CHECK_THROWS_AS(RigidTransform::from_row_major(bad_row), Error);
  CHECK(RigidTransform{}.is_identity());
}

TEST_CASE("voxelization") {
  std::vector<Eigen::Vector3d> pts{{0.1, 0.1, 0.1}, {0.2, 0.2, 0.2}};
  CHECK(voxelize(pts, 1.0) == std::vector<Voxel>{{0, 0, 0}});
  CHECK(voxelize(std::vector<Eigen::Vector3d>{}, 1.0).empty());
  CHECK(voxelize(std::vector<Eigen::Vector3d>{{-0.1, 0.0, 1.0}}, 0.5) == std::vector<Voxel>{{-1, 0, 2}});
  CHECK_THROWS_AS(voxelize(pts, 0.0), Error);

  SplitMix64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Eigen::Vector3d> cloud;
    for (int i = 0; i < 100; ++i) {
      cloud.emplace_back(rng.between(-2.0, 2.0), rng.between(-2.0, 2.0), rng.between(-2.0, 2.0));
    }
    std::set<Voxel> expect;
    for (const auto& p : cloud) {
      Voxel v{};
      for (int a = 0; a < 3; ++a) {
        double q = p[a] / 0.25;
        auto i = static_cast<std::int64_t>(q);
        if (static_cast<double>(i) > q) --i;
        v[static_cast<std::size_t>(a)] = i;
      }
      expect.insert(v);
    }
    const auto got = voxelize(cloud, 0.25);
    CHECK(got == std::vector<Voxel>(expect.begin(), expect.end()));
    for (std::size_t i = cloud.size(); i > 1; --i) std::swap(cloud[i - 1], cloud[rng.below(i)]);
    CHECK(voxelize(cloud, 0.25) == got);
  }
}

TEST_CASE("tube centroids") {
  DepthImage d = depth_of(3, 3, std::vector<double>(9, 2.0));
  MaskTube tube{7, 3, 3, {}};
  std::vector<std::uint8_t> m(9, 0);
  m[4] = 1;
  tube.frames.emplace(0, RleMask::encode(m, 3, 3));
  const EntityNode e{7, 0, 1.0, tube, std::nullopt};
  const std::map<FrameIndex, DepthFrameView> views{{0, {&d, {1.0, 1.0, 1.0, 1.0, 3, 3}, {}}}};
  const auto traj = tube_trajectory(e, views);
  REQUIRE(traj.size() == 1);
  CHECK(traj.at(0).isApprox(Eigen::Vector3d(0, 0, 2)));

  PointCloudFrame pc;
  pc.points = {{{1, 0, 0}, {}}, {{9, 9, 9}, {}}, {{3, 0, 0}, {}}};
  const EntityNode p{1, 0, 1.0, PointTube{1, {{5, {0, 2}}}}, std::nullopt};
  const std::map<FrameIndex, PointCloudFrame> clouds{{5, pc}};
  const auto geo = tube_geometry(p, clouds);
  CHECK(geo.centroids.at(5).isApprox(Eigen::Vector3d(2, 0, 0)));
  CHECK(geo.points.at(5).size() == 2);
  CHECK_THROWS_AS(tube_geometry(e, clouds), Error);
}

TEST_CASE("projection inverts back-projection") {
  SplitMix64 rng(21);
  const CameraIntrinsics k{120.0, 110.0, 31.5, 23.5, 64, 48};
  const RigidTransform pose = random_pose(rng);
  std::vector<double> m(64 * 48);
  for (auto& v : m) v = rng.between(0.2, 9.0);
  const auto cloud = depth_frame_to_points(depth_of(48, 64, m), gray(48, 64), k, pose, 20.0);
  for (std::size_t i = 0; i < cloud.size(); i += 37) {
    const Eigen::Vector3d uvz = project_to_pixel(cloud.points[i].position, k, pose);
    CHECK(std::abs(uvz.x() - cloud.source_pixels[i].col) < 1e-6);
    CHECK(std::abs(uvz.y() - cloud.source_pixels[i].row) < 1e-6);
    CHECK(std::abs(uvz.z() - m[i]) < 1e-6);
  }
}

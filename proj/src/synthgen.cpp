#include "psg4d/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include "psg4d/error.hpp"

namespace psg4d {

Eigen::Vector3d ObjectScript::position_at(FrameIndex frame) const {
  if (waypoints.empty()) return Eigen::Vector3d::Zero();
  if (frame <= waypoints.front().frame) return waypoints.front().position;
  if (frame >= waypoints.back().frame) return waypoints.back().position;
  const auto next = std::upper_bound(waypoints.begin(), waypoints.end(), frame,
                                     [](FrameIndex f, const Waypoint& w) { return f < w.frame; });
  const auto prev = next - 1;
  const double alpha = static_cast<double>(frame - prev->frame) / static_cast<double>(next->frame - prev->frame);
  return prev->position + alpha * (next->position - prev->position);
}

std::vector<std::string> SceneRecipe::problems() const {
  std::vector<std::string> out;
  if (frame_count < 1) out.emplace_back("frame_count must be >= 1");
  if (objects.empty()) out.emplace_back("recipe needs at least one object");
  if (!(fps > 0.0)) out.emplace_back("fps must be positive");
  if (!(depth_scale > 0.0)) out.emplace_back("depth_scale must be positive");
  for (const auto& p : intrinsics.problems()) out.push_back("intrinsics: " + p);
  for (const auto& p : vocabulary.problems()) out.push_back("vocabulary: " + p);
  for (const auto& p : rulebook.problems(vocabulary)) out.push_back("rulebook: " + p);
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const auto& o = objects[i];
    const std::string where = "object " + std::to_string(i) + ": ";
    if (!vocabulary.has_object(o.category_id)) out.push_back(where + "unknown category");
    if (!(o.size.minCoeff() > 0.0)) out.push_back(where + "box size must be positive");
    if (o.waypoints.empty()) out.push_back(where + "needs at least one waypoint");
    for (std::size_t w = 1; w < o.waypoints.size(); ++w) {
      if (o.waypoints[w].frame <= o.waypoints[w - 1].frame) {
        out.push_back(where + "waypoint frames must increase");
        break;
      }
    }
  }
  return out;
}

namespace {

struct Box {
  Eigen::Vector3d lo;
  Eigen::Vector3d hi;
};

Box box_at(const ObjectScript& o, FrameIndex frame) {
  const Eigen::Vector3d c = o.position_at(frame);
  return {c - o.size / 2.0, c + o.size / 2.0};
}

std::array<Eigen::Vector3d, 8> corners(const Box& b) {
  std::array<Eigen::Vector3d, 8> out;
  for (int k = 0; k < 8; ++k) {
    out[static_cast<std::size_t>(k)] = {(k & 1) ? b.hi.x() : b.lo.x(), (k & 2) ? b.hi.y() : b.lo.y(),
                                        (k & 4) ? b.hi.z() : b.lo.z()};
  }
  return out;
}

void check_frustum(const SceneRecipe& recipe) {
  const RigidTransform world_to_cam = recipe.cam_to_world.inverse();
  const auto& k = recipe.intrinsics;
  const double max_depth = 65535.0 / recipe.depth_scale;
  for (std::size_t i = 0; i < recipe.objects.size(); ++i) {
    for (const auto& w : recipe.objects[i].waypoints) {
      const Box b = box_at(recipe.objects[i], w.frame);
      for (const auto& c : corners(b)) {
        const Eigen::Vector3d cam = world_to_cam.apply(c);
        const double u = k.fx * cam.x() / cam.z() + k.cx;
        const double v = k.fy * cam.y() / cam.z() + k.cy;
        if (!(cam.z() > 1e-3) || cam.z() >= max_depth || u < 0.0 || u > k.width - 1.0 || v < 0.0 ||
            v > k.height - 1.0) {
          throw Error(ErrorCode::FrustumViolation,
                      "object " + std::to_string(i) + " leaves the view at frame " + std::to_string(w.frame));
        }
      }
    }
  }
}

// Entry distance along the ray, or +inf when the ray misses.
double ray_box(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir, const Box& b) {
  double t0 = 0.0;
  double t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (dir[a] == 0.0) {
      if (origin[a] < b.lo[a] || origin[a] > b.hi[a]) return std::numeric_limits<double>::infinity();
      continue;
    }
    double ta = (b.lo[a] - origin[a]) / dir[a];
    double tb = (b.hi[a] - origin[a]) / dir[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return std::numeric_limits<double>::infinity();
  }
  return t0;
}

}  // namespace

std::map<EntityId, TubeGeometry> scripted_geometry(const SceneRecipe& recipe) {
  double spacing = 0.0;
  for (const auto& r : recipe.rulebook.rules) {
    if (r.kind == RuleKind::Contact) {
      spacing = spacing == 0.0 ? r.threshold / 2.0 : std::min(spacing, r.threshold / 2.0);
    }
  }
  std::map<EntityId, TubeGeometry> out;
  for (std::size_t i = 0; i < recipe.objects.size(); ++i) {
    const auto& o = recipe.objects[i];
    TubeGeometry& g = out[static_cast<EntityId>(i)];
    for (FrameIndex f = 0; f < recipe.frame_count; ++f) {
      g.centroids.emplace(f, o.position_at(f));
      if (spacing == 0.0) continue;
      const Box b = box_at(o, f);
      std::array<std::vector<double>, 3> axis;
      for (int a = 0; a < 3; ++a) {
        const double extent = b.hi[a] - b.lo[a];
        const auto steps = static_cast<int>(std::ceil(extent / spacing));
        for (int s = 0; s <= steps; ++s) {
          axis[static_cast<std::size_t>(a)].push_back(s == steps ? b.hi[a] : b.lo[a] + s * extent / steps);
        }
      }
      auto& pts = g.points[f];
      for (const double x : axis[0]) {
        for (const double y : axis[1]) {
          for (const double z : axis[2]) pts.emplace_back(x, y, z);
        }
      }
    }
  }
  return out;
}

GeneratedScene generate_scene(const SceneRecipe& recipe) {
  const auto problems = recipe.problems();
  if (!problems.empty()) throw Error(ErrorCode::InvalidArgument, "recipe: " + problems.front());
  check_frustum(recipe);

  const auto& k = recipe.intrinsics;
  const std::uint32_t width = k.width;
  const std::uint32_t height = k.height;
  const std::size_t pixels = std::size_t{width} * height;
  const std::size_t n_obj = recipe.objects.size();
  const Eigen::Matrix3d rot = recipe.cam_to_world.rotation();
  const Eigen::Vector3d origin = recipe.cam_to_world.translation();
  const RigidTransform world_to_cam = recipe.cam_to_world.inverse();

  GeneratedScene scene;
  scene.gt.video_id = recipe.video_id;
  scene.gt.vocabulary_ref = recipe.vocabulary.checksum();
  std::vector<MaskTube> tubes(n_obj);
  for (std::size_t i = 0; i < n_obj; ++i) tubes[i] = {static_cast<EntityId>(i), height, width, {}};

  std::vector<double> zbuf(pixels);
  std::vector<int> owner(pixels);
  std::vector<std::uint8_t> bitmap(pixels);
  for (FrameIndex f = 0; f < recipe.frame_count; ++f) {
    std::fill(zbuf.begin(), zbuf.end(), std::numeric_limits<double>::infinity());
    std::fill(owner.begin(), owner.end(), -1);
    for (std::size_t i = 0; i < n_obj; ++i) {
      const Box b = box_at(recipe.objects[i], f);
      // Pixel window covering the projected box.
      double umin = k.width, umax = -1.0, vmin = k.height, vmax = -1.0;
      for (const auto& c : corners(b)) {
        const Eigen::Vector3d cam = world_to_cam.apply(c);
        const double u = k.fx * cam.x() / cam.z() + k.cx;
        const double v = k.fy * cam.y() / cam.z() + k.cy;
        umin = std::min(umin, u);
        umax = std::max(umax, u);
        vmin = std::min(vmin, v);
        vmax = std::max(vmax, v);
      }
      const auto u0 = static_cast<std::uint32_t>(std::max(0.0, std::floor(umin)));
      const auto u1 = static_cast<std::uint32_t>(std::min<double>(width - 1, std::ceil(umax)));
      const auto v0 = static_cast<std::uint32_t>(std::max(0.0, std::floor(vmin)));
      const auto v1 = static_cast<std::uint32_t>(std::min<double>(height - 1, std::ceil(vmax)));
      for (std::uint32_t v = v0; v <= v1; ++v) {
        for (std::uint32_t u = u0; u <= u1; ++u) {
          const Eigen::Vector3d dir = rot * Eigen::Vector3d((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
          const double t = ray_box(origin, dir, b);
          const std::size_t p = std::size_t{v} * width + u;
          if (t < zbuf[p]) {
            zbuf[p] = t;
            owner[p] = static_cast<int>(i);
          }
        }
      }
    }

    RenderedFrame frame;
    frame.raw_depth.assign(pixels, 0);
    frame.depth = {height, width, std::vector<double>(pixels, 0.0)};
    frame.rgb = {height, width, std::vector<std::uint8_t>(pixels * 3)};
    for (std::size_t p = 0; p < pixels; ++p) {
      const auto& color = owner[p] >= 0 ? recipe.objects[static_cast<std::size_t>(owner[p])].color
                                        : kBackgroundColor;
      std::copy(color.begin(), color.end(), frame.rgb.data.begin() + static_cast<std::ptrdiff_t>(3 * p));
      if (owner[p] < 0) continue;
      // Ray parameter equals camera-space depth because the camera ray has z = 1.
      const double raw = std::round(zbuf[p] * recipe.depth_scale);
      frame.raw_depth[p] = static_cast<std::uint16_t>(std::clamp(raw, 1.0, 65535.0));
      frame.depth.meters[p] = frame.raw_depth[p] / recipe.depth_scale;
    }
    for (std::size_t i = 0; i < n_obj; ++i) {
      bool any = false;
      for (std::size_t p = 0; p < pixels; ++p) {
        bitmap[p] = owner[p] == static_cast<int>(i) ? 1 : 0;
        any = any || bitmap[p];
      }
      if (any) tubes[i].frames.emplace(f, RleMask::encode(bitmap, height, width));
    }
    scene.frames.push_back(std::move(frame));
  }

  for (std::size_t i = 0; i < n_obj; ++i) {
    if (tubes[i].frames.empty()) {
      throw Error(ErrorCode::FrustumViolation, "object " + std::to_string(i) + " is never visible");
    }
    EntityNode e;
    e.entity_id = static_cast<EntityId>(i);
    e.category_id = recipe.objects[i].category_id;
    e.score = 1.0;
    e.tube = std::move(tubes[i]);
    scene.gt.entities.push_back(std::move(e));
  }

  const auto geometry = scripted_geometry(recipe);
  for (const auto& [id, g] : geometry) scene.trajectories.emplace(id, g.centroids);
  auto triplets = score_pairs_geometric(scene.gt.entities, geometry, recipe.rulebook);
  for (auto& t : triplets) t.confidence = 1.0;
  std::sort(triplets.begin(), triplets.end(), [](const RelationTriplet& a, const RelationTriplet& b) {
    return std::tie(a.subject_id, a.object_id, a.predicate_id, a.interval) <
           std::tie(b.subject_id, b.object_id, b.predicate_id, b.interval);
  });
  scene.gt.triplets = std::move(triplets);
  return scene;
}

Vocabulary default_vocabulary() {
  Vocabulary v;
  const char* objects[] = {"person", "cup", "table", "chair", "bottle", "laptop", "wall"};
  for (std::size_t i = 0; i < std::size(objects); ++i) {
    v.object_classes.push_back({static_cast<ClassId>(i), objects[i], std::string(objects[i]) != "wall"});
  }
  const char* predicates[] = {"near", "above", "touching"};
  for (std::size_t i = 0; i < std::size(predicates); ++i) {
    v.predicate_classes.push_back({static_cast<ClassId>(i), predicates[i]});
  }
  return v;
}

Rulebook default_rulebook() {
  return Rulebook{{
      {0, RuleKind::Near, 1.0, 3},
      {1, RuleKind::Above, 0.3, 3},
      {2, RuleKind::Contact, 0.1, 2},
  }};
}

RigidTransform default_camera_pose() {
  Eigen::Matrix3d r;
  r << 1, 0, 0,
       0, 0, 1,
       0, -1, 0;
  return RigidTransform::from_parts(r, Eigen::Vector3d::Zero());
}

SceneRecipe random_recipe(const RandomSceneSpec& spec, std::uint64_t seed, const std::string& video_id,
                          const Vocabulary& vocabulary, const Rulebook& rulebook) {
  if (spec.min_objects < 1 || spec.max_objects < spec.min_objects || spec.frame_count < 1 ||
      spec.max_waypoints < 1) {
    throw Error(ErrorCode::InvalidArgument, "random scene spec is inconsistent");
  }
  SplitMix64 root(seed);
  for (std::uint64_t attempt = 0; attempt < 64; ++attempt) {
    SplitMix64 rng = root.split(attempt);
    SceneRecipe r;
    r.video_id = video_id;
    r.seed = seed;
    r.frame_count = spec.frame_count;
    r.intrinsics = {spec.focal, spec.focal, spec.width / 2.0, spec.height / 2.0, spec.width, spec.height};
    r.cam_to_world = default_camera_pose();
    r.vocabulary = vocabulary;
    r.rulebook = rulebook;

    const auto n = static_cast<std::size_t>(
        rng.between(static_cast<std::int64_t>(spec.min_objects), static_cast<std::int64_t>(spec.max_objects)));
    for (std::size_t i = 0; i < n; ++i) {
      ObjectScript o;
      o.category_id = static_cast<ClassId>(rng.below(vocabulary.object_classes.size()));
      o.size = {rng.between(0.3, 0.6), 0.05, rng.between(0.3, 0.6)};
      o.color = {static_cast<std::uint8_t>(64 + rng.below(192)), static_cast<std::uint8_t>(64 + rng.below(192)),
                 static_cast<std::uint8_t>(64 + rng.below(192))};
      const auto n_way = static_cast<std::size_t>(rng.between(1, static_cast<std::int64_t>(spec.max_waypoints)));
      std::vector<FrameIndex> frames{0};
      if (n_way >= 2 && spec.frame_count > 1) {
        for (std::size_t w = 2; w < n_way; ++w) frames.push_back(rng.between(1, spec.frame_count - 1));
        frames.push_back(spec.frame_count - 1);
        std::sort(frames.begin(), frames.end());
        frames.erase(std::unique(frames.begin(), frames.end()), frames.end());
      }
      for (const auto f : frames) {
        const double depth = rng.between(3.0, 5.0);
        const double half_w = (spec.width / 2.0) / spec.focal * depth;
        const double half_h = (spec.height / 2.0) / spec.focal * depth;
        const double x = rng.between(-0.8, 0.8) * (half_w - o.size.x());
        const double z = rng.between(-0.8, 0.8) * (half_h - o.size.z());
        o.waypoints.push_back({f, {x, depth, z}});
      }
      r.objects.push_back(std::move(o));
    }
    try {
      generate_scene(r);
      return r;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::FrustumViolation) throw;
    }
  }
  throw Error(ErrorCode::FrustumViolation, "could not place a visible random scene");
}

}  // namespace psg4d

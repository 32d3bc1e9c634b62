#include <fstream>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "psg4d/error.hpp"
#include "psg4d/io.hpp"

using namespace psg4d;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("psg4d_io_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = slurp(e.path());
  }
  return out;
}

Dataset synthetic_dataset(std::size_t videos, const fs::path& root) {
  Dataset ds;
  ds.vocabulary = default_vocabulary();
  ds.metadata = {{"seed", "5"}};
  for (std::size_t i = 0; i < videos; ++i) {
    const auto recipe = random_recipe({}, 500 + i, "vid" + std::to_string(i));
    const auto scene = generate_scene(recipe);
    VideoRecord rec;
    rec.manifest.video_id = recipe.video_id;
    rec.manifest.frame_count = recipe.frame_count;
    rec.manifest.intrinsics = recipe.intrinsics;
    rec.manifest.extrinsics.assign(static_cast<std::size_t>(recipe.frame_count), recipe.cam_to_world);
    rec.manifest.vocabulary_ref = ds.vocabulary.checksum();
    rec.graph = scene.gt;
    const fs::path dir = video_dir(root, recipe.video_id);
    for (std::size_t f = 0; f < scene.frames.size(); ++f) {
      write_depth_png(depth_frame_path(dir, static_cast<FrameIndex>(f)), scene.frames[f].depth.height,
                      scene.frames[f].depth.width, scene.frames[f].raw_depth);
    }
    ds.videos.push_back(std::move(rec));
  }
  return ds;
}

}  // namespace

TEST_CASE("synthetic datasets round-trip without violations and byte-identically") {
  TempDir a("a"), b("b");
  const Dataset ds = synthetic_dataset(10, a.path);
  write_dataset(a.path, ds);
  const auto read = read_dataset(a.path);
  CHECK(read.violations.empty());
  REQUIRE(read.dataset.videos.size() == 10);
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(read.dataset.videos[i].graph == ds.videos[i].graph);
    CHECK(read.dataset.videos[i].manifest.extrinsics == ds.videos[i].manifest.extrinsics);
  }
  CHECK(read.dataset.vocabulary == ds.vocabulary);
  CHECK(read.dataset.metadata == ds.metadata);

  write_dataset(b.path, read.dataset);
  auto ta = tree(a.path), tb = tree(b.path);
  std::erase_if(ta, [](const auto& kv) { return kv.first.find("frames") != std::string::npos; });
  CHECK(ta == tb);
}

TEST_CASE("reader failures carry their error codes") {
  TempDir t("errors");
  auto expect_code = [](auto&& fn, ErrorCode code) {
    try {
      fn();
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == code);
    }
  };
  expect_code([&] { read_dataset(t.path); }, ErrorCode::MissingFile);

  Dataset ds = synthetic_dataset(1, t.path);
  write_dataset(t.path, ds);
  std::string manifest = slurp(t.path / "manifest.json");
  const auto pos = manifest.find("\"touching\"");
  REQUIRE(pos != std::string::npos);
  std::ofstream(t.path / "manifest.json") << std::string(manifest).replace(pos, 10, "\"near\"");
  expect_code([&] { read_dataset(t.path); }, ErrorCode::SchemaViolation);

  write_dataset(t.path, ds);
  manifest = slurp(t.path / "manifest.json");
  const auto sum = manifest.find("vocabulary_checksum");
  std::ofstream(t.path / "manifest.json") << std::string(manifest).replace(sum + 23, 4, "abcd");
  expect_code([&] { read_dataset(t.path); }, ErrorCode::ChecksumMismatch);

  write_dataset(t.path, ds);
  std::ofstream(video_dir(t.path, "vid0") / "relations.json") << "{\"relations\": [{\"subject\": 0}]}";
  expect_code([&] { read_dataset(t.path); }, ErrorCode::SchemaViolation);

  write_dataset(t.path, ds);
  fs::remove(depth_frame_path(video_dir(t.path, "vid0"), 0));
  expect_code([&] { read_dataset(t.path); }, ErrorCode::MissingFile);
}

TEST_CASE("violations in ground truth are reported with the file") {
  TempDir t("violations");
  Dataset ds = synthetic_dataset(1, t.path);
  ds.videos[0].graph.triplets.push_back({0, 0, 0, {0, 1}, 1.0});
  write_dataset(t.path, ds);
  const auto r = read_dataset(t.path);
  REQUIRE(r.violations.size() == 1);
  CHECK(r.violations[0].violation.code == ViolationCode::SelfRelation);
  CHECK(r.violations[0].file.find("vid0") != std::string::npos);
}

TEST_CASE("serialization is canonical") {
  const auto g = fixture::graph("v", {fixture::box_entity(3, 0, 0, 2, 0, 0, 2, 2), fixture::box_entity(1, 1, 0, 2, 4, 4, 6, 6)},
                                {{3, 1, 0, {0, 2}, 0.25}});
  auto shuffled = g;
  std::swap(shuffled.entities[0], shuffled.entities[1]);
  CHECK(graph_to_json(g) == graph_to_json(shuffled));
}

TEST_CASE("prediction files keep confidences") {
  TempDir t("pred");
  auto g = fixture::graph("v", {fixture::box_entity(0, 0, 0, 2, 0, 0, 2, 2), fixture::box_entity(1, 1, 0, 2, 4, 4, 6, 6)},
                          {{0, 1, 0, {0, 2}, 0.1 + 0.2}});
  g.entities[0].score = 0.7;
  g.entities[1].embeddings = EmbeddingTube{{0, {0.5, -1.25}}, {1, {1e-300, 3.0}}};
  write_predictions(t.path / "p.json", g.vocabulary_ref, {g});
  const auto back = read_predictions(t.path / "p.json");
  REQUIRE(back.size() == 1);
  CHECK(back[0] == g);
  CHECK_THROWS_AS(write_predictions(t.path / "q.json", g.vocabulary_ref, {g, g}), Error);

  std::ofstream(t.path / "bad.json") << R"({"format": "psg4d-predictions", "version": 1, "vocabulary_ref": "x",
    "videos": {"v": {"kind": "mask", "height": 2, "width": 2, "entities": {},
    "relations": [{"subject": 0, "object": 1, "predicate": 0, "start": 0, "end": 1}]}}})";
  CHECK_THROWS_AS(read_predictions(t.path / "bad.json"), Error);
}

TEST_CASE("PNG and point frames round-trip") {
  TempDir t("frames");
  std::vector<std::uint16_t> raw{0, 1, 255, 256, 65535, 4242};
  write_depth_png(t.path / "d.png", 2, 3, raw);
  std::uint32_t h = 0, w = 0;
  CHECK(read_depth_png(t.path / "d.png", h, w) == raw);
  CHECK(h == 2);
  CHECK(w == 3);

  RgbImage img{1, 2, {1, 2, 3, 250, 251, 252}};
  write_rgb_png(t.path / "c.png", img);
  const auto back = read_rgb_png(t.path / "c.png");
  CHECK(back.data == img.data);

  PointCloudFrame pc;
  pc.points = {{{1.5, -2.0, 3.25}, {1, 2, 3}}, {{0, 0, 0}, {255, 0, 128}}};
  write_point_frame(t.path / "p.pts", pc);
  CHECK(fs::file_size(t.path / "p.pts") == 4 + 2 * 24);
  const auto pb = read_point_frame(t.path / "p.pts");
  REQUIRE(pb.size() == 2);
  CHECK(pb.points[0].position == pc.points[0].position);
  CHECK(pb.points[1].rgb == pc.points[1].rgb);

  std::ofstream(t.path / "junk.png") << "not a png";
  CHECK_THROWS_AS(read_depth_png(t.path / "junk.png", h, w), Error);
}

TEST_CASE("rulebooks, segments and recipes") {
  TempDir t("docs");
  write_rulebook(t.path / "r.json", default_rulebook());
  CHECK(read_rulebook(t.path / "r.json") == default_rulebook());

  std::vector<FrameSegment> segs{{0, fixture::rect(4, 4, 0, 0, 2, 2), 1, 0.5, {1.0, 0.0}},
                                 {1, fixture::rect(4, 4, 1, 1, 3, 3), 1, 0.75, {0.0, 1.0}}};
  write_segments(t.path / "s.json", segs);
  const auto back = read_segments(t.path / "s.json");
  REQUIRE(back.size() == 2);
  CHECK(std::get<RleMask>(back[1].mask) == std::get<RleMask>(segs[1].mask));
  CHECK(back[1].embedding == segs[1].embedding);

  std::ofstream(t.path / "recipe.json") << R"({"random": {"count": 2, "frame_count": 12},
    "noise": {"interval_jitter": 2, "confidence_mode": "uniform-random"}, "ks": [5]})";
  const auto rf = read_recipe_file(t.path / "recipe.json");
  CHECK(rf.random_scene_count == 2);
  CHECK(rf.random_spec.frame_count == 12);
  REQUIRE(rf.noise.has_value());
  CHECK(rf.noise->confidence_mode == ConfidenceMode::UniformRandom);
  CHECK(rf.ks == std::vector<std::size_t>{5});

  std::ofstream(t.path / "empty.json") << "{}";
  CHECK_THROWS_AS(read_recipe_file(t.path / "empty.json"), Error);
}

#include <array>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <sys/wait.h>

#include "doctest.h"
#include "json.hpp"
#include "psg4d/io.hpp"

using namespace psg4d;
using json = nlohmann::json;

namespace {

const std::string kCli = PSG4D_CLI_PATH;

struct Result {
  int code = -1;
  std::string out;
};

Result run(const std::string& args) {
  Result r;
  const std::string cmd = kCli + " " + args + " 2>/dev/null";
  std::unique_ptr<FILE, int (*)(FILE*)> pipe(popen(cmd.c_str(), "r"), pclose);
  REQUIRE(pipe);
  std::array<char, 4096> buf{};
  while (const auto n = std::fread(buf.data(), 1, buf.size(), pipe.get())) r.out.append(buf.data(), n);
  const int status = pclose(pipe.release());
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

struct Workspace {
  fs::path root = fs::temp_directory_path() / "psg4d_cli_test";
  Workspace() {
    fs::remove_all(root);
    fs::create_directories(root);
    std::ofstream(root / "recipe.json") << R"({"random": {"count": 2, "frame_count": 15},
      "noise": {"interval_jitter": 2}, "ks": [10, 20]})";
    REQUIRE(run("generate --recipe " + (root / "recipe.json").string() + " --seed 3 --out " + (root / "data").string()).code == 0);
  }
  ~Workspace() { fs::remove_all(root); }
  std::string data() const { return (root / "data").string(); }
};

}  // namespace

TEST_CASE("help lists every subcommand and default") {
  const auto top = run("--help");
  CHECK(top.code == 0);
  for (const char* sub : {"evaluate", "convert", "track", "baseline", "generate", "narrate", "validate", "PSG4D_JOBS"}) {
    CHECK(top.out.find(sub) != std::string::npos);
  }
  CHECK(run("evaluate --help").out.find("[0.5]") != std::string::npos);
  CHECK(run("convert --help").out.find("[20]") != std::string::npos);
  CHECK(run("narrate --help").out.find("[30]") != std::string::npos);
}

TEST_CASE("generate, validate and evaluate") {
  Workspace ws;
  CHECK(run("validate --root " + ws.data()).code == 0);
  const auto ev = run("evaluate --gt " + ws.data() + " --pred " + ws.data() + "/predictions.json --k 10,20");
  REQUIRE(ev.code == 0);
  const json report = json::parse(ev.out);
  const json oracle = json::parse(std::ifstream(ws.root / "data" / "oracle.json"));
  for (const auto& [video, by_k] : oracle["per_video"].items()) {
    for (const auto& [k, o] : by_k.items()) {
      const auto& got = report["per_video"][video]["per_k"][k]["recall"];
      if (o["recall"].is_null()) {
        CHECK(got.is_null());
      } else {
        CHECK(got.get<double>() == doctest::Approx(o["recall"].get<double>()).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("validation problems exit with status 2 and a report") {
  Workspace ws;
  const fs::path rel = ws.root / "data" / "videos" / "random_0000" / "relations.json";
  std::ofstream(rel) << R"({"relations": [{"subject": 0, "object": 0, "predicate": 0, "start": 0, "end": 1}]})";
  const auto v = run("validate --root " + ws.data());
  CHECK(v.code == 2);
  const json j = json::parse(v.out);
  CHECK(j["status"] == "violations");
  CHECK(j["violations"][0]["code"] == "SelfRelation");

  std::ofstream(rel) << "{ broken";
  const auto broken = run("validate --root " + ws.data());
  CHECK(broken.code == 2);
  CHECK(json::parse(broken.out)["violations"][0]["code"] == "SchemaViolation");

  CHECK(run("validate --root " + (ws.root / "nowhere").string()).code == 2);
  CHECK(run("generate --recipe " + (ws.root / "missing.json").string() + " --out " + (ws.root / "x").string()).code == 1);
}

TEST_CASE("evaluate flags predictions for unknown videos") {
  Workspace ws;
  std::ifstream in(ws.root / "data" / "predictions.json");
  json doc = json::parse(in);
  doc["videos"]["ghost"] = doc["videos"]["random_0000"];
  std::ofstream(ws.root / "pred.json") << doc.dump();
  const auto ev = run("evaluate --gt " + ws.data() + " --pred " + (ws.root / "pred.json").string());
  CHECK(ev.code == 2);
  CHECK(json::parse(ev.out)["violations"][0]["code"] == "UnknownVideo");
}

TEST_CASE("convert, baseline and narrate on a generated video") {
  Workspace ws;
  const std::string video = ws.data() + "/videos/random_0001";
  const fs::path pc = ws.root / "pc" / "videos" / "random_0001";
  REQUIRE(run("convert --video " + video + " --out " + pc.string()).code == 0);
  const auto manifest = read_video_manifest(pc);
  CHECK(manifest.modality == Modality::PointCloud);
  const auto rgbd_graph = read_video_graph(video, "random_0001", manifest.vocabulary_ref);
  const auto pc_graph = read_video_graph(pc, "random_0001", manifest.vocabulary_ref);
  REQUIRE(pc_graph.entities.size() == rgbd_graph.entities.size());
  for (std::size_t i = 0; i < pc_graph.entities.size(); ++i) {
    const auto& m = std::get<MaskTube>(rgbd_graph.entities[i].tube);
    const auto& p = std::get<PointTube>(pc_graph.entities[i].tube);
    REQUIRE(m.frames.size() == p.frames.size());
    for (const auto& [f, mask] : m.frames) CHECK(p.frames.at(f).size() == mask.area());
  }
  CHECK(pc_graph.triplets == rgbd_graph.triplets);

  write_rulebook(ws.root / "rules.json", default_rulebook());
  const std::string rules = (ws.root / "rules.json").string();
  REQUIRE(run("baseline --video " + video + " --rulebook " + rules + " --out " + (ws.root / "b1.json").string()).code == 0);
  REQUIRE(run("baseline --video " + pc.string() + " --rulebook " + rules + " --out " + (ws.root / "b2.json").string()).code == 0);
  const auto b1 = read_predictions(ws.root / "b1.json"), b2 = read_predictions(ws.root / "b2.json");
  REQUIRE(b1.size() == 1);
  REQUIRE(b2.size() == 1);
  CHECK(b1[0].triplets.size() == b2[0].triplets.size());

  const auto n = run("narrate --graph " + video + " --window 0.25 --fps 30");
  CHECK(n.code == 0);
  CHECK(n.out.rfind("In the past 0.25s, what I captured is: ", 0) == 0);
  CHECK(std::count(n.out.begin(), n.out.end(), '\n') == 2);
}

TEST_CASE("track links a segments file") {
  Workspace ws;
  std::vector<FrameSegment> segs;
  for (FrameIndex f = 0; f < 4; ++f) {
    segs.push_back({f, std::vector<std::uint32_t>{1, 2}, 0, 0.9, {1.0, 0.05 * static_cast<double>(f)}});
    segs.push_back({f, std::vector<std::uint32_t>{5}, 1, 0.8, {0.0, 1.0}});
  }
  write_segments(ws.root / "segs.json", segs);
  REQUIRE(run("track --segments " + (ws.root / "segs.json").string() + " --out " + (ws.root / "tracks.json").string()).code == 0);
  const json t = json::parse(std::ifstream(ws.root / "tracks.json"));
  CHECK(t["kind"] == "points");
  CHECK(t["entities"].size() == 2);
  CHECK(run("track --segments " + (ws.root / "segs.json").string() + " --tau 2 --out x.json").code != 0);
}

// psg4d command-line tool: dataset generation, conversion, tracking, relation
// baselines, evaluation, narration and validation.

#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "psg4d/error.hpp"
#include "psg4d/io.hpp"
#include "psg4d/narrate.hpp"
#include "psg4d/parallel.hpp"
#include "psg4d/rng.hpp"

namespace {

using namespace psg4d;
using json = nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitViolations = 2;

struct Finding {
  std::string file;
  std::string code;
  std::int64_t id = 0;
  std::string detail;
};

int report_findings(const std::vector<Finding>& findings) {
  json list = json::array();
  for (const auto& f : findings) {
    list.push_back({{"file", f.file}, {"code", f.code}, {"id", f.id}, {"detail", f.detail}});
  }
  std::cout << json{{"status", findings.empty() ? "ok" : "violations"}, {"violations", list}}.dump(2) << "\n";
  return findings.empty() ? kExitOk : kExitViolations;
}

std::vector<Finding> findings_of(const std::vector<FileViolation>& violations) {
  std::vector<Finding> out;
  for (const auto& v : violations) {
    out.push_back({v.file, std::string(to_string(v.violation.code)), v.violation.id, v.violation.detail});
  }
  return out;
}

// Structural read failures are reported like validation findings.
bool is_validation_error(const Error& e) {
  return e.code() == ErrorCode::SchemaViolation || e.code() == ErrorCode::ChecksumMismatch ||
         e.code() == ErrorCode::MissingFile;
}

Finding finding_of(const Error& e, const std::string& file) { return {file, std::string(to_string(e.code())), 0, e.what()}; }

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
  out << text;
}

std::vector<FrameIndex> tube_frames(const Tube& tube) {
  return std::visit([](const auto& t) {
    std::vector<FrameIndex> frames;
    for (const auto& [f, _] : t.frames) frames.push_back(f);
    return frames;
  }, tube);
}

// ---- evaluate ---------------------------------------------------------------

struct EvaluateArgs {
  std::string gt;
  std::string pred;
  std::vector<std::size_t> ks{20, 50, 100};
  double viou_thresh = kDefaultViouThreshold;
  std::string out = "-";
};

int run_evaluate(const EvaluateArgs& args, unsigned jobs) {
  DatasetReadResult gt;
  std::vector<SceneGraph4D> preds;
  try {
    gt = read_dataset(args.gt);
  } catch (const Error& e) {
    if (is_validation_error(e)) return report_findings({finding_of(e, args.gt)});
    throw;
  }
  try {
    preds = read_predictions(args.pred);
  } catch (const Error& e) {
    if (is_validation_error(e)) return report_findings({finding_of(e, args.pred)});
    throw;
  }

  std::vector<Finding> findings = findings_of(gt.violations);
  std::map<std::string, const SceneGraph4D*> by_id;
  for (const auto& p : preds) {
    by_id.emplace(p.video_id, &p);
    for (const auto& v : validate_scene_graph(p, gt.dataset.vocabulary, ValidationMode::Prediction)) {
      findings.push_back({args.pred + "#/videos/" + p.video_id, std::string(to_string(v.code)), v.id, v.detail});
    }
  }
  std::map<std::string, bool> known;
  for (const auto& v : gt.dataset.videos) known[v.manifest.video_id] = true;
  for (const auto& p : preds) {
    if (!known.contains(p.video_id)) {
      findings.push_back({args.pred + "#/videos/" + p.video_id, "UnknownVideo", 0, "no ground truth for this video"});
    }
  }
  if (!findings.empty()) return report_findings(findings);

  // Videos without a prediction are scored against an empty graph.
  std::vector<SceneGraph4D> empties;
  empties.reserve(gt.dataset.videos.size());
  std::vector<EvaluationPair> pairs;
  for (const auto& v : gt.dataset.videos) {
    const auto it = by_id.find(v.manifest.video_id);
    if (it == by_id.end()) {
      SceneGraph4D empty;
      empty.video_id = v.manifest.video_id;
      empty.vocabulary_ref = v.graph.vocabulary_ref;
      empties.push_back(std::move(empty));
      pairs.push_back({&empties.back(), &v.graph});
    } else {
      pairs.push_back({it->second, &v.graph});
    }
  }
  const EvaluationReport report = evaluate_dataset(pairs, args.ks, args.viou_thresh, jobs);
  const std::string text = report_to_json(report);
  if (args.out == "-") {
    std::cout << text;
  } else {
    write_text(args.out, text);
  }
  return kExitOk;
}

// ---- convert ------------------------------------------------------------------

struct ConvertArgs {
  std::string video;
  double lambda = kDefaultDepthThreshold;
  std::string out;
};

int run_convert(const ConvertArgs& args, unsigned jobs) {
  const fs::path in = args.video;
  const fs::path out = args.out;
  VideoManifest manifest = read_video_manifest(in);
  if (manifest.modality != Modality::Rgbd) throw Error(ErrorCode::InvalidArgument, "video is already a point cloud");
  SceneGraph4D graph = read_video_graph(in, manifest.video_id, manifest.vocabulary_ref);

  const auto frame_count = static_cast<std::size_t>(manifest.frame_count);
  std::vector<std::vector<PixelCoord>> sources(frame_count);
  parallel_for(frame_count, jobs, [&](std::size_t i) {
    const auto f = static_cast<FrameIndex>(i);
    const DepthImage depth = read_depth_frame(in, manifest, f);
    const RgbImage rgb = read_rgb_png(rgb_frame_path(in, f));
    PointCloudFrame cloud = depth_frame_to_points(depth, rgb, manifest.intrinsics, manifest.cam_to_world(f), args.lambda);
    write_point_frame(points_frame_path(out, f), cloud);
    sources[i] = std::move(cloud.source_pixels);
  });

  // Points are emitted in row-major pixel order, so a mask becomes the sorted
  // list of point indices whose source pixel it covers.
  for (auto& e : graph.entities) {
    const auto* mt = std::get_if<MaskTube>(&e.tube);
    if (!mt) continue;
    PointTube pt{e.entity_id, {}};
    for (const auto& [f, mask] : mt->frames) {
      if (f < 0 || static_cast<std::size_t>(f) >= frame_count) {
        throw Error(ErrorCode::InvalidArgument, "tube frame " + std::to_string(f) + " outside the video");
      }
      const auto& src = sources[static_cast<std::size_t>(f)];
      std::vector<std::uint32_t> indices;
      std::size_t p = 0;
      mask.for_each_span([&](std::uint64_t begin, std::uint64_t end) {
        while (p < src.size() && std::uint64_t{src[p].row} * mask.width() + src[p].col < begin) ++p;
        while (p < src.size() && std::uint64_t{src[p].row} * mask.width() + src[p].col < end) {
          indices.push_back(static_cast<std::uint32_t>(p++));
        }
      });
      if (!indices.empty()) pt.frames.emplace(f, std::move(indices));
    }
    e.tube = std::move(pt);
  }
  std::erase_if(graph.entities, [](const EntityNode& e) { return std::get<PointTube>(e.tube).frames.empty(); });
  std::erase_if(graph.triplets, [&](const RelationTriplet& t) {
    return !graph.find_entity(t.subject_id) || !graph.find_entity(t.object_id);
  });

  manifest.modality = Modality::PointCloud;
  manifest.lambda = args.lambda;
  write_video_manifest(out, manifest);
  write_video_graph(out, graph);
  return kExitOk;
}

// ---- track ----------------------------------------------------------------------

struct TrackArgs {
  std::string segments;
  double tau = 0.5;
  double iou_gate = -1.0;
  std::string out;
};

int run_track(const TrackArgs& args) {
  const auto segments = read_segments(args.segments);
  TrackerConfig config;
  config.tau = args.tau;
  if (args.iou_gate >= 0.0) config.iou_gate = args.iou_gate;
  const TrackingResult result = link_tracks(segments, config);
  write_entities(args.out, result.entities);
  return kExitOk;
}

// ---- baseline -------------------------------------------------------------------

struct BaselineArgs {
  std::string video;
  std::string rulebook;
  std::string out;
};

int run_baseline(const BaselineArgs& args, unsigned jobs) {
  const fs::path dir = args.video;
  const VideoManifest manifest = read_video_manifest(dir);
  const SceneGraph4D gt = read_video_graph(dir, manifest.video_id, manifest.vocabulary_ref);
  const Rulebook rulebook = read_rulebook(args.rulebook);

  std::vector<FrameIndex> frames;
  for (const auto& e : gt.entities) {
    const auto fs_ = tube_frames(e.tube);
    frames.insert(frames.end(), fs_.begin(), fs_.end());
  }
  std::sort(frames.begin(), frames.end());
  frames.erase(std::unique(frames.begin(), frames.end()), frames.end());

  std::map<EntityId, TubeGeometry> geometry;
  std::vector<TubeGeometry> per_entity(gt.entities.size());
  if (manifest.modality == Modality::Rgbd) {
    std::vector<DepthImage> depths(frames.size());
    parallel_for(frames.size(), jobs, [&](std::size_t i) { depths[i] = read_depth_frame(dir, manifest, frames[i]); });
    std::map<FrameIndex, DepthFrameView> views;
    for (std::size_t i = 0; i < frames.size(); ++i) {
      views.emplace(frames[i], DepthFrameView{&depths[i], manifest.intrinsics, manifest.cam_to_world(frames[i]), manifest.lambda});
    }
    parallel_for(gt.entities.size(), jobs, [&](std::size_t i) { per_entity[i] = tube_geometry(gt.entities[i], views); });
  } else {
    std::vector<PointCloudFrame> clouds(frames.size());
    parallel_for(frames.size(), jobs, [&](std::size_t i) { clouds[i] = read_point_frame(points_frame_path(dir, frames[i])); });
    std::map<FrameIndex, PointCloudFrame> by_frame;
    for (std::size_t i = 0; i < frames.size(); ++i) by_frame.emplace(frames[i], std::move(clouds[i]));
    parallel_for(gt.entities.size(), jobs, [&](std::size_t i) { per_entity[i] = tube_geometry(gt.entities[i], by_frame); });
  }
  for (std::size_t i = 0; i < gt.entities.size(); ++i) geometry.emplace(gt.entities[i].entity_id, std::move(per_entity[i]));

  SceneGraph4D pred;
  pred.video_id = gt.video_id;
  pred.vocabulary_ref = gt.vocabulary_ref;
  pred.entities = gt.entities;
  pred.triplets = GeometricScorer(rulebook).score(pred.entities, geometry);
  write_predictions(args.out, pred.vocabulary_ref, {pred});
  return kExitOk;
}

// ---- generate -----------------------------------------------------------------

struct GenerateArgs {
  std::string recipe;
  std::uint64_t seed = 0;
  std::string out;
};

json oracle_to_json(const OracleRecall& o) {
  json per = json::object();
  for (const auto& [pid, r] : o.per_predicate) per[std::to_string(pid)] = r;
  return {{"recall", o.recall ? json(*o.recall) : json(nullptr)},
          {"mean_recall", o.mean_recall ? json(*o.mean_recall) : json(nullptr)},
          {"per_predicate_recall", per}};
}

int run_generate(const GenerateArgs& args, unsigned jobs) {
  const RecipeFile rf = read_recipe_file(args.recipe);
  const fs::path root = args.out;
  const SplitMix64 base(args.seed);

  std::vector<SceneRecipe> recipes = rf.scenes;
  for (std::size_t i = 0; i < rf.random_scene_count; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "random_%04zu", i);
    SplitMix64 stream = base.split(2 * i);
    recipes.push_back(random_recipe(rf.random_spec, stream.next(), id, rf.vocabulary, rf.rulebook));
  }

  Dataset dataset;
  dataset.vocabulary = rf.vocabulary;
  dataset.metadata = {{"generator", "psg4d generate"}, {"rng", std::string(SplitMix64::kAlgorithm)}, {"seed", std::to_string(args.seed)}};
  dataset.videos.resize(recipes.size());
  std::vector<PerturbedPrediction> perturbed(rf.noise ? recipes.size() : 0);

  parallel_for(recipes.size(), jobs, [&](std::size_t i) {
    const SceneRecipe& r = recipes[i];
    const GeneratedScene scene = generate_scene(r);
    VideoRecord& rec = dataset.videos[i];
    rec.manifest.video_id = r.video_id;
    rec.manifest.modality = Modality::Rgbd;
    rec.manifest.frame_count = r.frame_count;
    rec.manifest.fps = r.fps;
    rec.manifest.depth_scale = r.depth_scale;
    rec.manifest.intrinsics = r.intrinsics;
    if (!r.cam_to_world.is_identity()) {
      rec.manifest.extrinsics.assign(static_cast<std::size_t>(r.frame_count), r.cam_to_world);
    }
    rec.manifest.vocabulary_ref = rf.vocabulary.checksum();
    rec.graph = scene.gt;
    const fs::path dir = video_dir(root, r.video_id);
    for (std::size_t f = 0; f < scene.frames.size(); ++f) {
      const auto& frame = scene.frames[f];
      write_depth_png(depth_frame_path(dir, static_cast<FrameIndex>(f)), frame.depth.height, frame.depth.width,
                      frame.raw_depth);
      write_rgb_png(rgb_frame_path(dir, static_cast<FrameIndex>(f)), frame.rgb);
    }
    if (rf.noise) {
      perturbed[i] = perturb_predictions(scene.gt, rf.vocabulary, *rf.noise, base.split(2 * i + 1).next(), rf.ks);
    }
  });
  write_dataset(root, dataset);

  if (rf.noise) {
    std::vector<SceneGraph4D> preds;
    json per_video = json::object();
    for (const auto& p : perturbed) {
      preds.push_back(p.pred);
      json by_k = json::object();
      for (const auto& [k, o] : p.oracle) by_k[std::to_string(k)] = oracle_to_json(o);
      per_video[p.pred.video_id] = by_k;
    }
    write_predictions(root / "predictions.json", rf.vocabulary.checksum(), preds);
    write_text(root / "oracle.json", json{{"per_video", per_video}}.dump(2) + "\n");
  }
  return kExitOk;
}

// ---- narrate -------------------------------------------------------------------

struct NarrateArgs {
  std::string graph;
  double window = 30.0;
  double fps = 30.0;
};

int run_narrate(const NarrateArgs& args) {
  const fs::path dir = args.graph;
  std::vector<std::pair<VideoManifest, SceneGraph4D>> videos;
  Vocabulary vocab;
  if (fs::exists(dir / "manifest.json")) {
    const DatasetReadResult ds = read_dataset(dir);
    vocab = ds.dataset.vocabulary;
    for (const auto& v : ds.dataset.videos) videos.emplace_back(v.manifest, v.graph);
  } else {
    vocab = read_dataset_vocabulary(dir.parent_path().parent_path());
    const VideoManifest manifest = read_video_manifest(dir);
    videos.emplace_back(manifest, read_video_graph(dir, manifest.video_id, manifest.vocabulary_ref));
  }
  for (const auto& [manifest, graph] : videos) {
    if (videos.size() > 1) std::cout << "# " << manifest.video_id << "\n";
    for (const auto& window : narrate(graph, vocab, args.window, args.fps, manifest.frame_count)) {
      std::cout << format_prompt(window, args.window) << "\n";
    }
  }
  return kExitOk;
}

// ---- validate ------------------------------------------------------------------

int run_validate(const std::string& root) {
  try {
    return report_findings(findings_of(read_dataset(root).violations));
  } catch (const Error& e) {
    if (is_validation_error(e)) return report_findings({finding_of(e, root)});
    throw;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"psg4d: 4D panoptic scene graph toolkit"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.fallthrough();

  unsigned jobs = std::max(1U, std::thread::hardware_concurrency());
  app.add_option("-j,--jobs", jobs, "Worker threads")->envname(kJobsEnvVar)->check(CLI::PositiveNumber);

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Score a prediction file against a ground-truth dataset");
  evaluate->add_option("--gt", ev.gt, "Ground-truth dataset root")->required();
  evaluate->add_option("--pred", ev.pred, "Prediction file")->required();
  evaluate->add_option("--k", ev.ks, "Comma-separated K values")->delimiter(',');
  evaluate->add_option("--viou-thresh", ev.viou_thresh, "Tube vIOU must exceed this")->check(CLI::Range(0.0, 1.0));
  evaluate->add_option("--out", ev.out, "Report path, - for stdout");

  ConvertArgs cv;
  auto* convert = app.add_subcommand("convert", "Convert an RGB-D video directory to point clouds");
  convert->add_option("--video", cv.video, "RGB-D video directory")->required();
  convert->add_option("--lambda", cv.lambda, "Drop depths beyond this many meters")->check(CLI::PositiveNumber);
  convert->add_option("--out", cv.out, "Output video directory")->required();

  TrackArgs tr;
  auto* track = app.add_subcommand("track", "Link per-frame segments into entity tubes");
  track->add_option("--segments", tr.segments, "Segments file")->required();
  track->add_option("--tau", tr.tau, "Minimum cosine similarity to continue a track")->check(CLI::Range(0.0, 1.0));
  track->add_option("--iou-gate", tr.iou_gate, "Minimum frame IoU to continue a track, negative disables");
  track->add_option("--out", tr.out, "Entities output file")->required();

  BaselineArgs bl;
  auto* baseline = app.add_subcommand("baseline", "Predict relations from tube geometry with a rulebook");
  baseline->add_option("--video", bl.video, "Video directory")->required();
  baseline->add_option("--rulebook", bl.rulebook, "Rulebook file")->required();
  baseline->add_option("--out", bl.out, "Prediction file")->required();

  GenerateArgs gn;
  auto* generate = app.add_subcommand("generate", "Render a synthetic dataset from a recipe");
  generate->add_option("--recipe", gn.recipe, "Recipe file")->required();
  generate->add_option("--seed", gn.seed, "Random seed");
  generate->add_option("--out", gn.out, "Dataset root")->required();

  NarrateArgs nr;
  auto* narrate_cmd = app.add_subcommand("narrate", "Print windowed text summaries of a scene graph");
  narrate_cmd->add_option("--graph", nr.graph, "Video directory or dataset root")->required();
  narrate_cmd->add_option("--window", nr.window, "Window length in seconds")->check(CLI::PositiveNumber);
  narrate_cmd->add_option("--fps", nr.fps, "Frames per second")->check(CLI::PositiveNumber);

  std::string validate_root;
  auto* validate = app.add_subcommand("validate", "Check a dataset against the ground-truth rules");
  validate->add_option("--root", validate_root, "Dataset root")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*evaluate) return run_evaluate(ev, jobs);
    if (*convert) return run_convert(cv, jobs);
    if (*track) return run_track(tr);
    if (*baseline) return run_baseline(bl, jobs);
    if (*generate) return run_generate(gn, jobs);
    if (*narrate_cmd) return run_narrate(nr);
    if (*validate) return run_validate(validate_root);
  } catch (const std::exception& e) {
    std::cerr << "psg4d: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "psg4d/error.hpp"
#include "psg4d/io.hpp"

namespace psg4d {

using json = nlohmann::json;

namespace {

constexpr const char* kDatasetFormat = "psg4d-dataset";
constexpr const char* kPredictionFormat = "psg4d-predictions";

// ---- generic helpers ------------------------------------------------------

[[noreturn]] void schema_error(const std::string& where, const std::string& reason) {
  throw Error(ErrorCode::SchemaViolation, where + ": " + reason);
}

json load_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    schema_error(path.string(), e.what());
  }
}

void save_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
  out << text;
}

std::string dump(const json& j, bool compact = false) {
  return (compact ? j.dump() : j.dump(2)) + "\n";
}

// Checked field access; `where` names the file and JSON pointer for messages.
template <typename T>
T field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) schema_error(where, std::string("missing field '") + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    schema_error(where + "/" + key, e.what());
  }
}

template <typename T>
T field_or(const json& obj, const char* key, T fallback, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) return fallback;
  return field<T>(obj, key, where);
}

FrameIndex parse_frame_key(const std::string& key, const std::string& where) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(key, &used);
    if (used != key.size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::exception&) {
    schema_error(where, "frame key '" + key + "' is not an integer");
  }
}

// ---- vocabulary -------------------------------------------------------------

json vocabulary_to_json(const Vocabulary& v) {
  json objects = json::array();
  for (const auto& c : v.object_classes) objects.push_back({{"id", c.id}, {"name", c.name}, {"thing", c.is_thing}});
  json predicates = json::array();
  for (const auto& c : v.predicate_classes) predicates.push_back({{"id", c.id}, {"name", c.name}});
  return {{"objects", objects}, {"predicates", predicates}};
}

Vocabulary vocabulary_from_json(const json& j, const std::string& where) {
  Vocabulary v;
  const auto objects = field<json>(j, "objects", where);
  const auto predicates = field<json>(j, "predicates", where);
  if (!objects.is_array() || !predicates.is_array()) schema_error(where, "class lists must be arrays");
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const std::string w = where + "/objects/" + std::to_string(i);
    v.object_classes.push_back({field<ClassId>(objects[i], "id", w), field<std::string>(objects[i], "name", w),
                                field_or<bool>(objects[i], "thing", true, w)});
  }
  for (std::size_t i = 0; i < predicates.size(); ++i) {
    const std::string w = where + "/predicates/" + std::to_string(i);
    v.predicate_classes.push_back({field<ClassId>(predicates[i], "id", w), field<std::string>(predicates[i], "name", w)});
  }
  const auto problems = v.problems();
  if (!problems.empty()) schema_error(where, problems.front());
  return v;
}

// ---- camera -------------------------------------------------------------------

json intrinsics_to_json(const CameraIntrinsics& k) {
  return {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
}

CameraIntrinsics intrinsics_from_json(const json& j, const std::string& where) {
  CameraIntrinsics k{field<double>(j, "fx", where),         field<double>(j, "fy", where),
                     field<double>(j, "cx", where),         field<double>(j, "cy", where),
                     field<std::uint32_t>(j, "width", where), field<std::uint32_t>(j, "height", where)};
  const auto problems = k.problems();
  if (!problems.empty()) schema_error(where, problems.front());
  return k;
}

RigidTransform transform_from_json(const json& j, const std::string& where) {
  try {
    const auto values = j.get<std::vector<double>>();
    return RigidTransform::from_row_major(values);
  } catch (const json::exception& e) {
    schema_error(where, e.what());
  } catch (const Error& e) {
    schema_error(where, e.what());
  }
}

// ---- graphs -----------------------------------------------------------------

json mask_to_json(const RleMask& m) { return m.runs(); }

json entities_to_json(const std::vector<EntityNode>& entities) {
  // Shape of the first tube decides the document kind; readers reject mixes.
  json doc;
  std::string kind = "mask";
  std::uint32_t height = 0, width = 0;
  if (!entities.empty()) {
    if (const auto* mt = std::get_if<MaskTube>(&entities.front().tube)) {
      height = mt->height;
      width = mt->width;
    } else {
      kind = "points";
    }
  }
  doc["kind"] = kind;
  if (kind == "mask") {
    doc["height"] = height;
    doc["width"] = width;
  }
  json ents = json::object();
  for (const auto& e : entities) {
    json frames = json::object();
    if (const auto* mt = std::get_if<MaskTube>(&e.tube)) {
      if (kind != "mask" || mt->height != height || mt->width != width) {
        throw Error(ErrorCode::ShapeMismatch, "entities of one video must share one tube shape");
      }
      for (const auto& [f, m] : mt->frames) frames[std::to_string(f)] = mask_to_json(m);
    } else {
      if (kind != "points") throw Error(ErrorCode::KindMismatch, "mixed mask and point tubes");
      for (const auto& [f, idx] : std::get<PointTube>(e.tube).frames) frames[std::to_string(f)] = idx;
    }
    json entry = {{"category_id", e.category_id}, {"score", e.score}, {"frames", frames}};
    if (e.embeddings) {
      json emb = json::object();
      for (const auto& [f, v] : *e.embeddings) emb[std::to_string(f)] = v;
      entry["embeddings"] = emb;
    }
    ents[std::to_string(e.entity_id)] = entry;
  }
  doc["entities"] = ents;
  return doc;
}

std::vector<EntityNode> entities_from_json(const json& doc, const std::string& where) {
  const auto kind = field<std::string>(doc, "kind", where);
  if (kind != "mask" && kind != "points") schema_error(where + "/kind", "expected 'mask' or 'points'");
  std::uint32_t height = 0, width = 0;
  if (kind == "mask") {
    height = field<std::uint32_t>(doc, "height", where);
    width = field<std::uint32_t>(doc, "width", where);
  }
  const auto ents = field<json>(doc, "entities", where);
  if (!ents.is_object()) schema_error(where + "/entities", "must be an object keyed by entity id");
  std::vector<EntityNode> out;
  for (const auto& [key, entry] : ents.items()) {
    const std::string w = where + "/entities/" + key;
    EntityNode e;
    e.entity_id = parse_frame_key(key, w);
    e.category_id = field<ClassId>(entry, "category_id", w);
    e.score = field_or<double>(entry, "score", 1.0, w);
    const auto frames = field<json>(entry, "frames", w);
    if (!frames.is_object()) schema_error(w + "/frames", "must be an object keyed by frame");
    if (kind == "mask") {
      MaskTube tube{e.entity_id, height, width, {}};
      for (const auto& [fk, runs] : frames.items()) {
        const std::string fw = w + "/frames/" + fk;
        try {
          tube.frames.emplace(parse_frame_key(fk, fw),
                              RleMask::from_runs(height, width, runs.get<std::vector<std::uint32_t>>()));
        } catch (const json::exception& ex) {
          schema_error(fw, ex.what());
        } catch (const Error& ex) {
          schema_error(fw, ex.what());
        }
      }
      e.tube = std::move(tube);
    } else {
      PointTube tube{e.entity_id, {}};
      for (const auto& [fk, idx] : frames.items()) {
        const std::string fw = w + "/frames/" + fk;
        try {
          tube.frames.emplace(parse_frame_key(fk, fw), idx.get<std::vector<std::uint32_t>>());
        } catch (const json::exception& ex) {
          schema_error(fw, ex.what());
        }
      }
      e.tube = std::move(tube);
    }
    if (entry.contains("embeddings")) {
      EmbeddingTube emb;
      for (const auto& [fk, v] : entry.at("embeddings").items()) {
        const std::string fw = w + "/embeddings/" + fk;
        try {
          emb.emplace(parse_frame_key(fk, fw), v.get<std::vector<double>>());
        } catch (const json::exception& ex) {
          schema_error(fw, ex.what());
        }
      }
      e.embeddings = std::move(emb);
    }
    out.push_back(std::move(e));
  }
  std::sort(out.begin(), out.end(), [](const EntityNode& a, const EntityNode& b) { return a.entity_id < b.entity_id; });
  return out;
}

json relations_to_json(const std::vector<RelationTriplet>& triplets) {
  json list = json::array();
  for (const auto& t : triplets) {
    list.push_back({{"subject", t.subject_id},
                    {"object", t.object_id},
                    {"predicate", t.predicate_id},
                    {"start", t.interval.start},
                    {"end", t.interval.end},
                    {"confidence", t.confidence}});
  }
  return list;
}

std::vector<RelationTriplet> relations_from_json(const json& list, const std::string& where, bool need_confidence) {
  if (!list.is_array()) schema_error(where, "relations must be an array");
  std::vector<RelationTriplet> out;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string w = where + "/" + std::to_string(i);
    RelationTriplet t;
    t.subject_id = field<EntityId>(list[i], "subject", w);
    t.object_id = field<EntityId>(list[i], "object", w);
    t.predicate_id = field<ClassId>(list[i], "predicate", w);
    t.interval = {field<FrameIndex>(list[i], "start", w), field<FrameIndex>(list[i], "end", w)};
    t.confidence = need_confidence ? field<double>(list[i], "confidence", w)
                                   : field_or<double>(list[i], "confidence", 1.0, w);
    out.push_back(t);
  }
  return out;
}

json graph_document(const SceneGraph4D& g) {
  json doc = entities_to_json(g.entities);
  doc["relations"] = relations_to_json(g.triplets);
  return doc;
}

}  // namespace

// ---- video manifests --------------------------------------------------------

RigidTransform VideoManifest::cam_to_world(FrameIndex frame) const {
  if (extrinsics.empty()) return {};
  if (frame < 0 || static_cast<std::size_t>(frame) >= extrinsics.size()) {
    throw Error(ErrorCode::InvalidArgument, "no extrinsics for frame " + std::to_string(frame));
  }
  return extrinsics[static_cast<std::size_t>(frame)];
}

fs::path video_dir(const fs::path& root, const std::string& video_id) { return root / "videos" / video_id; }

namespace {
std::string frame_stem(FrameIndex frame) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06lld", static_cast<long long>(frame));
  return buf;
}
}  // namespace

fs::path depth_frame_path(const fs::path& dir, FrameIndex frame) { return dir / "frames" / (frame_stem(frame) + ".depth.png"); }
fs::path rgb_frame_path(const fs::path& dir, FrameIndex frame) { return dir / "frames" / (frame_stem(frame) + ".rgb.png"); }
fs::path points_frame_path(const fs::path& dir, FrameIndex frame) { return dir / "frames" / (frame_stem(frame) + ".pts"); }

VideoManifest read_video_manifest(const fs::path& dir) {
  const fs::path path = dir / "video.json";
  const json j = load_json(path);
  const std::string w = path.string() + "#";
  VideoManifest m;
  m.video_id = field<std::string>(j, "video_id", w);
  const auto modality = field<std::string>(j, "modality", w);
  if (modality == "rgbd") {
    m.modality = Modality::Rgbd;
  } else if (modality == "pointcloud") {
    m.modality = Modality::PointCloud;
  } else {
    schema_error(w + "/modality", "expected 'rgbd' or 'pointcloud'");
  }
  m.frame_count = field<FrameIndex>(j, "frame_count", w);
  m.fps = field<double>(j, "fps", w);
  m.depth_scale = field_or<double>(j, "depth_scale", 1000.0, w);
  m.lambda = field_or<double>(j, "lambda", kDefaultDepthThreshold, w);
  m.intrinsics = intrinsics_from_json(field<json>(j, "intrinsics", w), w + "/intrinsics");
  m.vocabulary_ref = field<std::string>(j, "vocabulary_ref", w);
  if (j.contains("extrinsics")) {
    const auto& ex = j.at("extrinsics");
    if (!ex.is_array()) schema_error(w + "/extrinsics", "must be an array");
    for (std::size_t i = 0; i < ex.size(); ++i) {
      m.extrinsics.push_back(transform_from_json(ex[i], w + "/extrinsics/" + std::to_string(i)));
    }
    if (static_cast<FrameIndex>(m.extrinsics.size()) != m.frame_count) {
      schema_error(w + "/extrinsics", "needs one transform per frame");
    }
  }
  if (!(m.fps > 0.0) || !(m.depth_scale > 0.0) || !(m.lambda > 0.0) || m.frame_count < 0) {
    schema_error(w, "fps, depth_scale and lambda must be positive");
  }
  return m;
}

void write_video_manifest(const fs::path& dir, const VideoManifest& m) {
  json j = {{"video_id", m.video_id},
            {"modality", m.modality == Modality::Rgbd ? "rgbd" : "pointcloud"},
            {"frame_count", m.frame_count},
            {"fps", m.fps},
            {"depth_scale", m.depth_scale},
            {"lambda", m.lambda},
            {"intrinsics", intrinsics_to_json(m.intrinsics)},
            {"vocabulary_ref", m.vocabulary_ref}};
  if (!m.extrinsics.empty()) {
    json ex = json::array();
    for (const auto& t : m.extrinsics) ex.push_back(t.to_row_major());
    j["extrinsics"] = ex;
  }
  save_text(dir / "video.json", dump(j));
}

SceneGraph4D read_video_graph(const fs::path& dir, const std::string& video_id, const std::string& vocabulary_ref) {
  SceneGraph4D g;
  g.video_id = video_id;
  g.vocabulary_ref = vocabulary_ref;
  const fs::path masks = dir / "masks.json";
  g.entities = entities_from_json(load_json(masks), masks.string() + "#");
  const fs::path rel = dir / "relations.json";
  const json r = load_json(rel);
  g.triplets = relations_from_json(field<json>(r, "relations", rel.string() + "#"), rel.string() + "#/relations", false);
  return g;
}

void write_video_graph(const fs::path& dir, const SceneGraph4D& graph) {
  save_text(dir / "masks.json", dump(entities_to_json(graph.entities), true));
  save_text(dir / "relations.json", dump(json{{"relations", relations_to_json(graph.triplets)}}));
}

std::string graph_to_json(const SceneGraph4D& graph) { return dump(graph_document(graph), true); }

// ---- datasets ---------------------------------------------------------------

namespace {

Vocabulary manifest_vocabulary(const json& manifest, const fs::path& manifest_path) {
  const std::string w = manifest_path.string() + "#";
  if (field<std::string>(manifest, "format", w) != kDatasetFormat) schema_error(w + "/format", "not a dataset manifest");
  if (field<int>(manifest, "version", w) != kFormatVersion) schema_error(w + "/version", "unsupported version");
  Vocabulary vocab = vocabulary_from_json(field<json>(manifest, "vocabulary", w), w + "/vocabulary");
  if (field<std::string>(manifest, "vocabulary_checksum", w) != vocab.checksum()) {
    throw Error(ErrorCode::ChecksumMismatch, manifest_path.string() + ": vocabulary checksum is stale");
  }
  return vocab;
}

}  // namespace

Vocabulary read_dataset_vocabulary(const fs::path& root) {
  const fs::path manifest_path = root / "manifest.json";
  return manifest_vocabulary(load_json(manifest_path), manifest_path);
}

DatasetReadResult read_dataset(const fs::path& root) {
  const fs::path manifest_path = root / "manifest.json";
  const json manifest = load_json(manifest_path);
  const std::string w = manifest_path.string() + "#";

  DatasetReadResult result;
  Dataset& ds = result.dataset;
  ds.vocabulary = manifest_vocabulary(manifest, manifest_path);
  const std::string checksum = ds.vocabulary.checksum();
  if (manifest.contains("metadata")) {
    ds.metadata = field<std::map<std::string, std::string>>(manifest, "metadata", w);
  }
  const auto ids = field<std::vector<std::string>>(manifest, "videos", w);
  if (std::set<std::string>(ids.begin(), ids.end()).size() != ids.size()) {
    schema_error(w + "/videos", "duplicate video id");
  }
  for (const auto& id : ids) {
    const fs::path dir = video_dir(root, id);
    VideoRecord rec;
    rec.manifest = read_video_manifest(dir);
    if (rec.manifest.video_id != id) schema_error((dir / "video.json").string(), "video_id does not match directory");
    if (rec.manifest.vocabulary_ref != checksum) {
      throw Error(ErrorCode::ChecksumMismatch, (dir / "video.json").string() + ": vocabulary_ref " +
                                                   rec.manifest.vocabulary_ref + " != " + checksum);
    }
    rec.graph = read_video_graph(dir, id, checksum);

    PointCounts counts;
    for (const auto& e : rec.graph.entities) {
      for (const auto f : std::visit([](const auto& t) {
             std::vector<FrameIndex> fs_;
             for (const auto& [f, _] : t.frames) fs_.push_back(f);
             return fs_;
           }, e.tube)) {
        const fs::path frame_file = rec.manifest.modality == Modality::Rgbd ? depth_frame_path(dir, f)
                                                                           : points_frame_path(dir, f);
        if (!fs::exists(frame_file)) throw Error(ErrorCode::MissingFile, frame_file.string());
        if (rec.manifest.modality == Modality::PointCloud && !counts.contains(f)) {
          counts.emplace(f, read_point_frame(frame_file).size());
        }
      }
    }
    for (auto& v : validate_scene_graph(rec.graph, ds.vocabulary, ValidationMode::GroundTruth,
                                        rec.manifest.modality == Modality::PointCloud ? &counts : nullptr)) {
      result.violations.push_back({(dir / "masks.json").string(), std::move(v)});
    }
    ds.videos.push_back(std::move(rec));
  }
  return result;
}

void write_dataset(const fs::path& root, const Dataset& dataset) {
  json ids = json::array();
  for (const auto& v : dataset.videos) ids.push_back(v.manifest.video_id);
  json manifest = {{"format", kDatasetFormat},
                   {"version", kFormatVersion},
                   {"vocabulary", vocabulary_to_json(dataset.vocabulary)},
                   {"vocabulary_checksum", dataset.vocabulary.checksum()},
                   {"videos", ids}};
  if (!dataset.metadata.empty()) manifest["metadata"] = dataset.metadata;
  save_text(root / "manifest.json", dump(manifest));
  for (const auto& v : dataset.videos) {
    const fs::path dir = video_dir(root, v.manifest.video_id);
    write_video_manifest(dir, v.manifest);
    write_video_graph(dir, v.graph);
  }
}

DepthImage read_depth_frame(const fs::path& dir, const VideoManifest& manifest, FrameIndex frame) {
  DepthImage img;
  const auto raw = read_depth_png(depth_frame_path(dir, frame), img.height, img.width);
  img.meters.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) img.meters[i] = raw[i] / manifest.depth_scale;
  return img;
}

// ---- point frames -------------------------------------------------------------

namespace {

template <typename T>
void put_le(std::string& out, T value) {
  static_assert(std::is_trivially_copyable_v<T> && sizeof(T) == 4);
  const auto bits = std::bit_cast<std::uint32_t>(value);
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xFF));
}

template <typename T>
T get_le(const std::string& in, std::size_t offset) {
  std::uint32_t bits = 0;
  for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[offset + b])) << (8 * b);
  return std::bit_cast<T>(bits);
}

}  // namespace

void write_point_frame(const fs::path& path, const PointCloudFrame& frame) {
  std::string out;
  out.reserve(4 + frame.size() * 24);
  put_le(out, static_cast<std::uint32_t>(frame.size()));
  for (const auto& p : frame.points) {
    put_le(out, static_cast<float>(p.position.x()));
    put_le(out, static_cast<float>(p.position.y()));
    put_le(out, static_cast<float>(p.position.z()));
    for (const auto c : p.rgb) put_le(out, static_cast<float>(c));
  }
  save_text(path, out);
}

PointCloudFrame read_point_frame(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (data.size() < 4) schema_error(path.string(), "missing point count header");
  const auto count = get_le<std::uint32_t>(data, 0);
  if (data.size() != 4 + std::size_t{count} * 24) schema_error(path.string(), "record count does not match file size");
  PointCloudFrame frame;
  frame.points.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t o = 4 + i * 24;
    ColoredPoint p;
    p.position = {get_le<float>(data, o), get_le<float>(data, o + 4), get_le<float>(data, o + 8)};
    for (std::size_t c = 0; c < 3; ++c) {
      p.rgb[c] = static_cast<std::uint8_t>(std::clamp(get_le<float>(data, o + 12 + 4 * c), 0.0F, 255.0F));
    }
    frame.points.push_back(p);
  }
  return frame;
}

// ---- predictions and reports ---------------------------------------------------

void write_predictions(const fs::path& path, const std::string& vocabulary_ref, const std::vector<SceneGraph4D>& graphs) {
  json videos = json::object();
  for (const auto& g : graphs) {
    if (videos.contains(g.video_id)) throw Error(ErrorCode::DuplicateVideoId, g.video_id);
    videos[g.video_id] = graph_document(g);
  }
  json doc = {{"format", kPredictionFormat}, {"version", kFormatVersion}, {"vocabulary_ref", vocabulary_ref}, {"videos", videos}};
  save_text(path, dump(doc, true));
}

std::vector<SceneGraph4D> read_predictions(const fs::path& path) {
  const json doc = load_json(path);
  const std::string w = path.string() + "#";
  if (field<std::string>(doc, "format", w) != kPredictionFormat) schema_error(w + "/format", "not a prediction file");
  const auto ref = field<std::string>(doc, "vocabulary_ref", w);
  const auto videos = field<json>(doc, "videos", w);
  if (!videos.is_object()) schema_error(w + "/videos", "must be an object keyed by video id");
  std::vector<SceneGraph4D> out;
  for (const auto& [id, body] : videos.items()) {
    SceneGraph4D g;
    g.video_id = id;
    g.vocabulary_ref = ref;
    g.entities = entities_from_json(body, w + "/videos/" + id);
    g.triplets = relations_from_json(field<json>(body, "relations", w + "/videos/" + id),
                                     w + "/videos/" + id + "/relations", true);
    out.push_back(std::move(g));
  }
  return out;
}

namespace {

json k_metrics_to_json(const KMetrics& m) {
  json per = json::object();
  for (const auto& [pid, r] : m.per_predicate) per[std::to_string(pid)] = r;
  return {{"recall", m.recall ? json(*m.recall) : json(nullptr)},
          {"mean_recall", m.mean_recall ? json(*m.mean_recall) : json(nullptr)},
          {"per_predicate_recall", per}};
}

}  // namespace

std::string report_to_json(const EvaluationReport& report) {
  json per_k = json::object();
  for (const auto& [k, m] : report.per_k) {
    json entry = k_metrics_to_json(m);
    json matched = json::array();
    for (const auto& dm : report.matched.at(k)) {
      matched.push_back({{"video_id", dm.video_id},
                         {"gt_index", dm.match.gt_index},
                         {"pred_index", dm.match.pred_index},
                         {"credit", dm.match.credit}});
    }
    entry["matched"] = matched;
    per_k[std::to_string(k)] = entry;
  }
  json per_video = json::object();
  for (const auto& vm : report.per_video) {
    json vk = json::object();
    for (const auto& [k, m] : vm.per_k) vk[std::to_string(k)] = k_metrics_to_json(m);
    per_video[vm.video_id] = {{"gt_triplets", vm.gt_triplets}, {"per_k", vk}};
  }
  json doc = {{"config", {{"ks", report.ks}, {"viou_threshold", report.viou_threshold}}},
              {"per_k", per_k},
              {"per_video", per_video}};
  return dump(doc);
}

// ---- rulebooks -------------------------------------------------------------------

namespace {

json rulebook_to_json(const Rulebook& rb) {
  json rules = json::array();
  for (const auto& r : rb.rules) {
    rules.push_back({{"predicate", r.predicate_id},
                     {"kind", std::string(to_string(r.kind))},
                     {"threshold", r.threshold},
                     {"min_duration", r.min_duration}});
  }
  return {{"rules", rules}};
}

Rulebook rulebook_from_json(const json& j, const std::string& where) {
  Rulebook rb;
  const auto rules = field<json>(j, "rules", where);
  if (!rules.is_array()) schema_error(where + "/rules", "must be an array");
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const std::string w = where + "/rules/" + std::to_string(i);
    Rule r;
    r.predicate_id = field<ClassId>(rules[i], "predicate", w);
    const auto kind = parse_rule_kind(field<std::string>(rules[i], "kind", w));
    if (!kind) schema_error(w + "/kind", "expected near, above or contact");
    r.kind = *kind;
    r.threshold = field<double>(rules[i], "threshold", w);
    r.min_duration = field_or<FrameIndex>(rules[i], "min_duration", 1, w);
    if (!(r.threshold > 0.0) || r.min_duration < 1) schema_error(w, "threshold must be > 0 and min_duration >= 1");
    rb.rules.push_back(r);
  }
  return rb;
}

}  // namespace

Rulebook read_rulebook(const fs::path& path) { return rulebook_from_json(load_json(path), path.string() + "#"); }

void write_rulebook(const fs::path& path, const Rulebook& rulebook) { save_text(path, dump(rulebook_to_json(rulebook))); }

// ---- tracker files -------------------------------------------------------------

std::vector<FrameSegment> read_segments(const fs::path& path) {
  const json doc = load_json(path);
  const std::string w = path.string() + "#";
  const auto frames = field<json>(doc, "frames", w);
  if (!frames.is_array()) schema_error(w + "/frames", "must be an array");
  std::vector<FrameSegment> out;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const std::string fw = w + "/frames/" + std::to_string(i);
    const auto frame = field<FrameIndex>(frames[i], "frame", fw);
    const auto segs = field<json>(frames[i], "segments", fw);
    for (std::size_t s = 0; s < segs.size(); ++s) {
      const std::string sw = fw + "/segments/" + std::to_string(s);
      FrameSegment seg;
      seg.frame = frame;
      seg.category_id = field<ClassId>(segs[s], "category_id", sw);
      seg.score = field_or<double>(segs[s], "score", 1.0, sw);
      seg.embedding = field<std::vector<double>>(segs[s], "embedding", sw);
      if (segs[s].contains("mask")) {
        const auto& m = segs[s].at("mask");
        try {
          seg.mask = RleMask::from_runs(field<std::uint32_t>(m, "height", sw + "/mask"),
                                        field<std::uint32_t>(m, "width", sw + "/mask"),
                                        field<std::vector<std::uint32_t>>(m, "runs", sw + "/mask"));
        } catch (const Error& e) {
          if (e.code() == ErrorCode::SchemaViolation) throw;
          schema_error(sw + "/mask", e.what());
        }
      } else {
        seg.mask = field<std::vector<std::uint32_t>>(segs[s], "points", sw);
      }
      out.push_back(std::move(seg));
    }
  }
  return out;
}

void write_segments(const fs::path& path, const std::vector<FrameSegment>& segments) {
  std::map<FrameIndex, json> by_frame;
  for (const auto& s : segments) {
    json seg = {{"category_id", s.category_id}, {"score", s.score}, {"embedding", s.embedding}};
    if (const auto* m = std::get_if<RleMask>(&s.mask)) {
      seg["mask"] = {{"height", m->height()}, {"width", m->width()}, {"runs", m->runs()}};
    } else {
      seg["points"] = std::get<std::vector<std::uint32_t>>(s.mask);
    }
    auto& f = by_frame[s.frame];
    if (f.is_null()) f = json::array();
    f.push_back(seg);
  }
  json frames = json::array();
  for (auto& [frame, segs] : by_frame) frames.push_back({{"frame", frame}, {"segments", segs}});
  save_text(path, dump(json{{"frames", frames}}, true));
}

void write_entities(const fs::path& path, const std::vector<EntityNode>& entities) {
  save_text(path, dump(entities_to_json(entities), true));
}

// ---- generator recipes -------------------------------------------------------------

namespace {

Eigen::Vector3d vec3(const json& j, const std::string& where) {
  try {
    const auto v = j.get<std::vector<double>>();
    if (v.size() != 3) schema_error(where, "expected three numbers");
    return {v[0], v[1], v[2]};
  } catch (const json::exception& e) {
    schema_error(where, e.what());
  }
}

SceneRecipe scene_from_json(const json& j, const std::string& where, const Vocabulary& vocab, const Rulebook& rb) {
  SceneRecipe r;
  r.video_id = field<std::string>(j, "video_id", where);
  r.seed = field_or<std::uint64_t>(j, "seed", 0, where);
  r.frame_count = field<FrameIndex>(j, "frame_count", where);
  r.fps = field_or<double>(j, "fps", 30.0, where);
  r.depth_scale = field_or<double>(j, "depth_scale", 1000.0, where);
  r.intrinsics = intrinsics_from_json(field<json>(j, "intrinsics", where), where + "/intrinsics");
  r.cam_to_world = j.contains("cam_to_world") ? transform_from_json(j.at("cam_to_world"), where + "/cam_to_world")
                                              : default_camera_pose();
  r.vocabulary = vocab;
  r.rulebook = rb;
  const auto objects = field<json>(j, "objects", where);
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const std::string w = where + "/objects/" + std::to_string(i);
    ObjectScript o;
    o.category_id = field<ClassId>(objects[i], "category_id", w);
    o.size = vec3(field<json>(objects[i], "size", w), w + "/size");
    if (objects[i].contains("color")) {
      const auto c = field<std::vector<int>>(objects[i], "color", w);
      if (c.size() != 3) schema_error(w + "/color", "expected three channels");
      for (std::size_t ch = 0; ch < 3; ++ch) o.color[ch] = static_cast<std::uint8_t>(std::clamp(c[ch], 0, 255));
    }
    const auto waypoints = field<json>(objects[i], "waypoints", w);
    for (std::size_t k = 0; k < waypoints.size(); ++k) {
      const std::string ww = w + "/waypoints/" + std::to_string(k);
      o.waypoints.push_back({field<FrameIndex>(waypoints[k], "frame", ww), vec3(field<json>(waypoints[k], "position", ww), ww)});
    }
    r.objects.push_back(std::move(o));
  }
  return r;
}

}  // namespace

RecipeFile read_recipe_file(const fs::path& path) {
  const json doc = load_json(path);
  const std::string w = path.string() + "#";
  RecipeFile rf;
  if (doc.contains("vocabulary")) rf.vocabulary = vocabulary_from_json(doc.at("vocabulary"), w + "/vocabulary");
  if (doc.contains("rulebook")) rf.rulebook = rulebook_from_json(doc.at("rulebook"), w + "/rulebook");
  const auto rb_problems = rf.rulebook.problems(rf.vocabulary);
  if (!rb_problems.empty()) schema_error(w + "/rulebook", rb_problems.front());
  if (doc.contains("scenes")) {
    const auto& scenes = doc.at("scenes");
    for (std::size_t i = 0; i < scenes.size(); ++i) {
      rf.scenes.push_back(scene_from_json(scenes[i], w + "/scenes/" + std::to_string(i), rf.vocabulary, rf.rulebook));
    }
  }
  if (doc.contains("random")) {
    const auto& r = doc.at("random");
    const std::string rw = w + "/random";
    rf.random_scene_count = field<std::size_t>(r, "count", rw);
    auto& s = rf.random_spec;
    s.width = field_or<std::uint32_t>(r, "width", s.width, rw);
    s.height = field_or<std::uint32_t>(r, "height", s.height, rw);
    s.focal = field_or<double>(r, "focal", s.focal, rw);
    s.frame_count = field_or<FrameIndex>(r, "frame_count", s.frame_count, rw);
    s.min_objects = field_or<std::size_t>(r, "min_objects", s.min_objects, rw);
    s.max_objects = field_or<std::size_t>(r, "max_objects", s.max_objects, rw);
    s.max_waypoints = field_or<std::size_t>(r, "max_waypoints", s.max_waypoints, rw);
  }
  if (doc.contains("noise")) {
    const auto& n = doc.at("noise");
    const std::string nw = w + "/noise";
    NoiseConfig c;
    c.mask_erode_dilate = field_or<int>(n, "mask_erode_dilate", 0, nw);
    c.label_flip_prob = field_or<double>(n, "label_flip_prob", 0.0, nw);
    c.interval_jitter = field_or<FrameIndex>(n, "interval_jitter", 0, nw);
    c.drop_triplet_prob = field_or<double>(n, "drop_triplet_prob", 0.0, nw);
    const auto mode = field_or<std::string>(n, "confidence_mode", "oracle-descending", nw);
    if (mode == "oracle-descending") {
      c.confidence_mode = ConfidenceMode::OracleDescending;
    } else if (mode == "uniform-random") {
      c.confidence_mode = ConfidenceMode::UniformRandom;
    } else {
      schema_error(nw + "/confidence_mode", "expected oracle-descending or uniform-random");
    }
    const auto problems = c.problems();
    if (!problems.empty()) schema_error(nw, problems.front());
    rf.noise = c;
  }
  if (doc.contains("ks")) rf.ks = field<std::vector<std::size_t>>(doc, "ks", w);
  if (rf.scenes.empty() && rf.random_scene_count == 0) schema_error(w, "recipe defines no scenes");
  return rf;
}

}  // namespace psg4d

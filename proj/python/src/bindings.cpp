#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <string>
#include <vector>

#include "psg4d/error.hpp"
#include "psg4d/geometry.hpp"
#include "psg4d/io.hpp"
#include "psg4d/matching.hpp"
#include "psg4d/metrics.hpp"
#include "psg4d/model.hpp"
#include "psg4d/narrate.hpp"
#include "psg4d/overlap.hpp"
#include "psg4d/parallel.hpp"
#include "psg4d/rle.hpp"
#include "psg4d/rng.hpp"
#include "psg4d/synthgen.hpp"

namespace py = pybind11;
using namespace psg4d;

namespace {

using U8Array = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;
using F64Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

RleMask encode_array(const U8Array& bitmap) {
  if (bitmap.ndim() != 2) throw Error(ErrorCode::DimensionMismatch, "bitmap must be 2-D");
  const auto h = static_cast<std::uint32_t>(bitmap.shape(0));
  const auto w = static_cast<std::uint32_t>(bitmap.shape(1));
  std::vector<std::uint8_t> data(bitmap.data(), bitmap.data() + bitmap.size());
  for (auto& v : data) v = v != 0;
  return RleMask::encode(data, h, w);
}

py::array_t<std::uint8_t> decode_array(const RleMask& mask) {
  py::array_t<std::uint8_t> out({static_cast<py::ssize_t>(mask.height()), static_cast<py::ssize_t>(mask.width())});
  const auto bits = mask.decode();
  std::copy(bits.begin(), bits.end(), out.mutable_data());
  return out;
}

template <typename T>
py::array_t<T> image_array(const std::vector<T>& data, std::uint32_t h, std::uint32_t w, std::size_t channels) {
  std::vector<py::ssize_t> shape{static_cast<py::ssize_t>(h), static_cast<py::ssize_t>(w)};
  if (channels > 1) shape.push_back(static_cast<py::ssize_t>(channels));
  py::array_t<T> out(shape);
  std::copy(data.begin(), data.end(), out.mutable_data());
  return out;
}

py::dict kmetrics_dict(const std::map<std::size_t, OracleRecall>& per_k) {
  py::dict out;
  for (const auto& [k, m] : per_k) {
    py::dict d;
    d["recall"] = m.recall;
    d["mean_recall"] = m.mean_recall;
    d["per_predicate_recall"] = m.per_predicate;
    out[py::int_(k)] = d;
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_psg4d, m) {
  m.doc() = "4D panoptic scene graph toolkit";

  static py::exception<Error> error_type(m, "Error");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::handle(error_type)(e.what());
      exc.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(error_type.ptr(), exc.ptr());
    }
  });

  py::class_<RleMask>(m, "RleMask")
      .def(py::init<>())
      .def_static("encode", &encode_array, py::arg("bitmap"))
      .def_static("from_runs", &RleMask::from_runs, py::arg("height"), py::arg("width"), py::arg("runs"))
      .def_static("empty", &RleMask::empty, py::arg("height"), py::arg("width"))
      .def("decode", &decode_array)
      .def_property_readonly("height", &RleMask::height)
      .def_property_readonly("width", &RleMask::width)
      .def_property_readonly("runs", &RleMask::runs)
      .def_property_readonly("area", &RleMask::area)
      .def("is_empty", &RleMask::is_empty)
      .def(py::self == py::self)
      .def("__repr__", [](const RleMask& r) {
        return "RleMask(" + std::to_string(r.height()) + "x" + std::to_string(r.width()) +
               ", area=" + std::to_string(r.area()) + ")";
      });

  py::class_<IouCounts>(m, "IouCounts")
      .def(py::init<>())
      .def(py::init([](std::uint64_t i, std::uint64_t u) { return IouCounts{i, u}; }), py::arg("intersection"),
           py::arg("union_count"))
      .def_readwrite("intersection", &IouCounts::intersection)
      .def_readwrite("union_count", &IouCounts::union_count)
      .def("iou", &IouCounts::iou)
      .def("exceeds", &IouCounts::exceeds, py::arg("threshold"));

  m.def("frame_iou", &frame_iou, py::arg("a"), py::arg("b"));
  m.def(
      "point_iou",
      [](const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) { return point_iou(a, b); },
      py::arg("a"), py::arg("b"));

  py::class_<ObjectClass>(m, "ObjectClass")
      .def(py::init([](ClassId id, std::string name, bool thing) { return ObjectClass{id, std::move(name), thing}; }),
           py::arg("id"), py::arg("name"), py::arg("is_thing") = true)
      .def_readwrite("id", &ObjectClass::id)
      .def_readwrite("name", &ObjectClass::name)
      .def_readwrite("is_thing", &ObjectClass::is_thing);

  py::class_<PredicateClass>(m, "PredicateClass")
      .def(py::init([](ClassId id, std::string name) { return PredicateClass{id, std::move(name)}; }), py::arg("id"),
           py::arg("name"))
      .def_readwrite("id", &PredicateClass::id)
      .def_readwrite("name", &PredicateClass::name);

  py::class_<Vocabulary>(m, "Vocabulary")
      .def(py::init<>())
      .def(py::init([](std::vector<ObjectClass> o, std::vector<PredicateClass> p) { return Vocabulary{std::move(o), std::move(p)}; }),
           py::arg("object_classes"), py::arg("predicate_classes"))
      .def_readwrite("object_classes", &Vocabulary::object_classes)
      .def_readwrite("predicate_classes", &Vocabulary::predicate_classes)
      .def("problems", &Vocabulary::problems)
      .def("checksum", &Vocabulary::checksum)
      .def(py::self == py::self);

  py::class_<FrameInterval>(m, "FrameInterval")
      .def(py::init([](FrameIndex s, FrameIndex e) { return FrameInterval{s, e}; }), py::arg("start"), py::arg("end"))
      .def_readwrite("start", &FrameInterval::start)
      .def_readwrite("end", &FrameInterval::end)
      .def("length", &FrameInterval::length)
      .def("valid", &FrameInterval::valid);

  m.def("span_iou", &span_iou, py::arg("a"), py::arg("b"));

  py::class_<MaskTube>(m, "MaskTube")
      .def(py::init([](EntityId id, std::uint32_t h, std::uint32_t w, std::map<FrameIndex, RleMask> frames) {
             return MaskTube{id, h, w, std::move(frames)};
           }),
           py::arg("entity_id"), py::arg("height"), py::arg("width"), py::arg("frames") = std::map<FrameIndex, RleMask>{})
      .def_readwrite("entity_id", &MaskTube::entity_id)
      .def_readwrite("height", &MaskTube::height)
      .def_readwrite("width", &MaskTube::width)
      .def_readwrite("frames", &MaskTube::frames);

  py::class_<PointTube>(m, "PointTube")
      .def(py::init([](EntityId id, std::map<FrameIndex, std::vector<std::uint32_t>> frames) {
             return PointTube{id, std::move(frames)};
           }),
           py::arg("entity_id"), py::arg("frames") = std::map<FrameIndex, std::vector<std::uint32_t>>{})
      .def_readwrite("entity_id", &PointTube::entity_id)
      .def_readwrite("frames", &PointTube::frames);

  m.def("volume_iou", py::overload_cast<const Tube&, const Tube&>(&volume_iou), py::arg("a"), py::arg("b"));

  py::class_<EntityNode>(m, "EntityNode")
      .def(py::init([](EntityId id, ClassId cat, Tube tube, double score, std::optional<EmbeddingTube> emb) {
             return EntityNode{id, cat, score, std::move(tube), std::move(emb)};
           }),
           py::arg("entity_id"), py::arg("category_id"), py::arg("tube"), py::arg("score") = 1.0,
           py::arg("embeddings") = std::nullopt)
      .def_readwrite("entity_id", &EntityNode::entity_id)
      .def_readwrite("category_id", &EntityNode::category_id)
      .def_readwrite("score", &EntityNode::score)
      .def_readwrite("tube", &EntityNode::tube)
      .def_readwrite("embeddings", &EntityNode::embeddings);

  py::class_<RelationTriplet>(m, "RelationTriplet")
      .def(py::init([](EntityId s, EntityId o, ClassId p, FrameIndex start, FrameIndex end, double conf) {
             return RelationTriplet{s, o, p, {start, end}, conf};
           }),
           py::arg("subject_id"), py::arg("object_id"), py::arg("predicate_id"), py::arg("start"), py::arg("end"),
           py::arg("confidence") = 1.0)
      .def_readwrite("subject_id", &RelationTriplet::subject_id)
      .def_readwrite("object_id", &RelationTriplet::object_id)
      .def_readwrite("predicate_id", &RelationTriplet::predicate_id)
      .def_readwrite("interval", &RelationTriplet::interval)
      .def_readwrite("confidence", &RelationTriplet::confidence);

  py::class_<SceneGraph4D>(m, "SceneGraph4D")
      .def(py::init([](std::string id, std::vector<EntityNode> e, std::vector<RelationTriplet> t, std::string ref) {
             return SceneGraph4D{std::move(id), std::move(e), std::move(t), std::move(ref)};
           }),
           py::arg("video_id"), py::arg("entities") = std::vector<EntityNode>{},
           py::arg("triplets") = std::vector<RelationTriplet>{}, py::arg("vocabulary_ref") = "")
      .def_readwrite("video_id", &SceneGraph4D::video_id)
      .def_readwrite("entities", &SceneGraph4D::entities)
      .def_readwrite("triplets", &SceneGraph4D::triplets)
      .def_readwrite("vocabulary_ref", &SceneGraph4D::vocabulary_ref)
      .def(py::self == py::self)
      .def("to_json", &graph_to_json);

  py::enum_<ValidationMode>(m, "ValidationMode")
      .value("GroundTruth", ValidationMode::GroundTruth)
      .value("Prediction", ValidationMode::Prediction);

  py::class_<Violation>(m, "Violation")
      .def_property_readonly("code", [](const Violation& v) { return std::string(to_string(v.code)); })
      .def_readonly("id", &Violation::id)
      .def_readonly("detail", &Violation::detail)
      .def("__repr__", [](const Violation& v) {
        return "Violation(" + std::string(to_string(v.code)) + ", " + std::to_string(v.id) + ", " + v.detail + ")";
      });

  m.def(
      "validate_scene_graph",
      [](const SceneGraph4D& g, const Vocabulary& v, ValidationMode mode) { return validate_scene_graph(g, v, mode); },
      py::arg("graph"), py::arg("vocabulary"), py::arg("mode") = ValidationMode::GroundTruth);

  m.def(
      "hungarian",
      [](const Eigen::MatrixXd& cost) {
        const auto a = hungarian(cost);
        return py::make_tuple(a.pairs, a.cost);
      },
      py::arg("cost"), "Minimum-cost assignment; returns (pairs, total_cost).");

  m.def(
      "identity_f1",
      [](const std::vector<EntityId>& truth, const std::vector<EntityId>& pred) { return identity_f1(truth, pred); },
      py::arg("truth"), py::arg("predicted"));

  m.def(
      "recall_at_k",
      [](const SceneGraph4D& pred, const SceneGraph4D& gt, std::size_t k, double thresh) {
        const auto r = recall_at_k(pred, gt, k, thresh);
        py::dict d;
        d["recall"] = r.recall;
        d["per_predicate_recall"] = r.per_predicate;
        d["mean_recall"] = r.recall ? py::cast(mean_recall_at_k(r.per_predicate)) : py::none();
        d["gt_count"] = r.gt_count;
        py::list matched;
        for (const auto& t : r.matched) matched.append(py::make_tuple(t.gt_index, t.pred_index, t.credit));
        d["matched"] = matched;
        return d;
      },
      py::arg("pred"), py::arg("gt"), py::arg("k"), py::arg("viou_threshold") = kDefaultViouThreshold);

  m.def(
      "_evaluate_json",
      [](const std::vector<SceneGraph4D>& preds, const std::vector<SceneGraph4D>& gts, const std::vector<std::size_t>& ks,
         double thresh, unsigned parallelism) {
        if (preds.size() != gts.size()) throw Error(ErrorCode::DimensionMismatch, "preds and gts differ in length");
        std::vector<EvaluationPair> pairs;
        for (std::size_t i = 0; i < gts.size(); ++i) pairs.push_back({&preds[i], &gts[i]});
        py::gil_scoped_release release;
        return report_to_json(evaluate_dataset(pairs, ks, thresh, parallelism));
      },
      py::arg("preds"), py::arg("gts"), py::arg("ks"), py::arg("viou_threshold"), py::arg("parallelism"));

  py::class_<CameraIntrinsics>(m, "CameraIntrinsics")
      .def(py::init([](double fx, double fy, double cx, double cy, std::uint32_t w, std::uint32_t h) {
             return CameraIntrinsics{fx, fy, cx, cy, w, h};
           }),
           py::arg("fx"), py::arg("fy"), py::arg("cx"), py::arg("cy"), py::arg("width"), py::arg("height"))
      .def_readwrite("fx", &CameraIntrinsics::fx)
      .def_readwrite("fy", &CameraIntrinsics::fy)
      .def_readwrite("cx", &CameraIntrinsics::cx)
      .def_readwrite("cy", &CameraIntrinsics::cy)
      .def_readwrite("width", &CameraIntrinsics::width)
      .def_readwrite("height", &CameraIntrinsics::height);

  m.def(
      "depth_to_points",
      [](const F64Array& depth, const U8Array& rgb, const CameraIntrinsics& k, const Eigen::Matrix4d& cam_to_world,
         double lambda) {
        if (depth.ndim() != 2) throw Error(ErrorCode::DimensionMismatch, "depth must be 2-D");
        DepthImage d{static_cast<std::uint32_t>(depth.shape(0)), static_cast<std::uint32_t>(depth.shape(1)),
                     std::vector<double>(depth.data(), depth.data() + depth.size())};
        if (rgb.ndim() != 3 || rgb.shape(0) != depth.shape(0) || rgb.shape(1) != depth.shape(1) || rgb.shape(2) != 3) {
          throw Error(ErrorCode::DimensionMismatch, "rgb must be HxWx3 matching the depth image");
        }
        RgbImage c{d.height, d.width, std::vector<std::uint8_t>(rgb.data(), rgb.data() + rgb.size())};
        const auto frame = depth_frame_to_points(d, c, k, RigidTransform::from_matrix(cam_to_world), lambda);
        const auto n = static_cast<py::ssize_t>(frame.size());
        py::array_t<double> xyz({n, py::ssize_t{3}});
        py::array_t<std::uint8_t> colors({n, py::ssize_t{3}});
        py::array_t<std::uint32_t> pixels({n, py::ssize_t{2}});
        auto x = xyz.mutable_unchecked<2>();
        auto col = colors.mutable_unchecked<2>();
        auto px = pixels.mutable_unchecked<2>();
        for (py::ssize_t i = 0; i < n; ++i) {
          for (int j = 0; j < 3; ++j) {
            x(i, j) = frame.points[i].position[j];
            col(i, j) = frame.points[i].rgb[j];
          }
          px(i, 0) = frame.source_pixels[i].row;
          px(i, 1) = frame.source_pixels[i].col;
        }
        return py::make_tuple(xyz, colors, pixels);
      },
      py::arg("depth"), py::arg("rgb"), py::arg("intrinsics"), py::arg("cam_to_world") = Eigen::Matrix4d::Identity(),
      py::arg("lambda_") = kDefaultDepthThreshold, "Returns (xyz, rgb, source_pixels) arrays.");

  m.def("default_parallelism", &default_parallelism);
  m.def("default_vocabulary", &default_vocabulary);

  py::class_<RandomSceneSpec>(m, "RandomSceneSpec")
      .def(py::init<>())
      .def_readwrite("width", &RandomSceneSpec::width)
      .def_readwrite("height", &RandomSceneSpec::height)
      .def_readwrite("focal", &RandomSceneSpec::focal)
      .def_readwrite("frame_count", &RandomSceneSpec::frame_count)
      .def_readwrite("min_objects", &RandomSceneSpec::min_objects)
      .def_readwrite("max_objects", &RandomSceneSpec::max_objects)
      .def_readwrite("max_waypoints", &RandomSceneSpec::max_waypoints);

  py::class_<SceneRecipe>(m, "SceneRecipe")
      .def_readwrite("video_id", &SceneRecipe::video_id)
      .def_readwrite("seed", &SceneRecipe::seed)
      .def_readwrite("frame_count", &SceneRecipe::frame_count)
      .def_readwrite("fps", &SceneRecipe::fps)
      .def_readwrite("depth_scale", &SceneRecipe::depth_scale)
      .def_readwrite("intrinsics", &SceneRecipe::intrinsics)
      .def_readwrite("vocabulary", &SceneRecipe::vocabulary)
      .def_property_readonly("object_count", [](const SceneRecipe& r) { return r.objects.size(); })
      .def("problems", &SceneRecipe::problems);

  m.def(
      "random_recipe",
      [](const RandomSceneSpec& spec, std::uint64_t seed, const std::string& id) { return random_recipe(spec, seed, id); },
      py::arg("spec"), py::arg("seed"), py::arg("video_id"));

  py::class_<GeneratedScene>(m, "GeneratedScene")
      .def_readonly("gt", &GeneratedScene::gt)
      .def_property_readonly("frame_count", [](const GeneratedScene& s) { return s.frames.size(); })
      .def(
          "depth",
          [](const GeneratedScene& s, std::size_t i) {
            const auto& d = s.frames.at(i).depth;
            return image_array(d.meters, d.height, d.width, 1);
          },
          py::arg("frame"), "Depth in meters as an HxW float array.")
      .def(
          "raw_depth",
          [](const GeneratedScene& s, std::size_t i) {
            const auto& f = s.frames.at(i);
            return image_array(f.raw_depth, f.depth.height, f.depth.width, 1);
          },
          py::arg("frame"))
      .def(
          "rgb",
          [](const GeneratedScene& s, std::size_t i) {
            const auto& c = s.frames.at(i).rgb;
            return image_array(c.data, c.height, c.width, 3);
          },
          py::arg("frame"));

  m.def("generate_scene", &generate_scene, py::arg("recipe"));

  py::enum_<ConfidenceMode>(m, "ConfidenceMode")
      .value("OracleDescending", ConfidenceMode::OracleDescending)
      .value("UniformRandom", ConfidenceMode::UniformRandom);

  py::class_<NoiseConfig>(m, "NoiseConfig")
      .def(py::init<>())
      .def_readwrite("mask_erode_dilate", &NoiseConfig::mask_erode_dilate)
      .def_readwrite("label_flip_prob", &NoiseConfig::label_flip_prob)
      .def_readwrite("interval_jitter", &NoiseConfig::interval_jitter)
      .def_readwrite("confidence_mode", &NoiseConfig::confidence_mode)
      .def_readwrite("drop_triplet_prob", &NoiseConfig::drop_triplet_prob)
      .def("problems", &NoiseConfig::problems);

  m.def(
      "perturb_predictions",
      [](const SceneGraph4D& gt, const Vocabulary& vocab, const NoiseConfig& noise, std::uint64_t seed,
         const std::vector<std::size_t>& ks, double thresh) {
        auto p = perturb_predictions(gt, vocab, noise, seed, ks, thresh);
        return py::make_tuple(std::move(p.pred), kmetrics_dict(p.oracle));
      },
      py::arg("gt"), py::arg("vocabulary"), py::arg("noise"), py::arg("seed"),
      py::arg("ks") = std::vector<std::size_t>{20, 50, 100}, py::arg("viou_threshold") = kDefaultViouThreshold,
      "Returns (prediction, oracle) where oracle maps K to the expected metrics.");

  m.def(
      "narrate",
      [](const SceneGraph4D& g, const Vocabulary& v, double window, double fps, std::optional<FrameIndex> frames) {
        std::vector<std::string> prompts;
        for (const auto& w : narrate(g, v, window, fps, frames)) prompts.push_back(format_prompt(w, window));
        return prompts;
      },
      py::arg("graph"), py::arg("vocabulary"), py::arg("window_seconds") = 30.0, py::arg("fps") = 30.0,
      py::arg("frame_count") = std::nullopt, "One prompt string per time window.");

  py::class_<Dataset>(m, "Dataset")
      .def_readonly("vocabulary", &Dataset::vocabulary)
      .def_readonly("metadata", &Dataset::metadata)
      .def_property_readonly("video_ids",
                             [](const Dataset& d) {
                               std::vector<std::string> ids;
                               for (const auto& v : d.videos) ids.push_back(v.manifest.video_id);
                               return ids;
                             })
      .def_property_readonly("graphs", [](const Dataset& d) {
        std::vector<SceneGraph4D> gs;
        for (const auto& v : d.videos) gs.push_back(v.graph);
        return gs;
      });

  m.def(
      "read_dataset",
      [](const fs::path& root) {
        auto r = read_dataset(root);
        py::list violations;
        for (const auto& fv : r.violations) {
          violations.append(py::make_tuple(fv.file, std::string(to_string(fv.violation.code)), fv.violation.id,
                                           fv.violation.detail));
        }
        return py::make_tuple(std::move(r.dataset), violations);
      },
      py::arg("root"), "Returns (dataset, violations) with violations as (file, code, id, detail) tuples.");
  m.def("read_predictions", &read_predictions, py::arg("path"));
  m.def("write_predictions", &write_predictions, py::arg("path"), py::arg("vocabulary_ref"), py::arg("graphs"));

  py::class_<SplitMix64>(m, "SplitMix64")
      .def(py::init<std::uint64_t>(), py::arg("seed"))
      .def("next", &SplitMix64::next)
      .def("uniform", &SplitMix64::uniform)
      .def("split", &SplitMix64::split, py::arg("stream"));
}

#include "psg4d/metrics.hpp"

#include <algorithm>
#include <cstdlib>
#include <numeric>
#include <set>
#include <thread>
#include <unordered_map>

#include "psg4d/error.hpp"
#include "psg4d/overlap.hpp"
#include "psg4d/parallel.hpp"

namespace psg4d {

unsigned default_parallelism() {
  if (const char* env = std::getenv(kJobsEnvVar)) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1U, std::thread::hardware_concurrency());
}

namespace {

// Lazily computed vIOU between prediction and ground-truth entities.
class TubeOverlapCache {
 public:
  TubeOverlapCache(const SceneGraph4D& pred, const SceneGraph4D& gt) : pred_(pred), gt_(gt) {}

  bool exceeds(std::size_t pred_entity, std::size_t gt_entity, double threshold) {
    const auto key = pred_entity * gt_.entities.size() + gt_entity;
    auto it = cache_.find(key);
    if (it == cache_.end()) {
      it = cache_.emplace(key, volume_iou(pred_.entities[pred_entity].tube, gt_.entities[gt_entity].tube)).first;
    }
    return it->second.exceeds(threshold);
  }

 private:
  const SceneGraph4D& pred_;
  const SceneGraph4D& gt_;
  std::unordered_map<std::size_t, IouCounts> cache_;
};

std::unordered_map<EntityId, std::size_t> index_entities(const SceneGraph4D& g) {
  std::unordered_map<EntityId, std::size_t> out;
  for (std::size_t i = 0; i < g.entities.size(); ++i) out.emplace(g.entities[i].entity_id, i);
  return out;
}

RecallResult recall_with_cache(const SceneGraph4D& pred, const SceneGraph4D& gt, std::size_t k,
                               double viou_threshold, TubeOverlapCache& overlaps) {
  if (pred.vocabulary_ref != gt.vocabulary_ref) {
    throw Error(ErrorCode::VocabularyMismatch, "prediction written against '" + pred.vocabulary_ref +
                                                   "', ground truth against '" + gt.vocabulary_ref + "'");
  }
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");

  RecallResult result;
  result.gt_count = gt.triplets.size();

  std::map<ClassId, std::pair<double, std::size_t>> by_predicate;  // credit sum, gt count
  for (const auto& t : gt.triplets) by_predicate[t.predicate_id].second += 1;

  std::vector<std::size_t> order(pred.triplets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return pred.triplets[a].confidence > pred.triplets[b].confidence;
  });
  if (order.size() > k) order.resize(k);

  const auto pred_index = index_entities(pred);
  const auto gt_index = index_entities(gt);
  std::vector<char> gt_taken(gt.triplets.size(), 0);
  double total = 0.0;

  for (const std::size_t p : order) {
    const auto& pt = pred.triplets[p];
    const auto ps = pred_index.find(pt.subject_id);
    const auto po = pred_index.find(pt.object_id);
    if (ps == pred_index.end() || po == pred_index.end()) continue;
    const auto& p_subject = pred.entities[ps->second];
    const auto& p_object = pred.entities[po->second];

    for (std::size_t g = 0; g < gt.triplets.size(); ++g) {
      if (gt_taken[g]) continue;
      const auto& gtt = gt.triplets[g];
      if (gtt.predicate_id != pt.predicate_id) continue;
      const auto gs = gt_index.find(gtt.subject_id);
      const auto go = gt_index.find(gtt.object_id);
      if (gs == gt_index.end() || go == gt_index.end()) continue;
      if (gt.entities[gs->second].category_id != p_subject.category_id ||
          gt.entities[go->second].category_id != p_object.category_id) {
        continue;
      }
      const SpanOverlap span = span_overlap(pt.interval, gtt.interval);
      if (span.overlap <= 0) continue;
      if (!overlaps.exceeds(ps->second, gs->second, viou_threshold) ||
          !overlaps.exceeds(po->second, go->second, viou_threshold)) {
        continue;
      }
      gt_taken[g] = 1;
      const double credit = span.iou();
      total += credit;
      by_predicate[gtt.predicate_id].first += credit;
      result.matched.push_back({g, p, credit});
      break;
    }
  }

  if (!gt.triplets.empty()) result.recall = total / static_cast<double>(gt.triplets.size());
  for (const auto& [pid, v] : by_predicate) {
    result.per_predicate.emplace(pid, v.first / static_cast<double>(v.second));
  }
  return result;
}

}  // namespace

RecallResult recall_at_k(const SceneGraph4D& pred, const SceneGraph4D& gt, std::size_t k,
                         double viou_threshold) {
  TubeOverlapCache overlaps(pred, gt);
  return recall_with_cache(pred, gt, k, viou_threshold, overlaps);
}

double mean_recall_at_k(const std::map<ClassId, double>& per_predicate) {
  if (per_predicate.empty()) {
    throw Error(ErrorCode::NoGroundTruth, "no predicate occurs in the ground truth");
  }
  double sum = 0.0;
  for (const auto& [_, r] : per_predicate) sum += r;
  return sum / static_cast<double>(per_predicate.size());
}

EvaluationReport evaluate_dataset(std::span<const EvaluationPair> pairs, std::span<const std::size_t> ks,
                                  double viou_threshold, unsigned parallelism) {
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return pairs[a].gt->video_id < pairs[b].gt->video_id;
  });
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (pairs[order[i]].gt->video_id == pairs[order[i - 1]].gt->video_id) {
      throw Error(ErrorCode::DuplicateVideoId, pairs[order[i]].gt->video_id);
    }
  }
  for (const auto k : ks) {
    if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  }

  EvaluationReport report;
  report.ks.assign(ks.begin(), ks.end());
  std::sort(report.ks.begin(), report.ks.end());
  report.ks.erase(std::unique(report.ks.begin(), report.ks.end()), report.ks.end());
  report.viou_threshold = viou_threshold;
  report.per_video.resize(pairs.size());

  parallel_for(order.size(), parallelism, [&](std::size_t slot) {
    const EvaluationPair& pair = pairs[order[slot]];
    VideoMetrics& vm = report.per_video[slot];
    vm.video_id = pair.gt->video_id;
    vm.gt_triplets = pair.gt->triplets.size();
    TubeOverlapCache overlaps(*pair.pred, *pair.gt);
    for (const auto k : report.ks) {
      RecallResult r = recall_with_cache(*pair.pred, *pair.gt, k, viou_threshold, overlaps);
      KMetrics km;
      km.recall = r.recall;
      if (!r.per_predicate.empty()) km.mean_recall = mean_recall_at_k(r.per_predicate);
      km.per_predicate = std::move(r.per_predicate);
      vm.per_k.emplace(k, std::move(km));
      vm.matched.emplace(k, std::move(r.matched));
    }
  });

  for (const auto k : report.ks) {
    KMetrics agg;
    double recall_sum = 0.0, mean_sum = 0.0;
    std::size_t videos = 0;
    std::map<ClassId, std::pair<double, std::size_t>> pred_sum;
    auto& matched = report.matched[k];
    for (const auto& vm : report.per_video) {
      const KMetrics& km = vm.per_k.at(k);
      for (const auto& m : vm.matched.at(k)) matched.push_back({vm.video_id, m});
      if (!km.recall) continue;
      ++videos;
      recall_sum += *km.recall;
      mean_sum += *km.mean_recall;
      for (const auto& [pid, r] : km.per_predicate) {
        pred_sum[pid].first += r;
        pred_sum[pid].second += 1;
      }
    }
    if (videos > 0) {
      agg.recall = recall_sum / static_cast<double>(videos);
      agg.mean_recall = mean_sum / static_cast<double>(videos);
    }
    for (const auto& [pid, v] : pred_sum) agg.per_predicate.emplace(pid, v.first / static_cast<double>(v.second));
    report.per_k.emplace(k, std::move(agg));
  }
  return report;
}

}  // namespace psg4d

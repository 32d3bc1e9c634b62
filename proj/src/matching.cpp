#include <algorithm>
#include <map>

#include "psg4d/error.hpp"
#include "psg4d/matching.hpp"
#include "psg4d/overlap.hpp"

namespace psg4d {

std::map<std::size_t, TubeMatch> assign_tubes(std::span<const Tube> pred, std::span<const Tube> gt,
                                              double min_viou) {
  std::map<std::size_t, TubeMatch> out;
  if (pred.empty() || gt.empty()) {
    // Kind consistency still applies within each side.
    for (std::size_t i = 1; i < pred.size(); ++i) volume_iou(pred[0], pred[i]);
    return out;
  }
  std::vector<IouCounts> ious(gt.size() * pred.size());
  Eigen::MatrixXd cost(static_cast<Eigen::Index>(gt.size()), static_cast<Eigen::Index>(pred.size()));
  for (std::size_t g = 0; g < gt.size(); ++g) {
    for (std::size_t p = 0; p < pred.size(); ++p) {
      const IouCounts c = volume_iou(pred[p], gt[g]);
      ious[g * pred.size() + p] = c;
      cost(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(p)) = 1.0 - c.iou();
    }
  }
  for (const auto& [g, p] : hungarian(cost).pairs) {
    const IouCounts c = ious[g * pred.size() + p];
    if (c.iou() < min_viou) continue;
    out.emplace(g, TubeMatch{p, c});
  }
  return out;
}

double identity_f1(std::span<const EntityId> truth, std::span<const EntityId> predicted) {
  if (truth.size() != predicted.size()) {
    throw Error(ErrorCode::DimensionMismatch, "identity lists differ in length");
  }
  if (truth.empty()) return 1.0;
  std::map<EntityId, std::size_t> t_index, p_index;
  for (const auto id : truth) t_index.emplace(id, t_index.size());
  for (const auto id : predicted) p_index.emplace(id, p_index.size());
  Eigen::MatrixXd overlap = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(t_index.size()),
                                                  static_cast<Eigen::Index>(p_index.size()));
  for (std::size_t k = 0; k < truth.size(); ++k) {
    overlap(static_cast<Eigen::Index>(t_index[truth[k]]),
            static_cast<Eigen::Index>(p_index[predicted[k]])) += 1.0;
  }
  const Assignment best = hungarian(-overlap);
  const double idtp = -best.cost;
  return 2.0 * idtp / static_cast<double>(truth.size() + predicted.size());
}

}  // namespace psg4d

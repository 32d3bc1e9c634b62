#include "psg4d/narrate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <tuple>

#include "psg4d/error.hpp"

namespace psg4d {

namespace {

double round_tenth(double seconds) { return std::round(seconds * 10.0) / 10.0; }

std::string seconds_text(double seconds) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f", seconds == 0.0 ? 0.0 : seconds);
  return buf;
}

// Compact rendering for the prompt header: 30 instead of 30.0, 2.5 kept.
std::string number_text(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.15g", value);
  return buf;
}

struct Line {
  double start;
  std::string subject, predicate, object;
  double end;
  auto key() const { return std::tie(start, subject, predicate, object, end); }
};

}  // namespace

std::vector<NarrationWindow> narrate(const SceneGraph4D& graph, const Vocabulary& vocab, double window_seconds,
                                     double fps, std::optional<FrameIndex> frame_count) {
  if (!(fps > 0.0) || !std::isfinite(fps)) throw Error(ErrorCode::InvalidArgument, "fps must be positive");
  if (!(window_seconds > 0.0) || !std::isfinite(window_seconds)) {
    throw Error(ErrorCode::InvalidArgument, "window length must be positive");
  }

  std::map<ClassId, std::string> objects, predicates;
  for (const auto& c : vocab.object_classes) objects.emplace(c.id, c.name);
  for (const auto& c : vocab.predicate_classes) predicates.emplace(c.id, c.name);
  auto name_of = [](const std::map<ClassId, std::string>& names, ClassId id) {
    const auto it = names.find(id);
    return it == names.end() ? "#" + std::to_string(id) : it->second;
  };
  auto entity_name = [&](EntityId id) {
    const EntityNode* e = graph.find_entity(id);
    return e ? name_of(objects, e->category_id) : "#" + std::to_string(id);
  };

  FrameIndex total = frame_count.value_or(0);
  if (!frame_count) {
    for (const auto& t : graph.triplets) total = std::max(total, t.interval.end);
  }
  const double duration = static_cast<double>(total) / fps;
  const auto count = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(duration / window_seconds - 1e-12)));

  std::vector<NarrationWindow> windows(count);
  for (std::size_t w = 0; w < count; ++w) {
    auto& win = windows[w];
    win.start_seconds = static_cast<double>(w) * window_seconds;
    win.end_seconds = static_cast<double>(w + 1) * window_seconds;
    std::vector<Line> lines;
    for (const auto& t : graph.triplets) {
      const double s = static_cast<double>(t.interval.start) / fps;
      const double e = static_cast<double>(t.interval.end) / fps;
      if (!(s < win.end_seconds && e > win.start_seconds)) continue;
      lines.push_back({round_tenth(std::max(s, win.start_seconds)), entity_name(t.subject_id),
                       name_of(predicates, t.predicate_id), entity_name(t.object_id),
                       round_tenth(std::min(e, win.end_seconds))});
    }
    std::sort(lines.begin(), lines.end(), [](const Line& a, const Line& b) { return a.key() < b.key(); });
    for (const auto& l : lines) {
      win.lines.push_back("from " + seconds_text(l.start) + "s to " + seconds_text(l.end) + "s, " + l.subject + " " +
                          l.predicate + " " + l.object);
    }
    if (win.lines.empty()) win.lines.emplace_back("nothing observed");
  }
  return windows;
}

std::string format_prompt(const NarrationWindow& window, double window_seconds) {
  std::string out = "In the past " + number_text(window_seconds) + "s, what I captured is: ";
  for (std::size_t i = 0; i < window.lines.size(); ++i) {
    if (i > 0) out += ", ";
    out += window.lines[i];
  }
  return out + ".";
}

}  // namespace psg4d

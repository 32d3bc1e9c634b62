#pragma once

#include <optional>
#include <string>
#include <vector>

#include "psg4d/model.hpp"

namespace psg4d {

struct NarrationWindow {
  double start_seconds = 0.0;
  double end_seconds = 0.0;
  /// One line per overlapping triplet, or the single line "nothing observed".
  std::vector<std::string> lines;
};

/// Splits the video into consecutive windows of `window_seconds` and lists the
/// relations active in each, with times clamped to the window and rounded to
/// 0.1 s. The video length is `frame_count` when given, otherwise the latest
/// triplet end; there is always at least one window. Unknown class ids are
/// rendered as "#<id>". Throws InvalidArgument for non-positive fps or window.
std::vector<NarrationWindow> narrate(const SceneGraph4D& graph, const Vocabulary& vocab, double window_seconds,
                                     double fps, std::optional<FrameIndex> frame_count = std::nullopt);

/// "In the past {W}s, what I captured is: line, line."
std::string format_prompt(const NarrationWindow& window, double window_seconds);

}  // namespace psg4d

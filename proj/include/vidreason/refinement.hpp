#pragma once

#include <span>
#include <vector>

#include "vidreason/graph.hpp"

namespace vidreason {

struct RefinementConfig {
  int window_width = 5;  // theta, in frames
};

// Sliding-window state refinement. Any run of equal values shorter than the
// window (other than the first run) takes the value of the latest stable run.
// kUndefinedState entries at the front are left alone. Throws ValidationError
// when window_width < 1.
std::vector<int> refine_track(std::span<const int> series, const RefinementConfig& cfg);

// Refines every node and edge track independently; objects and boxes are
// copied unchanged.
VideoGraph refine_video_graph(const VideoGraph& graph, const RefinementConfig& cfg);

}  // namespace vidreason

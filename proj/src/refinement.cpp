#include "vidreason/refinement.hpp"

#include "vidreason/error.hpp"

namespace vidreason {

std::vector<int> refine_track(std::span<const int> series, const RefinementConfig& cfg) {
  if (cfg.window_width < 1) throw ValidationError("refinement window must be >= 1");
  std::vector<int> out(series.begin(), series.end());
  const auto width = static_cast<std::size_t>(cfg.window_width);

  std::size_t start = 0;
  while (start < out.size() && out[start] == kUndefinedState) ++start;
  if (start == out.size()) return out;

  // The first run is always stable; a later run becomes the stable reference
  // only when it lasts at least `width` frames.
  int stable = out[start];
  std::size_t i = start;
  while (i < out.size() && out[i] == stable) ++i;
  while (i < out.size()) {
    std::size_t end = i;
    while (end < out.size() && series[end] == series[i]) ++end;
    if (end - i >= width) {
      stable = series[i];
    } else {
      for (std::size_t k = i; k < end; ++k) out[k] = stable;
    }
    i = end;
  }
  return out;
}

VideoGraph refine_video_graph(const VideoGraph& graph, const RefinementConfig& cfg) {
  std::map<NodeKey, StateTrack> nodes;
  for (const auto& [key, track] : graph.node_tracks()) nodes.emplace(key, refine_track(track, cfg));
  std::map<EdgeKey, StateTrack> edges;
  for (const auto& [key, track] : graph.edge_tracks()) edges.emplace(key, refine_track(track, cfg));
  return graph.with_tracks(std::move(nodes), std::move(edges));
}

}  // namespace vidreason

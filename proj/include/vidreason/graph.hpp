#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vidreason/knowledge_base.hpp"

namespace vidreason {

// Frame-local pixel box.
struct BBox {
  double x = 0;
  double y = 0;
  double w = 0;
  double h = 0;
  bool operator==(const BBox&) const = default;
};

struct ObjectInstance {
  std::string id;
  std::string category;
  int first_frame = 0;        // frame of first appearance in the stream
  std::map<int, BBox> track;  // frame -> box, possibly partial
};

struct NodeKey {
  std::string instance;
  std::size_t domain = 0;  // attribute domain index
  auto operator<=>(const NodeKey&) const = default;
};

struct EdgeKey {
  std::string subject;
  std::string object;
  std::size_t domain = 0;  // relationship domain index
  auto operator<=>(const EdgeKey&) const = default;
};

// Per-frame state values. A track stores, for frames 1..T, the index of the
// value within its domain pair, or kUndefinedState before first observation.
inline constexpr int kUndefinedState = -1;
using StateTrack = std::vector<int>;

struct SceneGraph {
  int frame = 0;
  std::map<NodeKey, std::string> node_states;
  std::map<EdgeKey, std::string> edge_states;
};

// ---- Observation stream (JSON Lines) ----

struct ObservedObject {
  std::string id;
  std::string category;
  std::optional<BBox> bbox;
  bool operator==(const ObservedObject&) const = default;
};

struct ObservedAttribute {
  std::string id;
  std::string value;
  bool operator==(const ObservedAttribute&) const = default;
};

struct ObservedRelationship {
  std::string subject;
  std::string object;
  std::string value;
  bool operator==(const ObservedRelationship&) const = default;
};

struct FrameObservation {
  int frame = 0;
  std::vector<ObservedObject> objects;
  std::vector<ObservedAttribute> attributes;
  std::vector<ObservedRelationship> relationships;
  std::string origin;  // "file:line", used in error messages only

  bool operator==(const FrameObservation& other) const {
    return frame == other.frame && objects == other.objects && attributes == other.attributes &&
           relationships == other.relationships;
  }
};

// One record per non-blank line. Throws ParseError with "source:line".
std::vector<FrameObservation> parse_observations(std::string_view jsonl,
                                                 const std::string& source = "observations");
std::string serialize_observation(const FrameObservation& record);
std::string serialize_observations(const std::vector<FrameObservation>& records);

// ---- Video graph ----

struct TransitionEvent {
  TransitionKind kind = TransitionKind::attribute;
  std::vector<std::string> participants;  // (instance) or (subject, object)
  std::size_t domain = 0;
  std::string pre;
  std::string eff;
  int time = 0;  // first frame showing `eff`
  std::vector<std::optional<BBox>> locations;
  bool operator==(const TransitionEvent&) const = default;
};

class VideoGraph {
 public:
  int frame_count() const { return frame_count_; }
  const std::map<std::string, ObjectInstance>& objects() const { return objects_; }
  const std::map<NodeKey, StateTrack>& node_tracks() const { return node_tracks_; }
  const std::map<EdgeKey, StateTrack>& edge_tracks() const { return edge_tracks_; }
  const std::vector<std::array<std::string, 2>>& attribute_pairs() const {
    return attribute_pairs_;
  }
  const std::vector<std::array<std::string, 2>>& relationship_pairs() const {
    return relationship_pairs_;
  }

  const ObjectInstance& object(const std::string& id) const;

  // Box at `frame`, else the latest one before it.
  std::optional<BBox> location(const std::string& id, int frame) const;

  SceneGraph scene(int frame) const;
  std::vector<SceneGraph> scenes() const;

  // (frame, value) for every frame where the state is defined. Throws
  // ValidationError for an unknown instance and DomainError for a domain
  // that does not apply to it.
  std::vector<std::pair<int, std::string>> attribute_track(const std::string& id,
                                                           std::size_t domain) const;
  std::vector<std::pair<int, std::string>> relationship_track(const std::string& subject,
                                                              const std::string& object,
                                                              std::size_t domain) const;

  // Same objects and boxes, new state tracks. Track lengths must equal T.
  VideoGraph with_tracks(std::map<NodeKey, StateTrack> nodes,
                         std::map<EdgeKey, StateTrack> edges) const;

 private:
  friend VideoGraph build_video_graph(const KnowledgeBase&, const std::vector<FrameObservation>&,
                                      std::optional<int>);

  int frame_count_ = 0;
  std::map<std::string, ObjectInstance> objects_;
  std::map<NodeKey, StateTrack> node_tracks_;
  std::map<EdgeKey, StateTrack> edge_tracks_;
  std::vector<std::array<std::string, 2>> attribute_pairs_;
  std::vector<std::array<std::string, 2>> relationship_pairs_;
  // Attribute domains applicable per instance, for attribute_track checks.
  std::map<std::string, std::vector<std::size_t>> applicable_attributes_;
  std::vector<RelationshipDomain> relationship_domains_;
};

// Build the graph from observation records (any order; frames may be sparse).
// Missing states carry the last observed value forward. `frame_count`
// overrides T, which otherwise is the largest observed frame.
VideoGraph build_video_graph(const KnowledgeBase& kb, const std::vector<FrameObservation>& records,
                             std::optional<int> frame_count = std::nullopt);

// Dense per-frame records of every defined state and every known box.
std::vector<FrameObservation> to_observations(const VideoGraph& graph);

// One event per adjacent unequal pair of defined values, sorted by
// (time, participants, kind, domain).
std::vector<TransitionEvent> detect_transitions(const VideoGraph& graph);

}  // namespace vidreason

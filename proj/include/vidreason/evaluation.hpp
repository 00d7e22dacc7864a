#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vidreason/graph.hpp"
#include "vidreason/knowledge_base.hpp"
#include "vidreason/reasoner.hpp"

namespace vidreason {

// ---- Clip-level scoring ----

struct GroundTruthClip {
  std::string id;
  int start = 0;
  int end = 0;  // inclusive
  std::string action;
  bool operator==(const GroundTruthClip&) const = default;
};

// CSV with header `clip_id,start,end,action`.
std::vector<GroundTruthClip> parse_clips_csv(std::string_view text,
                                             const std::string& source = "clips");
// Unique ids, start <= end, non-overlapping ranges, labels in `vocab` when given.
void validate_clips(std::span<const GroundTruthClip> clips, const Vocabulary* vocab = nullptr);

// clip id -> predicted action names
using ClipPredictions = std::map<std::string, std::vector<std::string>>;

// Buckets events into the clip whose frame range holds the event time.
// Events outside every clip are dropped.
ClipPredictions assign_events_to_clips(std::span<const ActionEvent> events,
                                       std::span<const GroundTruthClip> clips);

// {clip_id: [action, ...]} or a reasoning output with an "events" array
// (bucketed by time into `clips`).
ClipPredictions parse_predictions(std::string_view text, std::span<const GroundTruthClip> clips,
                                  const std::string& source = "predictions");

struct ActionScore {
  std::size_t clips = 0;      // ground-truth clips with this label
  std::size_t recalled = 0;
  std::size_t predicted = 0;  // events predicted with this label
  std::size_t correct = 0;    // of those, inside a clip with this label
  double recall = 0.0;        // recalled / clips (1 when clips == 0)
  double precision = 1.0;     // correct / predicted (1 when predicted == 0)
};

struct ClipMetrics {
  std::map<std::string, ActionScore> per_action;
  std::size_t clips = 0;
  std::size_t recalled = 0;
  std::size_t predicted = 0;
  std::size_t correct = 0;
  double recall = 0.0;        // clip-count-weighted mean of per-action recall
  double precision = 1.0;     // correct / predicted over all events
  double macro_recall = 0.0;  // unweighted mean over actions that have clips
};

// A clip is recalled when its label is among its predictions; a null clip
// is recalled only with zero predictions. Throws ValidationError when the
// prediction ids differ from the clip ids.
ClipMetrics score_clips(const ClipPredictions& predictions, std::span<const GroundTruthClip> clips);

// sum(w_a * v_a) / sum(w_a) over the keys of `weights`; every key must be
// present in `values`.
double weighted_mean(const std::map<std::string, double>& values,
                     const std::map<std::string, double>& weights);

nlohmann::ordered_json to_json(const ClipMetrics& metrics);

// ---- Scenario synthesis ----

struct ScriptObject {
  std::string id;
  std::string category;
  BBox bbox{0, 0, 1, 1};
  int appear = 1;  // first frame the object is declared
  bool operator==(const ScriptObject&) const = default;
};

// Piecewise-constant timeline: `value` holds from `start` until the next
// segment. Undefined before the first segment.
struct StateSegment {
  int start = 1;
  std::string value;
  bool operator==(const StateSegment&) const = default;
};

struct AttributeTimeline {
  std::string id;
  std::vector<StateSegment> segments;
  bool operator==(const AttributeTimeline&) const = default;
};

struct RelationshipTimeline {
  std::string subject;
  std::string object;
  std::vector<StateSegment> segments;
  bool operator==(const RelationshipTimeline&) const = default;
};

struct NoiseModel {
  double flip_probability = 0.0;     // per frame per track, in [0, 0.5)
  double dropout_probability = 0.0;  // per frame per track, in [0, 1)
  // Isolated noise only disturbs a frame when no true state change and no
  // other disturbance lies within `isolation_window` frames of it.
  bool isolated = true;
  int isolation_window = 5;
  std::uint64_t seed = 0;
  bool operator==(const NoiseModel&) const = default;
};

struct ScenarioScript {
  int frames = 0;
  std::vector<ScriptObject> objects;
  std::vector<AttributeTimeline> attributes;
  std::vector<RelationshipTimeline> relationships;
  NoiseModel noise;
  bool operator==(const ScenarioScript&) const = default;
};

ScenarioScript parse_scenario_script(std::string_view text, const std::string& source = "script");
nlohmann::ordered_json to_json(const ScenarioScript& script);

// Throws ValidationError / DomainError when the script breaks a knowledge
// base domain or its own invariants.
void validate_scenario_script(const KnowledgeBase& kb, const ScenarioScript& script);

struct SynthesisResult {
  std::vector<FrameObservation> observations;  // noisy, sparse (changes only)
  std::vector<TransitionEvent> transitions;    // from the noise-free timelines
  std::vector<ActionEvent> events;             // rule-explained clean transitions
};

// Seeded: identical script and seed give identical output.
SynthesisResult synthesize_observations(const KnowledgeBase& kb, const ScenarioScript& script);

struct RandomScenarioConfig {
  int frames = 300;
  int min_run = 10;
  int max_run = 60;
  std::vector<std::string> categories;  // one instance per entry, named <category>_<n>
  NoiseModel noise;
  std::uint64_t seed = 0;
};

// Random script with every applicable attribute and relationship track
// populated by runs of length in [min_run, max_run] (the last run may be
// longer).
ScenarioScript random_scenario(const KnowledgeBase& kb, const RandomScenarioConfig& cfg);

}  // namespace vidreason

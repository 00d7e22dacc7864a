#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vidreason/classifiers.hpp"
#include "vidreason/graph.hpp"
#include "vidreason/knowledge_base.hpp"
#include "vidreason/refinement.hpp"

namespace vidreason {

enum class Backend { rule, learned };

std::string_view to_string(Backend backend);
Backend parse_backend(std::string_view name);

struct ActionHeads {
  LinearHead aar;
  LinearHead rar;
};

struct ReasonerConfig {
  Backend backend = Backend::rule;
  RefinementConfig refinement;
  bool emit_null = false;  // keep null-classified transitions in the result
};

struct Participant {
  std::string id;
  std::string category;
  bool operator==(const Participant&) const = default;
};

// An explained transition: who, when, where and how.
struct ActionEvent {
  std::string action;
  TransitionKind kind = TransitionKind::attribute;
  std::vector<Participant> participants;  // (instance) or (subject, object)
  int time = 0;
  std::vector<std::optional<BBox>> locations;
  std::string pre;
  std::string eff;
  Backend backend = Backend::rule;
  bool operator==(const ActionEvent&) const = default;
};

struct Diagnostic {
  TransitionEvent transition;
  std::string message;
};

struct ReasoningResult {
  std::vector<ActionEvent> events;
  std::vector<TransitionEvent> null_transitions;  // filled only with emit_null
  std::vector<Diagnostic> diagnostics;            // unexplainable transitions
  std::size_t transition_count = 0;
  std::size_t null_count = 0;
};

// Refine, detect transitions, classify each one independently and drop the
// null ones. The learned backend needs `heads` whose class lists equal the
// knowledge base's actions (ValidationError otherwise).
ReasoningResult reason(const VideoGraph& graph, const KnowledgeBase& kb, const ReasonerConfig& cfg,
                       const ActionHeads* heads = nullptr);

// Train both action heads from the knowledge base.
ActionHeads train_action_heads(const KnowledgeBase& kb, const TrainConfig& cfg);

// "open (microwave_1, closed to open, frame 216)"
std::string explain(const ActionEvent& event);

struct Explanation {
  std::string action;
  std::vector<std::string> participants;
  std::string pre;
  std::string eff;
  int time = 0;
  bool operator==(const Explanation&) const = default;
};

// Inverse of explain(); ParseError when the sentence does not match.
Explanation parse_explanation(std::string_view sentence);

nlohmann::ordered_json to_json(const ActionEvent& event, bool with_sentence = false);

}  // namespace vidreason

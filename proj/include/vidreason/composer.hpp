#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vidreason/knowledge_base.hpp"
#include "vidreason/reasoner.hpp"

namespace vidreason {

// Participant `slot` of the witness matched to atom `atom`.
struct ParticipantRef {
  std::size_t atom = 0;
  std::size_t slot = 0;
  bool operator==(const ParticipantRef&) const = default;
};

// Every referenced participant must be the same instance.
struct Binding {
  std::vector<ParticipantRef> same;
  bool operator==(const Binding&) const = default;
};

// Conjunction of atomic actions, e.g. having_meal = eat AND drink.
struct ActivityRule {
  std::string name;
  std::vector<std::string> required_actions;  // one atom per entry
  bool ordered = false;                       // witness times non-decreasing in atom order
  std::vector<Binding> bindings;
  bool operator==(const ActivityRule&) const = default;
};

struct ActivityDetection {
  std::string name;
  std::vector<ActionEvent> witnesses;  // in atom order
  int first = 0;
  int last = 0;
};

// Throws ValidationError for empty rules, unknown or null actions and
// out-of-range binding references.
void validate_activity_rule(const ActivityRule& rule, const Vocabulary& vocab);

// JSON array of {name, actions, ordered, bindings}; bindings are
// {"same": [[atom, slot], ...]}.
std::vector<ActivityRule> parse_activity_rules(std::string_view text,
                                               const std::string& source = "rules");

// Greedy earliest-completion matching: each rule repeatedly takes the witness
// set with the earliest last event (ties broken by earliest witnesses) among
// events not yet used by that rule. Events must be sorted by time.
std::vector<ActivityDetection> detect_activities(std::span<const ActionEvent> events,
                                                 std::span<const ActivityRule> rules,
                                                 const Vocabulary& vocab);

// Re-evaluates the rule predicate on a detection's witnesses.
bool satisfies(const ActivityRule& rule, std::span<const ActionEvent> witnesses);

nlohmann::ordered_json to_json(const ActivityDetection& detection);

}  // namespace vidreason

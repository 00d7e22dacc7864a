#include "vidreason/composer.hpp"

#include <algorithm>
#include <optional>
#include <tuple>

#include "json_util.hpp"
#include "vidreason/error.hpp"

namespace vidreason {

namespace {

using detail::json;

const std::string* participant(const ActionEvent& event, std::size_t slot) {
  return slot < event.participants.size() ? &event.participants[slot].id : nullptr;
}

// Bindings whose atoms are all assigned must hold.
bool bindings_hold(const ActivityRule& rule, std::span<const ActionEvent* const> assigned,
                   std::size_t assigned_count) {
  for (const auto& binding : rule.bindings) {
    const std::string* expected = nullptr;
    for (const auto& ref : binding.same) {
      if (ref.atom >= assigned_count) continue;
      const std::string* id = participant(*assigned[ref.atom], ref.slot);
      if (!id) return false;
      if (!expected) {
        expected = id;
      } else if (*expected != *id) {
        return false;
      }
    }
  }
  return true;
}

class WitnessSearch {
 public:
  WitnessSearch(const ActivityRule& rule, std::span<const ActionEvent> events,
                const std::vector<bool>& used)
      : rule_(rule), events_(events), used_(used), chosen_(rule.required_actions.size()),
        assigned_(rule.required_actions.size(), nullptr) {}

  // Witness indices with the earliest possible last event, or nullopt.
  std::optional<std::vector<std::size_t>> run() {
    for (std::size_t limit = 0; limit < events_.size(); ++limit) {
      limit_ = limit;
      if (assign(0)) return chosen_;
    }
    return std::nullopt;
  }

 private:
  bool taken(std::size_t index, std::size_t atom) const {
    for (std::size_t a = 0; a < atom; ++a)
      if (chosen_[a] == index) return true;
    return false;
  }

  bool assign(std::size_t atom) {
    if (atom == chosen_.size()) return true;
    for (std::size_t i = 0; i <= limit_; ++i) {
      if (used_[i] || taken(i, atom)) continue;
      if (events_[i].action != rule_.required_actions[atom]) continue;
      if (rule_.ordered && atom > 0 && events_[i].time < assigned_[atom - 1]->time) continue;
      chosen_[atom] = i;
      assigned_[atom] = &events_[i];
      if (bindings_hold(rule_, assigned_, atom + 1) && assign(atom + 1)) return true;
    }
    return false;
  }

  const ActivityRule& rule_;
  std::span<const ActionEvent> events_;
  const std::vector<bool>& used_;
  std::vector<std::size_t> chosen_;
  std::vector<const ActionEvent*> assigned_;
  std::size_t limit_ = 0;
};

}  // namespace

void validate_activity_rule(const ActivityRule& rule, const Vocabulary& vocab) {
  if (rule.name.empty()) throw ValidationError("activity rule has no name");
  if (rule.required_actions.empty())
    throw ValidationError("activity rule '" + rule.name + "' requires no actions");
  for (const auto& action : rule.required_actions) {
    if (!vocab.action_index(action))
      throw ValidationError("activity rule '" + rule.name + "' references unknown action '" +
                            action + "'");
    if (action == kNullAction)
      throw ValidationError("activity rule '" + rule.name + "' references \"null\"");
  }
  for (const auto& binding : rule.bindings) {
    if (binding.same.size() < 2)
      throw ValidationError("activity rule '" + rule.name + "' has a binding with < 2 references");
    for (const auto& ref : binding.same)
      if (ref.atom >= rule.required_actions.size() || ref.slot > 1)
        throw ValidationError("activity rule '" + rule.name + "' binding reference out of range");
  }
}

std::vector<ActivityRule> parse_activity_rules(std::string_view text, const std::string& source) {
  const json doc = detail::parse_json(text, source);
  detail::require_array(doc, source + ":$");
  std::vector<ActivityRule> rules;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const std::string where = source + ":" + detail::indexed("$", i);
    detail::check_keys(doc[i], {"name", "actions", "ordered", "bindings"}, where);
    ActivityRule rule;
    rule.name = detail::get_string(detail::require_key(doc[i], "name", where), where + ".name");
    rule.required_actions =
        detail::get_string_array(detail::require_key(doc[i], "actions", where), where + ".actions");
    if (auto it = doc[i].find("ordered"); it != doc[i].end())
      rule.ordered = detail::get_bool(*it, where + ".ordered");
    if (auto it = doc[i].find("bindings"); it != doc[i].end()) {
      detail::require_array(*it, where + ".bindings");
      for (std::size_t b = 0; b < it->size(); ++b) {
        const std::string bwhere = detail::indexed(where + ".bindings", b);
        detail::check_keys((*it)[b], {"same"}, bwhere);
        const json& same = detail::require_key((*it)[b], "same", bwhere);
        detail::require_array(same, bwhere + ".same");
        Binding binding;
        for (const auto& ref : same) {
          if (!ref.is_array() || ref.size() != 2)
            throw ParseError("binding reference must be [atom, slot]", bwhere);
          const auto atom = detail::get_integer(ref[0], bwhere);
          const auto slot = detail::get_integer(ref[1], bwhere);
          if (atom < 0 || slot < 0) throw ParseError("negative binding reference", bwhere);
          binding.same.push_back({static_cast<std::size_t>(atom), static_cast<std::size_t>(slot)});
        }
        rule.bindings.push_back(std::move(binding));
      }
    }
    rules.push_back(std::move(rule));
  }
  return rules;
}

bool satisfies(const ActivityRule& rule, std::span<const ActionEvent> witnesses) {
  if (witnesses.size() != rule.required_actions.size()) return false;
  std::vector<const ActionEvent*> assigned;
  for (std::size_t a = 0; a < witnesses.size(); ++a) {
    if (witnesses[a].action != rule.required_actions[a]) return false;
    if (rule.ordered && a > 0 && witnesses[a].time < witnesses[a - 1].time) return false;
    assigned.push_back(&witnesses[a]);
  }
  return bindings_hold(rule, assigned, assigned.size());
}

std::vector<ActivityDetection> detect_activities(std::span<const ActionEvent> events,
                                                 std::span<const ActivityRule> rules,
                                                 const Vocabulary& vocab) {
  for (const auto& rule : rules) validate_activity_rule(rule, vocab);
  for (std::size_t i = 1; i < events.size(); ++i)
    if (events[i].time < events[i - 1].time)
      throw ValidationError("events must be sorted by time");

  std::vector<std::pair<std::size_t, ActivityDetection>> found;  // (rule index, detection)
  for (std::size_t r = 0; r < rules.size(); ++r) {
    std::vector<bool> used(events.size(), false);
    while (true) {
      auto witness = WitnessSearch(rules[r], events, used).run();
      if (!witness) break;
      ActivityDetection detection;
      detection.name = rules[r].name;
      detection.first = events[(*witness)[0]].time;
      detection.last = detection.first;
      for (std::size_t index : *witness) {
        used[index] = true;
        detection.witnesses.push_back(events[index]);
        detection.first = std::min(detection.first, events[index].time);
        detection.last = std::max(detection.last, events[index].time);
      }
      found.emplace_back(r, std::move(detection));
    }
  }
  std::stable_sort(found.begin(), found.end(), [](const auto& a, const auto& b) {
    return std::tie(a.second.first, a.first, a.second.last) <
           std::tie(b.second.first, b.first, b.second.last);
  });
  std::vector<ActivityDetection> out;
  out.reserve(found.size());
  for (auto& [_, detection] : found) out.push_back(std::move(detection));
  return out;
}

nlohmann::ordered_json to_json(const ActivityDetection& detection) {
  nlohmann::ordered_json doc;
  doc["name"] = detection.name;
  doc["span"] = {detection.first, detection.last};
  doc["witnesses"] = nlohmann::ordered_json::array();
  for (const auto& event : detection.witnesses) doc["witnesses"].push_back(explain(event));
  return doc;
}

}  // namespace vidreason

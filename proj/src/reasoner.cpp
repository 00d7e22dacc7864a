#include "vidreason/reasoner.hpp"

#include <regex>

#include "vidreason/error.hpp"

namespace vidreason {

namespace {

void check_head(const LinearHead& head, const KnowledgeBase& kb, std::size_t dim,
                const char* name) {
  if (head.classes != kb.vocabulary().actions)
    throw ValidationError(std::string(name) + " head classes differ from the knowledge base actions");
  if (head.input_dim != dim)
    throw ValidationError(std::string(name) + " head expects input dimension " +
                          std::to_string(head.input_dim) + ", knowledge base gives " +
                          std::to_string(dim));
}

std::string classify(const TransitionEvent& t, const VideoGraph& graph, const KnowledgeBase& kb,
                     Backend backend, const ActionHeads* heads) {
  const auto& first = graph.object(t.participants[0]).category;
  if (t.kind == TransitionKind::attribute) {
    if (backend == Backend::rule) return kb.lookup_attribute_action(first, t.pre, t.eff);
    const auto x = encode_attribute_transition(kb, first, t.pre, t.eff);
    return heads->aar.classes[predict_action(heads->aar, x).index];
  }
  const auto& second = graph.object(t.participants[1]).category;
  if (backend == Backend::rule) return kb.lookup_relationship_action(first, second, t.pre, t.eff);
  const auto x = encode_relationship_transition(kb, first, second, t.pre, t.eff);
  return heads->rar.classes[predict_action(heads->rar, x).index];
}

}  // namespace

std::string_view to_string(Backend backend) {
  return backend == Backend::rule ? "rule" : "learned";
}

Backend parse_backend(std::string_view name) {
  if (name == "rule") return Backend::rule;
  if (name == "learned") return Backend::learned;
  throw ValidationError("unknown backend '" + std::string(name) + "' (expected rule or learned)");
}

ReasoningResult reason(const VideoGraph& graph, const KnowledgeBase& kb, const ReasonerConfig& cfg,
                       const ActionHeads* heads) {
  if (cfg.backend == Backend::learned) {
    if (!heads) throw ValidationError("learned backend requires trained heads");
    const auto& v = kb.vocabulary();
    check_head(heads->aar, kb, v.objects.size() + 2 * v.attributes.size(), "aar");
    check_head(heads->rar, kb, 2 * v.objects.size() + 2 * v.relationships.size(), "rar");
  }

  const VideoGraph refined = refine_video_graph(graph, cfg.refinement);
  const auto transitions = detect_transitions(refined);

  ReasoningResult result;
  result.transition_count = transitions.size();
  for (const auto& t : transitions) {
    std::string action;
    try {
      action = classify(t, refined, kb, cfg.backend, heads);
    } catch (const DomainError& e) {
      result.diagnostics.push_back({t, e.what()});
      continue;
    }
    if (action == kNullAction) {
      ++result.null_count;
      if (cfg.emit_null) result.null_transitions.push_back(t);
      continue;
    }
    ActionEvent event;
    event.action = std::move(action);
    event.kind = t.kind;
    for (const auto& id : t.participants)
      event.participants.push_back({id, refined.object(id).category});
    event.time = t.time;
    event.locations = t.locations;
    event.pre = t.pre;
    event.eff = t.eff;
    event.backend = cfg.backend;
    result.events.push_back(std::move(event));
  }
  // detect_transitions already orders by (time, participants).
  return result;
}

ActionHeads train_action_heads(const KnowledgeBase& kb, const TrainConfig& cfg) {
  return {train_action_head(kb, ActionModel::aar, cfg).head,
          train_action_head(kb, ActionModel::rar, cfg).head};
}

std::string explain(const ActionEvent& event) {
  std::string out = event.action + " (";
  for (const auto& p : event.participants) out += p.id + ", ";
  out += event.pre + " to " + event.eff + ", frame " + std::to_string(event.time) + ")";
  return out;
}

Explanation parse_explanation(std::string_view sentence) {
  static const std::regex pattern(R"(^(\S+) \((.+), (\S+) to (\S+), frame (\d+)\)$)");
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_match(sentence.begin(), sentence.end(), m, pattern))
    throw ParseError("not an event explanation: '" + std::string(sentence) + "'");
  Explanation out;
  out.action = m[1];
  const std::string who = m[2];
  std::size_t start = 0;
  while (true) {
    const auto comma = who.find(", ", start);
    out.participants.push_back(who.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 2;
  }
  out.pre = m[3];
  out.eff = m[4];
  out.time = std::stoi(m[5]);
  return out;
}

nlohmann::ordered_json to_json(const ActionEvent& event, bool with_sentence) {
  nlohmann::ordered_json doc;
  doc["action"] = event.action;
  doc["kind"] = to_string(event.kind);
  doc["participants"] = nlohmann::ordered_json::array();
  for (const auto& p : event.participants)
    doc["participants"].push_back({{"id", p.id}, {"category", p.category}});
  doc["time"] = event.time;
  doc["locations"] = nlohmann::ordered_json::array();
  for (const auto& box : event.locations) {
    if (box)
      doc["locations"].push_back({box->x, box->y, box->w, box->h});
    else
      doc["locations"].push_back(nullptr);
  }
  doc["pre"] = event.pre;
  doc["eff"] = event.eff;
  doc["backend"] = to_string(event.backend);
  if (with_sentence) doc["sentence"] = explain(event);
  return doc;
}

}  // namespace vidreason

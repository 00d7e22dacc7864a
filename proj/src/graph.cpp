#include "vidreason/graph.hpp"

#include <algorithm>
#include <sstream>
#include <tuple>

#include "json_util.hpp"
#include "vidreason/error.hpp"

namespace vidreason {

namespace {

using detail::json;
using nlohmann::ordered_json;

BBox parse_bbox(const json& value, const std::string& where) {
  detail::require_array(value, where);
  if (value.size() != 4) throw ParseError("bbox must be [x, y, w, h]", where);
  BBox box{detail::get_number(value[0], where), detail::get_number(value[1], where),
           detail::get_number(value[2], where), detail::get_number(value[3], where)};
  if (!(box.w > 0) || !(box.h > 0))
    throw ValidationError("bbox width and height must be positive", where);
  return box;
}

FrameObservation parse_record(const json& doc, const std::string& where) {
  detail::check_keys(doc, {"frame", "objects", "attributes", "relationships"}, where);
  FrameObservation record;
  record.origin = where;
  const long long frame = detail::get_integer(detail::require_key(doc, "frame", where), where);
  if (frame < 1 || frame > 100'000'000) throw ValidationError("frame must be >= 1", where);
  record.frame = static_cast<int>(frame);

  if (auto it = doc.find("objects"); it != doc.end()) {
    detail::require_array(*it, where);
    for (const auto& item : *it) {
      detail::check_keys(item, {"id", "category", "bbox"}, where);
      ObservedObject object;
      object.id = detail::get_string(detail::require_key(item, "id", where), where);
      object.category = detail::get_string(detail::require_key(item, "category", where), where);
      if (auto box = item.find("bbox"); box != item.end()) object.bbox = parse_bbox(*box, where);
      record.objects.push_back(std::move(object));
    }
  }
  if (auto it = doc.find("attributes"); it != doc.end()) {
    detail::require_array(*it, where);
    for (const auto& item : *it) {
      detail::check_keys(item, {"id", "value"}, where);
      record.attributes.push_back(
          {detail::get_string(detail::require_key(item, "id", where), where),
           detail::get_string(detail::require_key(item, "value", where), where)});
    }
  }
  if (auto it = doc.find("relationships"); it != doc.end()) {
    detail::require_array(*it, where);
    for (const auto& item : *it) {
      detail::check_keys(item, {"subject", "object", "value"}, where);
      record.relationships.push_back(
          {detail::get_string(detail::require_key(item, "subject", where), where),
           detail::get_string(detail::require_key(item, "object", where), where),
           detail::get_string(detail::require_key(item, "value", where), where)});
    }
  }
  return record;
}

std::vector<std::pair<int, std::string>> project(const StateTrack& track,
                                                 const std::array<std::string, 2>& pair) {
  std::vector<std::pair<int, std::string>> out;
  for (std::size_t i = 0; i < track.size(); ++i)
    if (track[i] != kUndefinedState) out.emplace_back(static_cast<int>(i) + 1, pair[track[i]]);
  return out;
}

int value_slot(const std::array<std::string, 2>& pair, std::string_view value) {
  return pair[0] == value ? 0 : 1;
}

}  // namespace

std::vector<FrameObservation> parse_observations(std::string_view jsonl,
                                                 const std::string& source) {
  std::vector<FrameObservation> records;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= jsonl.size()) {
    const std::size_t end = std::min(jsonl.find('\n', pos), jsonl.size());
    std::string_view line = jsonl.substr(pos, end - pos);
    ++line_no;
    pos = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
      if (end == jsonl.size()) break;
      continue;
    }
    const std::string where = source + ":" + std::to_string(line_no);
    records.push_back(parse_record(detail::parse_json(line, where), where));
    if (end == jsonl.size()) break;
  }
  return records;
}

std::string serialize_observation(const FrameObservation& record) {
  ordered_json doc;
  doc["frame"] = record.frame;
  doc["objects"] = ordered_json::array();
  for (const auto& object : record.objects) {
    ordered_json item;
    item["id"] = object.id;
    item["category"] = object.category;
    if (object.bbox) item["bbox"] = {object.bbox->x, object.bbox->y, object.bbox->w, object.bbox->h};
    doc["objects"].push_back(std::move(item));
  }
  doc["attributes"] = ordered_json::array();
  for (const auto& attribute : record.attributes)
    doc["attributes"].push_back({{"id", attribute.id}, {"value", attribute.value}});
  doc["relationships"] = ordered_json::array();
  for (const auto& rel : record.relationships)
    doc["relationships"].push_back(
        {{"subject", rel.subject}, {"object", rel.object}, {"value", rel.value}});
  return doc.dump();
}

std::string serialize_observations(const std::vector<FrameObservation>& records) {
  std::string out;
  for (const auto& record : records) {
    out += serialize_observation(record);
    out += '\n';
  }
  return out;
}

const ObjectInstance& VideoGraph::object(const std::string& id) const {
  auto it = objects_.find(id);
  if (it == objects_.end()) throw ValidationError("unknown instance '" + id + "'");
  return it->second;
}

std::optional<BBox> VideoGraph::location(const std::string& id, int frame) const {
  const auto& track = object(id).track;
  auto it = track.upper_bound(frame);
  if (it == track.begin()) return std::nullopt;
  return std::prev(it)->second;
}

SceneGraph VideoGraph::scene(int frame) const {
  if (frame < 1 || frame > frame_count_)
    throw ValidationError("frame " + std::to_string(frame) + " outside [1, " +
                          std::to_string(frame_count_) + "]");
  SceneGraph scene;
  scene.frame = frame;
  const auto i = static_cast<std::size_t>(frame - 1);
  for (const auto& [key, track] : node_tracks_)
    if (track[i] != kUndefinedState)
      scene.node_states.emplace(key, attribute_pairs_[key.domain][track[i]]);
  for (const auto& [key, track] : edge_tracks_)
    if (track[i] != kUndefinedState)
      scene.edge_states.emplace(key, relationship_pairs_[key.domain][track[i]]);
  return scene;
}

std::vector<SceneGraph> VideoGraph::scenes() const {
  std::vector<SceneGraph> out;
  out.reserve(static_cast<std::size_t>(frame_count_));
  for (int t = 1; t <= frame_count_; ++t) out.push_back(scene(t));
  return out;
}

std::vector<std::pair<int, std::string>> VideoGraph::attribute_track(const std::string& id,
                                                                     std::size_t domain) const {
  object(id);
  if (domain >= attribute_pairs_.size())
    throw ValidationError("unknown attribute domain " + std::to_string(domain));
  const auto& applicable = applicable_attributes_.at(id);
  if (std::find(applicable.begin(), applicable.end(), domain) == applicable.end())
    throw DomainError("attribute domain " + attribute_pairs_[domain][0] + "/" +
                      attribute_pairs_[domain][1] + " does not apply to '" + id + "'");
  auto it = node_tracks_.find({id, domain});
  if (it == node_tracks_.end()) return {};
  return project(it->second, attribute_pairs_[domain]);
}

std::vector<std::pair<int, std::string>> VideoGraph::relationship_track(
    const std::string& subject, const std::string& object_id, std::size_t domain) const {
  const auto& s = object(subject);
  const auto& o = object(object_id);
  if (domain >= relationship_pairs_.size())
    throw ValidationError("unknown relationship domain " + std::to_string(domain));
  if (!relationship_domains_[domain].applies_to(s.category, o.category))
    throw DomainError("relationship domain does not apply to (" + subject + ", " + object_id +
                      ")");
  auto it = edge_tracks_.find({subject, object_id, domain});
  if (it == edge_tracks_.end()) return {};
  return project(it->second, relationship_pairs_[domain]);
}

VideoGraph VideoGraph::with_tracks(std::map<NodeKey, StateTrack> nodes,
                                   std::map<EdgeKey, StateTrack> edges) const {
  auto check = [this](const auto& tracks) {
    for (const auto& [key, track] : tracks)
      if (track.size() != static_cast<std::size_t>(frame_count_))
        throw ValidationError("track length differs from frame count");
  };
  check(nodes);
  check(edges);
  VideoGraph out = *this;
  out.node_tracks_ = std::move(nodes);
  out.edge_tracks_ = std::move(edges);
  return out;
}

VideoGraph build_video_graph(const KnowledgeBase& kb, const std::vector<FrameObservation>& records,
                             std::optional<int> frame_count) {
  int max_frame = 0;
  for (const auto& record : records) {
    if (record.frame < 1) throw ValidationError("frame must be >= 1", record.origin);
    max_frame = std::max(max_frame, record.frame);
  }
  const int T = frame_count.value_or(max_frame);
  if (T <= 0) throw ValidationError("empty video");
  if (max_frame > T)
    throw ValidationError("frame " + std::to_string(max_frame) + " exceeds declared frame count " +
                          std::to_string(T));

  VideoGraph graph;
  graph.frame_count_ = T;
  for (const auto& domain : kb.attribute_domains()) graph.attribute_pairs_.push_back(domain.pair);
  for (const auto& domain : kb.relationship_domains())
    graph.relationship_pairs_.push_back(domain.pair);
  graph.relationship_domains_ = kb.relationship_domains();

  std::vector<const FrameObservation*> ordered;
  ordered.reserve(records.size());
  for (const auto& record : records) ordered.push_back(&record);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const auto* a, const auto* b) { return a->frame < b->frame; });

  // Explicit observations: key -> frame -> value slot.
  std::map<NodeKey, std::map<int, int>> node_obs;
  std::map<EdgeKey, std::map<int, int>> edge_obs;

  auto registered = [&](const std::string& id, const std::string& where) -> const ObjectInstance& {
    auto it = graph.objects_.find(id);
    if (it == graph.objects_.end())
      throw ValidationError("instance '" + id + "' used before it is declared", where);
    return it->second;
  };

  for (const FrameObservation* record : ordered) {
    const std::string& where = record->origin;
    const int t = record->frame;
    for (const auto& seen : record->objects) {
      if (seen.id.empty()) throw ValidationError("empty instance id", where);
      if (!kb.vocabulary().object_index(seen.category))
        throw ValidationError("unknown object category '" + seen.category + "'", where);
      auto [it, inserted] = graph.objects_.try_emplace(seen.id);
      ObjectInstance& instance = it->second;
      if (inserted) {
        instance.id = seen.id;
        instance.category = seen.category;
        instance.first_frame = t;
        auto& applicable = graph.applicable_attributes_[seen.id];
        for (std::size_t d = 0; d < kb.attribute_domains().size(); ++d)
          if (kb.attribute_domains()[d].applies_to(seen.category)) applicable.push_back(d);
      } else if (instance.category != seen.category) {
        throw ValidationError("instance '" + seen.id + "' changes category from '" +
                                  instance.category + "' to '" + seen.category + "'",
                              where);
      }
      if (seen.bbox) {
        auto [box, fresh] = instance.track.emplace(t, *seen.bbox);
        if (!fresh && !(box->second == *seen.bbox))
          throw ValidationError("conflicting boxes for '" + seen.id + "' at frame " +
                                    std::to_string(t),
                                where);
      }
    }
    for (const auto& attribute : record->attributes) {
      const auto& instance = registered(attribute.id, where);
      auto domain = kb.attribute_domain_of(attribute.value);
      if (!domain)
        throw ValidationError("unknown attribute value '" + attribute.value + "'", where);
      if (!kb.attribute_domains()[*domain].applies_to(instance.category))
        throw DomainError("attribute '" + attribute.value + "' does not apply to '" +
                              attribute.id + "' (" + instance.category + ")",
                          where);
      const int slot = value_slot(kb.attribute_domains()[*domain].pair, attribute.value);
      auto [it, fresh] = node_obs[{attribute.id, *domain}].emplace(t, slot);
      if (!fresh && it->second != slot)
        throw ValidationError("conflicting attribute values for '" + attribute.id +
                                  "' at frame " + std::to_string(t),
                              where);
    }
    for (const auto& rel : record->relationships) {
      if (rel.subject == rel.object)
        throw ValidationError("relationship subject and object must differ ('" + rel.subject +
                                  "')",
                              where);
      const auto& subject = registered(rel.subject, where);
      const auto& object = registered(rel.object, where);
      auto domain = kb.relationship_domain_of(rel.value);
      if (!domain) throw ValidationError("unknown relationship value '" + rel.value + "'", where);
      if (!kb.relationship_domains()[*domain].applies_to(subject.category, object.category))
        throw DomainError("relationship '" + rel.value + "' does not apply to (" + rel.subject +
                              ", " + rel.object + ")",
                          where);
      const int slot = value_slot(kb.relationship_domains()[*domain].pair, rel.value);
      auto [it, fresh] = edge_obs[{rel.subject, rel.object, *domain}].emplace(t, slot);
      if (!fresh && it->second != slot)
        throw ValidationError("conflicting relationship values for (" + rel.subject + ", " +
                                  rel.object + ") at frame " + std::to_string(t),
                              where);
    }
  }

  auto fill = [T](const std::map<int, int>& observed) {
    StateTrack track(static_cast<std::size_t>(T), kUndefinedState);
    int current = kUndefinedState;
    auto next = observed.begin();
    for (int t = 1; t <= T; ++t) {
      if (next != observed.end() && next->first == t) current = (next++)->second;
      track[static_cast<std::size_t>(t - 1)] = current;
    }
    return track;
  };
  for (const auto& [key, observed] : node_obs) graph.node_tracks_.emplace(key, fill(observed));
  for (const auto& [key, observed] : edge_obs) graph.edge_tracks_.emplace(key, fill(observed));
  return graph;
}

std::vector<FrameObservation> to_observations(const VideoGraph& graph) {
  std::vector<FrameObservation> out;
  out.reserve(static_cast<std::size_t>(graph.frame_count()));
  for (int t = 1; t <= graph.frame_count(); ++t) {
    FrameObservation record;
    record.frame = t;
    for (const auto& [id, instance] : graph.objects()) {
      if (instance.first_frame > t) continue;
      ObservedObject object{id, instance.category, std::nullopt};
      if (auto it = instance.track.find(t); it != instance.track.end()) object.bbox = it->second;
      record.objects.push_back(std::move(object));
    }
    const SceneGraph scene = graph.scene(t);
    for (const auto& [key, value] : scene.node_states)
      record.attributes.push_back({key.instance, value});
    for (const auto& [key, value] : scene.edge_states)
      record.relationships.push_back({key.subject, key.object, value});
    out.push_back(std::move(record));
  }
  return out;
}

std::vector<TransitionEvent> detect_transitions(const VideoGraph& graph) {
  std::vector<TransitionEvent> events;
  auto scan = [&](TransitionKind kind, std::vector<std::string> participants, std::size_t domain,
                  const StateTrack& track, const std::array<std::string, 2>& pair) {
    for (std::size_t i = 1; i < track.size(); ++i) {
      if (track[i - 1] == kUndefinedState || track[i] == track[i - 1]) continue;
      TransitionEvent event;
      event.kind = kind;
      event.participants = participants;
      event.domain = domain;
      event.pre = pair[track[i - 1]];
      event.eff = pair[track[i]];
      event.time = static_cast<int>(i) + 1;
      for (const auto& id : participants) event.locations.push_back(graph.location(id, event.time));
      events.push_back(std::move(event));
    }
  };
  for (const auto& [key, track] : graph.node_tracks())
    scan(TransitionKind::attribute, {key.instance}, key.domain, track,
         graph.attribute_pairs()[key.domain]);
  for (const auto& [key, track] : graph.edge_tracks())
    scan(TransitionKind::relationship, {key.subject, key.object}, key.domain, track,
         graph.relationship_pairs()[key.domain]);

  std::sort(events.begin(), events.end(), [](const auto& a, const auto& b) {
    return std::tie(a.time, a.participants, a.kind, a.domain) <
           std::tie(b.time, b.participants, b.kind, b.domain);
  });
  return events;
}

}  // namespace vidreason

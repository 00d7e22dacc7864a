#include "vidreason/evaluation.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include "json_util.hpp"
#include "vidreason/error.hpp"

namespace vidreason {

namespace {

using detail::json;

int parse_int_field(const std::string& field, const std::string& where) {
  std::size_t used = 0;
  int value = 0;
  try {
    value = std::stoi(field, &used);
  } catch (const std::exception&) {
    throw ParseError("expected an integer, got '" + field + "'", where);
  }
  if (used != field.size()) throw ParseError("expected an integer, got '" + field + "'", where);
  return value;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::vector<StateSegment> parse_segments(const json& value, const std::string& where) {
  detail::require_array(value, where);
  std::vector<StateSegment> out;
  for (std::size_t i = 0; i < value.size(); ++i) {
    const std::string at = detail::indexed(where, i);
    if (!value[i].is_array() || value[i].size() != 2)
      throw ParseError("segment must be [start, value]", at);
    const auto start = detail::get_integer(value[i][0], at);
    if (start < 1 || start > 100'000'000) throw ValidationError("segment start must be >= 1", at);
    out.push_back({static_cast<int>(start), detail::get_string(value[i][1], at)});
  }
  return out;
}

nlohmann::ordered_json segments_to_json(const std::vector<StateSegment>& segments) {
  auto out = nlohmann::ordered_json::array();
  for (const auto& s : segments) out.push_back({s.start, s.value});
  return out;
}

// Clean per-frame slots (0/1 within the pair) for frames 1..T.
StateTrack clean_track(const std::vector<StateSegment>& segments,
                       const std::array<std::string, 2>& pair, int frames) {
  StateTrack track(static_cast<std::size_t>(frames), kUndefinedState);
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const int slot = segments[i].value == pair[0] ? 0 : 1;
    const int end = i + 1 < segments.size() ? segments[i + 1].start - 1 : frames;
    for (int t = segments[i].start; t <= end; ++t) track[static_cast<std::size_t>(t - 1)] = slot;
  }
  return track;
}

StateTrack add_noise(const StateTrack& clean, const NoiseModel& noise, std::mt19937_64& rng) {
  StateTrack noisy = clean;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int frames = static_cast<int>(clean.size());
  int first = 0;
  while (first < frames && clean[static_cast<std::size_t>(first)] == kUndefinedState) ++first;
  int last_disturbed = -1'000'000;
  for (int i = 0; i < frames; ++i) {
    const double flip_draw = unit(rng);
    const double drop_draw = unit(rng);
    if (i <= first) continue;
    const auto at = static_cast<std::size_t>(i);
    bool eligible = true;
    if (noise.isolated) {
      const int w = noise.isolation_window;
      if (i - last_disturbed <= w) eligible = false;
      for (int k = std::max(first, i - w); eligible && k <= std::min(frames - 1, i + w); ++k)
        eligible = clean[static_cast<std::size_t>(k)] == clean[at];
    }
    if (!eligible) {
      // Non-isolated dropouts after a flip keep the flipped value.
      continue;
    }
    if (flip_draw < noise.flip_probability) {
      noisy[at] = 1 - clean[at];
      last_disturbed = i;
    } else if (drop_draw < noise.dropout_probability) {
      noisy[at] = noisy[at - 1];
      last_disturbed = i;
    }
  }
  return noisy;
}

}  // namespace

// ---- Clips ----

std::vector<GroundTruthClip> parse_clips_csv(std::string_view text, const std::string& source) {
  std::vector<GroundTruthClip> clips;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    if (!header) {
      if (line != "clip_id,start,end,action")
        throw ParseError("expected header 'clip_id,start,end,action'", where);
      header = true;
      continue;
    }
    auto fields = split_csv_line(line);
    if (fields.size() != 4) throw ParseError("expected 4 fields", where);
    clips.push_back({fields[0], parse_int_field(fields[1], where),
                     parse_int_field(fields[2], where), fields[3]});
  }
  if (!header) throw ParseError("missing header 'clip_id,start,end,action'", source);
  return clips;
}

void validate_clips(std::span<const GroundTruthClip> clips, const Vocabulary* vocab) {
  std::set<std::string> ids;
  std::vector<const GroundTruthClip*> by_start;
  for (const auto& clip : clips) {
    if (clip.id.empty()) throw ValidationError("clip with empty id");
    if (!ids.insert(clip.id).second) throw ValidationError("duplicate clip id '" + clip.id + "'");
    if (clip.start < 1 || clip.end < clip.start)
      throw ValidationError("clip '" + clip.id + "' has an invalid frame range");
    if (vocab && !vocab->action_index(clip.action))
      throw ValidationError("clip '" + clip.id + "' has unknown action '" + clip.action + "'");
    by_start.push_back(&clip);
  }
  std::sort(by_start.begin(), by_start.end(),
            [](const auto* a, const auto* b) { return a->start < b->start; });
  for (std::size_t i = 1; i < by_start.size(); ++i)
    if (by_start[i]->start <= by_start[i - 1]->end)
      throw ValidationError("clips '" + by_start[i - 1]->id + "' and '" + by_start[i]->id +
                            "' overlap");
}

ClipPredictions assign_events_to_clips(std::span<const ActionEvent> events,
                                       std::span<const GroundTruthClip> clips) {
  ClipPredictions out;
  for (const auto& clip : clips) out[clip.id];
  for (const auto& event : events)
    for (const auto& clip : clips)
      if (event.time >= clip.start && event.time <= clip.end) out[clip.id].push_back(event.action);
  return out;
}

ClipPredictions parse_predictions(std::string_view text, std::span<const GroundTruthClip> clips,
                                  const std::string& source) {
  const json doc = detail::parse_json(text, source);
  detail::require_object(doc, source + ":$");
  if (auto it = doc.find("events"); it != doc.end()) {
    detail::require_array(*it, source + ":events");
    std::vector<ActionEvent> events;
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string where = source + ":" + detail::indexed("events", i);
      detail::require_object((*it)[i], where);
      ActionEvent event;
      event.action = detail::get_string(detail::require_key((*it)[i], "action", where), where);
      event.time = static_cast<int>(
          detail::get_integer(detail::require_key((*it)[i], "time", where), where));
      events.push_back(std::move(event));
    }
    return assign_events_to_clips(events, clips);
  }
  ClipPredictions out;
  for (const auto& [id, actions] : doc.items())
    out[id] = detail::get_string_array(actions, source + ":" + id);
  return out;
}

ClipMetrics score_clips(const ClipPredictions& predictions,
                        std::span<const GroundTruthClip> clips) {
  std::set<std::string> ids;
  for (const auto& clip : clips) ids.insert(clip.id);
  for (const auto& [id, _] : predictions)
    if (!ids.count(id)) throw ValidationError("prediction for unknown clip '" + id + "'");
  for (const auto& id : ids)
    if (!predictions.count(id)) throw ValidationError("no prediction entry for clip '" + id + "'");

  ClipMetrics m;
  for (const auto& clip : clips) {
    const auto& predicted = predictions.at(clip.id);
    auto& gt = m.per_action[clip.action];
    ++gt.clips;
    ++m.clips;
    const bool hit = clip.action == kNullAction
                         ? predicted.empty()
                         : std::find(predicted.begin(), predicted.end(), clip.action) !=
                               predicted.end();
    if (hit) {
      ++gt.recalled;
      ++m.recalled;
    }
    for (const auto& action : predicted) {
      auto& score = m.per_action[action];
      ++score.predicted;
      ++m.predicted;
      if (action == clip.action) {
        ++score.correct;
        ++m.correct;
      }
    }
  }
  double macro = 0.0;
  std::size_t labeled = 0;
  for (auto& [_, score] : m.per_action) {
    score.recall = score.clips ? static_cast<double>(score.recalled) / score.clips : 1.0;
    score.precision = score.predicted ? static_cast<double>(score.correct) / score.predicted : 1.0;
    if (score.clips) {
      macro += score.recall;
      ++labeled;
    }
  }
  m.recall = m.clips ? static_cast<double>(m.recalled) / m.clips : 1.0;
  m.precision = m.predicted ? static_cast<double>(m.correct) / m.predicted : 1.0;
  m.macro_recall = labeled ? macro / labeled : 1.0;
  return m;
}

double weighted_mean(const std::map<std::string, double>& values,
                     const std::map<std::string, double>& weights) {
  double num = 0.0;
  double den = 0.0;
  for (const auto& [key, weight] : weights) {
    auto it = values.find(key);
    if (it == values.end()) throw ValidationError("no value for '" + key + "'");
    num += weight * it->second;
    den += weight;
  }
  if (den <= 0.0) throw ValidationError("weights sum to zero");
  return num / den;
}

nlohmann::ordered_json to_json(const ClipMetrics& metrics) {
  nlohmann::ordered_json doc;
  doc["per_action"] = nlohmann::ordered_json::object();
  for (const auto& [action, s] : metrics.per_action) {
    doc["per_action"][action] = {{"clips", s.clips},         {"recalled", s.recalled},
                                 {"predicted", s.predicted}, {"correct", s.correct},
                                 {"recall", s.recall},       {"precision", s.precision}};
  }
  doc["overall"] = {{"clips", metrics.clips},         {"recalled", metrics.recalled},
                    {"predicted", metrics.predicted}, {"correct", metrics.correct},
                    {"recall", metrics.recall},       {"precision", metrics.precision},
                    {"macro_recall", metrics.macro_recall}};
  return doc;
}

// ---- Scripts ----

ScenarioScript parse_scenario_script(std::string_view text, const std::string& source) {
  const json doc = detail::parse_json(text, source);
  const std::string root = source + ":$";
  detail::check_keys(doc, {"frames", "objects", "attributes", "relationships", "noise"}, root);
  ScenarioScript script;
  const auto frames = detail::get_integer(detail::require_key(doc, "frames", root), source + ":frames");
  if (frames < 1 || frames > 10'000'000) throw ValidationError("frames must be >= 1", source + ":frames");
  script.frames = static_cast<int>(frames);

  const json& objects = detail::require_key(doc, "objects", root);
  detail::require_array(objects, source + ":objects");
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const std::string where = source + ":" + detail::indexed("objects", i);
    detail::check_keys(objects[i], {"id", "category", "bbox", "appear"}, where);
    ScriptObject object;
    object.id = detail::get_string(detail::require_key(objects[i], "id", where), where);
    object.category = detail::get_string(detail::require_key(objects[i], "category", where), where);
    if (auto it = objects[i].find("bbox"); it != objects[i].end()) {
      detail::require_array(*it, where);
      if (it->size() != 4) throw ParseError("bbox must be [x, y, w, h]", where);
      object.bbox = {detail::get_number((*it)[0], where), detail::get_number((*it)[1], where),
                     detail::get_number((*it)[2], where), detail::get_number((*it)[3], where)};
    }
    if (auto it = objects[i].find("appear"); it != objects[i].end())
      object.appear = static_cast<int>(detail::get_integer(*it, where));
    script.objects.push_back(std::move(object));
  }

  if (auto it = doc.find("attributes"); it != doc.end()) {
    detail::require_array(*it, source + ":attributes");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string where = source + ":" + detail::indexed("attributes", i);
      detail::check_keys((*it)[i], {"id", "segments"}, where);
      script.attributes.push_back(
          {detail::get_string(detail::require_key((*it)[i], "id", where), where),
           parse_segments(detail::require_key((*it)[i], "segments", where), where + ".segments")});
    }
  }
  if (auto it = doc.find("relationships"); it != doc.end()) {
    detail::require_array(*it, source + ":relationships");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string where = source + ":" + detail::indexed("relationships", i);
      detail::check_keys((*it)[i], {"subject", "object", "segments"}, where);
      script.relationships.push_back(
          {detail::get_string(detail::require_key((*it)[i], "subject", where), where),
           detail::get_string(detail::require_key((*it)[i], "object", where), where),
           parse_segments(detail::require_key((*it)[i], "segments", where), where + ".segments")});
    }
  }
  if (auto it = doc.find("noise"); it != doc.end()) {
    const std::string where = source + ":noise";
    detail::check_keys(*it,
                       {"flip_probability", "dropout_probability", "isolated", "isolation_window",
                        "seed"},
                       where);
    NoiseModel& n = script.noise;
    if (auto f = it->find("flip_probability"); f != it->end()) n.flip_probability = detail::get_number(*f, where);
    if (auto f = it->find("dropout_probability"); f != it->end()) n.dropout_probability = detail::get_number(*f, where);
    if (auto f = it->find("isolated"); f != it->end()) n.isolated = detail::get_bool(*f, where);
    if (auto f = it->find("isolation_window"); f != it->end())
      n.isolation_window = static_cast<int>(detail::get_integer(*f, where));
    if (auto f = it->find("seed"); f != it->end()) {
      const auto seed = detail::get_integer(*f, where);
      if (seed < 0) throw ParseError("seed must be non-negative", where);
      n.seed = static_cast<std::uint64_t>(seed);
    }
  }
  return script;
}

nlohmann::ordered_json to_json(const ScenarioScript& script) {
  nlohmann::ordered_json doc;
  doc["frames"] = script.frames;
  doc["objects"] = nlohmann::ordered_json::array();
  for (const auto& o : script.objects)
    doc["objects"].push_back({{"id", o.id},
                              {"category", o.category},
                              {"bbox", {o.bbox.x, o.bbox.y, o.bbox.w, o.bbox.h}},
                              {"appear", o.appear}});
  doc["attributes"] = nlohmann::ordered_json::array();
  for (const auto& a : script.attributes)
    doc["attributes"].push_back({{"id", a.id}, {"segments", segments_to_json(a.segments)}});
  doc["relationships"] = nlohmann::ordered_json::array();
  for (const auto& r : script.relationships)
    doc["relationships"].push_back({{"subject", r.subject},
                                    {"object", r.object},
                                    {"segments", segments_to_json(r.segments)}});
  doc["noise"] = {{"flip_probability", script.noise.flip_probability},
                  {"dropout_probability", script.noise.dropout_probability},
                  {"isolated", script.noise.isolated},
                  {"isolation_window", script.noise.isolation_window},
                  {"seed", script.noise.seed}};
  return doc;
}

void validate_scenario_script(const KnowledgeBase& kb, const ScenarioScript& script) {
  if (script.frames < 1) throw ValidationError("script needs at least one frame");
  const auto& n = script.noise;
  if (!(n.flip_probability >= 0.0 && n.flip_probability < 0.5))
    throw ValidationError("flip probability must lie in [0, 0.5)");
  if (!(n.dropout_probability >= 0.0 && n.dropout_probability < 1.0))
    throw ValidationError("dropout probability must lie in [0, 1)");
  if (n.isolation_window < 1) throw ValidationError("isolation window must be >= 1");

  std::map<std::string, const ScriptObject*> objects;
  for (const auto& o : script.objects) {
    if (!kb.vocabulary().object_index(o.category))
      throw ValidationError("unknown object category '" + o.category + "'");
    if (!objects.emplace(o.id, &o).second)
      throw ValidationError("duplicate object id '" + o.id + "'");
    if (o.appear < 1 || o.appear > script.frames)
      throw ValidationError("object '" + o.id + "' appears outside the video");
    if (!(o.bbox.w > 0) || !(o.bbox.h > 0))
      throw ValidationError("object '" + o.id + "' has a degenerate bbox");
  }
  auto object = [&](const std::string& id) -> const ScriptObject& {
    auto it = objects.find(id);
    if (it == objects.end()) throw ValidationError("timeline references unknown object '" + id + "'");
    return *it->second;
  };
  auto check_segments = [&](const std::vector<StateSegment>& segments, int appear,
                            const std::string& what) {
    if (segments.empty()) throw ValidationError(what + " has no segments");
    for (std::size_t i = 0; i < segments.size(); ++i) {
      if (segments[i].start < appear || segments[i].start > script.frames)
        throw ValidationError(what + " segment starts outside the object's lifetime");
      if (i > 0 && segments[i].start <= segments[i - 1].start)
        throw ValidationError(what + " segments must start in increasing order");
    }
  };

  std::set<std::pair<std::string, std::size_t>> seen_nodes;
  for (const auto& timeline : script.attributes) {
    const auto& o = object(timeline.id);
    const std::string what = "attribute timeline of '" + timeline.id + "'";
    check_segments(timeline.segments, o.appear, what);
    auto domain = kb.attribute_domain_of(timeline.segments.front().value);
    for (const auto& s : timeline.segments) {
      auto d = kb.attribute_domain_of(s.value);
      if (!d) throw ValidationError(what + " uses unknown value '" + s.value + "'");
      if (*d != *domain) throw ValidationError(what + " mixes attribute domains");
    }
    if (!kb.attribute_domains()[*domain].applies_to(o.category))
      throw DomainError(what + ": attribute does not apply to '" + o.category + "'");
    if (!seen_nodes.emplace(timeline.id, *domain).second)
      throw ValidationError("duplicate " + what);
  }
  std::set<std::tuple<std::string, std::string, std::size_t>> seen_edges;
  for (const auto& timeline : script.relationships) {
    const auto& s = object(timeline.subject);
    const auto& o = object(timeline.object);
    const std::string what =
        "relationship timeline of (" + timeline.subject + ", " + timeline.object + ")";
    if (timeline.subject == timeline.object)
      throw ValidationError(what + ": subject and object must differ");
    check_segments(timeline.segments, std::max(s.appear, o.appear), what);
    auto domain = kb.relationship_domain_of(timeline.segments.front().value);
    for (const auto& seg : timeline.segments) {
      auto d = kb.relationship_domain_of(seg.value);
      if (!d) throw ValidationError(what + " uses unknown value '" + seg.value + "'");
      if (*d != *domain) throw ValidationError(what + " mixes relationship domains");
    }
    if (!kb.relationship_domains()[*domain].applies_to(s.category, o.category))
      throw DomainError(what + ": relationship does not apply");
    if (!seen_edges.emplace(timeline.subject, timeline.object, *domain).second)
      throw ValidationError("duplicate " + what);
  }
}

SynthesisResult synthesize_observations(const KnowledgeBase& kb, const ScenarioScript& script) {
  validate_scenario_script(kb, script);
  const int T = script.frames;
  const auto frames = static_cast<std::size_t>(T);

  struct Track {
    bool attribute;
    std::vector<std::string> ids;
    std::array<std::string, 2> pair;
    StateTrack clean;
    StateTrack noisy;
  };
  std::vector<Track> tracks;
  std::mt19937_64 rng(script.noise.seed);
  for (const auto& timeline : script.attributes) {
    const auto& pair = kb.attribute_domains()[*kb.attribute_domain_of(timeline.segments[0].value)].pair;
    auto clean = clean_track(timeline.segments, pair, T);
    auto noisy = add_noise(clean, script.noise, rng);
    tracks.push_back({true, {timeline.id}, pair, std::move(clean), std::move(noisy)});
  }
  for (const auto& timeline : script.relationships) {
    const auto& pair =
        kb.relationship_domains()[*kb.relationship_domain_of(timeline.segments[0].value)].pair;
    auto clean = clean_track(timeline.segments, pair, T);
    auto noisy = add_noise(clean, script.noise, rng);
    tracks.push_back(
        {false, {timeline.subject, timeline.object}, pair, std::move(clean), std::move(noisy)});
  }

  // Sparse stream: objects on their first frame, states when they change,
  // and always a record at the final frame so the frame count is implied.
  auto emit = [&](bool noisy) {
    std::vector<FrameObservation> records;
    for (int t = 1; t <= T; ++t) {
      const auto i = static_cast<std::size_t>(t - 1);
      FrameObservation record;
      record.frame = t;
      for (const auto& o : script.objects)
        if (o.appear == t) record.objects.push_back({o.id, o.category, o.bbox});
      for (const auto& track : tracks) {
        const StateTrack& values = noisy ? track.noisy : track.clean;
        if (values[i] == kUndefinedState) continue;
        if (i > 0 && values[i - 1] == values[i]) continue;
        const std::string& value = track.pair[static_cast<std::size_t>(values[i])];
        if (track.attribute)
          record.attributes.push_back({track.ids[0], value});
        else
          record.relationships.push_back({track.ids[0], track.ids[1], value});
      }
      const bool empty =
          record.objects.empty() && record.attributes.empty() && record.relationships.empty();
      if (!empty || t == T) records.push_back(std::move(record));
    }
    return records;
  };
  (void)frames;

  SynthesisResult result;
  result.observations = emit(true);
  const VideoGraph clean_graph = build_video_graph(kb, emit(false), T);
  result.transitions = detect_transitions(clean_graph);
  ReasonerConfig cfg;
  cfg.refinement.window_width = 1;
  result.events = reason(clean_graph, kb, cfg).events;
  return result;
}

ScenarioScript random_scenario(const KnowledgeBase& kb, const RandomScenarioConfig& cfg) {
  if (cfg.frames < 1 || cfg.min_run < 1 || cfg.max_run < cfg.min_run)
    throw ValidationError("invalid random scenario configuration");
  std::mt19937_64 rng(cfg.seed);
  ScenarioScript script;
  script.frames = cfg.frames;
  script.noise = cfg.noise;

  std::map<std::string, int> counters;
  for (std::size_t i = 0; i < cfg.categories.size(); ++i) {
    const auto& category = cfg.categories[i];
    if (!kb.vocabulary().object_index(category))
      throw ValidationError("unknown object category '" + category + "'");
    const int n = ++counters[category];
    const double x = 20.0 + 60.0 * static_cast<double>(i);
    script.objects.push_back({category + "_" + std::to_string(n), category, {x, 40.0, 50.0, 50.0}, 1});
  }

  std::uniform_int_distribution<int> run_length(cfg.min_run, cfg.max_run);
  std::uniform_int_distribution<int> coin(0, 1);
  auto segments = [&](const std::array<std::string, 2>& pair) {
    std::vector<StateSegment> out;
    int slot = coin(rng);
    int start = 1;
    while (true) {
      out.push_back({start, pair[static_cast<std::size_t>(slot)]});
      const int next = start + run_length(rng);
      if (next + cfg.min_run - 1 > cfg.frames) break;
      start = next;
      slot = 1 - slot;
    }
    return out;
  };

  for (const auto& o : script.objects)
    for (const auto& domain : kb.attribute_domains())
      if (domain.applies_to(o.category)) script.attributes.push_back({o.id, segments(domain.pair)});
  for (const auto& s : script.objects)
    for (const auto& o : script.objects) {
      if (s.id == o.id) continue;
      for (const auto& domain : kb.relationship_domains())
        if (domain.applies_to(s.category, o.category))
          script.relationships.push_back({s.id, o.id, segments(domain.pair)});
    }
  return script;
}

}  // namespace vidreason

#include <gtest/gtest.h>

#include <algorithm>

#include "test_support.hpp"
#include "vidreason/error.hpp"
#include "vidreason/reasoner.hpp"

using namespace vidreason;

namespace {

const KnowledgeBase& kb() { return vrtest::daily_life(); }

const ActionHeads& heads() {
  static const ActionHeads h = train_action_heads(kb(), TrainConfig{});
  return h;
}

using Summary = std::vector<std::tuple<std::string, std::vector<std::string>, int>>;

Summary summarize(const std::vector<ActionEvent>& events) {
  Summary out;
  for (const auto& e : events) {
    std::vector<std::string> ids;
    for (const auto& p : e.participants) ids.push_back(p.id);
    out.emplace_back(e.action, ids, e.time);
  }
  return out;
}

ReasoningResult run(const std::string& script, Backend backend = Backend::rule) {
  ReasonerConfig cfg;
  cfg.backend = backend;
  return reason(vrtest::script_graph(vrtest::load_script(script)), kb(), cfg,
                backend == Backend::learned ? &heads() : nullptr);
}

std::vector<FrameObservation> without_object(std::vector<FrameObservation> records,
                                             const std::string& id) {
  for (auto& r : records) {
    std::erase_if(r.objects, [&](const auto& o) { return o.id == id; });
    std::erase_if(r.attributes, [&](const auto& a) { return a.id == id; });
    std::erase_if(r.relationships,
                  [&](const auto& x) { return x.subject == id || x.object == id; });
  }
  return records;
}

bool involves(const ActionEvent& e, const std::string& id) {
  return std::any_of(e.participants.begin(), e.participants.end(),
                     [&](const Participant& p) { return p.id == id; });
}

}  // namespace

TEST(Reasoner, OpenAndPickEvents) {
  EXPECT_EQ(summarize(run("open_and_pick").events),
            (Summary{{"open", {"microwave_1"}, 216}, {"pick", {"hand_2", "cloth_1"}, 242}}));
}

TEST(Reasoner, MealEvents) {
  const auto r = run("meal");
  EXPECT_EQ(summarize(r.events), (Summary{{"pick", {"hand_1", "cup_2"}, 35},
                                          {"drink", {"head_1", "cup_2"}, 70},
                                          {"place", {"hand_1", "cup_2"}, 180},
                                          {"pick", {"hand_2", "apple_1"}, 180},
                                          {"eat", {"head_1", "apple_1"}, 188}}));
  EXPECT_EQ(r.null_count, 1u);  // the cup leaves the mouth
}

TEST(Reasoner, HeatingFoodEvents) {
  EXPECT_EQ(summarize(run("heating_food").events),
            (Summary{{"open", {"microwave_1"}, 125},
                     {"pick", {"hand_1", "bowl_1"}, 216},
                     {"pick", {"hand_2", "bowl_1"}, 216},
                     {"place", {"hand_2", "bowl_1"}, 273},
                     {"micr_food", {"microwave_1", "bowl_1"}, 273},
                     {"close", {"microwave_1"}, 367}}));
}

TEST(Reasoner, EventsCarryWhoWhenWhereHow) {
  const auto e = run("open_and_pick").events.at(0);
  EXPECT_EQ(e.kind, TransitionKind::attribute);
  EXPECT_EQ(e.participants.at(0).category, "microwave");
  EXPECT_EQ(e.pre, "closed");
  EXPECT_EQ(e.eff, "open");
  ASSERT_EQ(e.locations.size(), 1u);
  EXPECT_EQ(e.locations[0], (BBox{300, 80, 160, 110}));
}

TEST(Reasoner, BackendsAgreeOnEveryScenario) {
  for (const char* name : {"open_and_pick", "meal", "heating_food"}) {
    auto rule = run(name, Backend::rule).events;
    auto learned = run(name, Backend::learned).events;
    for (auto& e : learned) e.backend = Backend::rule;
    EXPECT_EQ(rule, learned) << name;
  }
}

TEST(Reasoner, BackendsAgreeOnRandomScenarios) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    RandomScenarioConfig cfg;
    cfg.categories = {"hand", "head", "microwave", "cup", "bowl", "cloth", "bottle"};
    cfg.seed = seed;
    const auto graph = vrtest::script_graph(random_scenario(kb(), cfg));
    ReasonerConfig rc;
    auto rule = reason(graph, kb(), rc).events;
    rc.backend = Backend::learned;
    auto learned = reason(graph, kb(), rc, &heads()).events;
    for (auto& e : learned) e.backend = Backend::rule;
    EXPECT_EQ(rule, learned) << seed;
  }
}

TEST(Reasoner, CompletenessAndOrdering) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    RandomScenarioConfig cfg;
    cfg.categories = {"hand", "hand", "head", "microwave", "apple", "box"};
    cfg.seed = seed;
    const auto graph = vrtest::script_graph(random_scenario(kb(), cfg));
    ReasonerConfig rc;
    rc.emit_null = true;
    const auto r = reason(graph, kb(), rc);
    EXPECT_EQ(r.events.size() + r.null_count + r.diagnostics.size(), r.transition_count);
    EXPECT_EQ(r.null_transitions.size(), r.null_count);
    for (std::size_t i = 0; i < r.events.size(); ++i) {
      EXPECT_GE(r.events[i].time, 2);
      if (i > 0) EXPECT_LE(r.events[i - 1].time, r.events[i].time);
    }
  }
}

TEST(Reasoner, RemovingAnObjectLeavesOtherEventsAlone) {
  const auto script = vrtest::load_script("meal");
  const auto records = synthesize_observations(kb(), script).observations;
  const auto full = reason(build_video_graph(kb(), records, script.frames), kb(), ReasonerConfig{});
  for (const auto& object : script.objects) {
    const auto reduced =
        reason(build_video_graph(kb(), without_object(records, object.id), script.frames), kb(),
               ReasonerConfig{});
    std::vector<ActionEvent> expected;
    for (const auto& e : full.events)
      if (!involves(e, object.id)) expected.push_back(e);
    EXPECT_EQ(reduced.events, expected) << object.id;
  }
}

TEST(Reasoner, UnexplainableTransitionsBecomeDiagnostics) {
  // Same vocabulary, but the open/closed domain no longer covers microwaves.
  const auto narrow = load_knowledge_base(R"({
    "objects": ["hand", "head", "microwave", "box", "medicine-box", "bowl", "cup", "book", "cloth", "remote", "apple", "bottle", "plate"],
    "attributes": [{"pair": ["closed", "open"], "objects": ["bottle"]}],
    "relationships": [{"pair": ["holding", "not_holding"], "subjects": ["hand"], "objects": ["cloth"]}],
    "actions": ["null", "open", "close", "pick", "place", "drink", "eat", "micr_food", "take_food", "clean"]})");
  const auto r = reason(vrtest::script_graph(vrtest::load_script("open_and_pick")), narrow, ReasonerConfig{});
  EXPECT_EQ(r.transition_count, 2u);
  ASSERT_EQ(r.diagnostics.size(), 1u);
  EXPECT_EQ(r.diagnostics[0].transition.participants, std::vector<std::string>{"microwave_1"});
  // no rules at all, so the pick is null
  EXPECT_TRUE(r.events.empty());
  EXPECT_EQ(r.null_count, 1u);
}

TEST(Reasoner, ThetaRemovesFlicker) {
  const auto records = parse_observations(R"({"frame": 1, "objects": [{"id": "m", "category": "microwave"}], "attributes": [{"id": "m", "value": "closed"}]}
{"frame": 20, "attributes": [{"id": "m", "value": "open"}]}
{"frame": 22, "attributes": [{"id": "m", "value": "closed"}]}
{"frame": 40}
)");
  const auto graph = build_video_graph(kb(), records);
  ReasonerConfig cfg;
  EXPECT_TRUE(reason(graph, kb(), cfg).events.empty());
  cfg.refinement.window_width = 1;
  EXPECT_EQ(summarize(reason(graph, kb(), cfg).events),
            (Summary{{"open", {"m"}, 20}, {"close", {"m"}, 22}}));
}

TEST(Reasoner, LearnedBackendChecksHeads) {
  const auto graph = vrtest::script_graph(vrtest::load_script("open_and_pick"));
  ReasonerConfig cfg;
  cfg.backend = Backend::learned;
  EXPECT_THROW(reason(graph, kb(), cfg), ValidationError);
  ActionHeads swapped{heads().rar, heads().aar};
  EXPECT_THROW(reason(graph, kb(), cfg, &swapped), ValidationError);
}

TEST(Reasoner, ExplanationSentenceRoundTrips) {
  for (const char* name : {"open_and_pick", "meal", "heating_food"}) {
    for (const auto& e : run(name).events) {
      const auto parsed = parse_explanation(explain(e));
      EXPECT_EQ(parsed.action, e.action);
      EXPECT_EQ(parsed.time, e.time);
      EXPECT_EQ(parsed.pre, e.pre);
      EXPECT_EQ(parsed.eff, e.eff);
      ASSERT_EQ(parsed.participants.size(), e.participants.size());
      for (std::size_t i = 0; i < e.participants.size(); ++i)
        EXPECT_EQ(parsed.participants[i], e.participants[i].id);
    }
  }
  EXPECT_EQ(explain(run("open_and_pick").events[0]), "open (microwave_1, closed to open, frame 216)");
  EXPECT_THROW(parse_explanation("nothing here"), ParseError);
}

TEST(Reasoner, EventJson) {
  const auto doc = to_json(run("open_and_pick").events[1], true);
  EXPECT_EQ(doc["action"], "pick");
  EXPECT_EQ(doc["time"], 242);
  EXPECT_EQ(doc["sentence"], "pick (hand_2, cloth_1, not_holding to holding, frame 242)");
  EXPECT_FALSE(to_json(run("open_and_pick").events[1]).contains("sentence"));
}

TEST(Reasoner, BackendNames) {
  EXPECT_EQ(parse_backend("rule"), Backend::rule);
  EXPECT_EQ(parse_backend("learned"), Backend::learned);
  EXPECT_THROW(parse_backend("oracle"), ValidationError);
}

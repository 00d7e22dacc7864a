#include <gtest/gtest.h>

#include <algorithm>
#include <climits>
#include <functional>
#include <map>
#include <random>

#include "test_support.hpp"
#include "vidreason/composer.hpp"
#include "vidreason/error.hpp"

using namespace vidreason;

namespace {

const Vocabulary& vocab() { return vrtest::daily_life().vocabulary(); }

ActionEvent ev(const std::string& action, int time, std::vector<std::string> ids) {
  ActionEvent e;
  e.action = action;
  e.time = time;
  for (auto& id : ids) e.participants.push_back({id, ""});
  e.kind = ids.size() == 1 ? TransitionKind::attribute : TransitionKind::relationship;
  return e;
}

const ActivityRule kMeal{"having_meal", {"eat", "drink"}, false, {}};

// Smallest possible last-witness time over every injective assignment of
// unused events to atoms, or INT_MAX when the rule cannot fire.
int earliest_completion(const ActivityRule& rule, const std::vector<ActionEvent>& events,
                        const std::vector<bool>& used) {
  int best = INT_MAX;
  std::vector<std::size_t> pick(rule.required_actions.size());
  std::function<void(std::size_t)> go = [&](std::size_t atom) {
    if (atom == pick.size()) {
      std::vector<ActionEvent> w;
      int last = 0;
      for (auto i : pick) {
        w.push_back(events[i]);
        last = std::max(last, events[i].time);
      }
      if (satisfies(rule, w)) best = std::min(best, last);
      return;
    }
    for (std::size_t i = 0; i < events.size(); ++i) {
      if (used[i] || std::find(pick.begin(), pick.begin() + atom, i) != pick.begin() + atom) continue;
      pick[atom] = i;
      go(atom + 1);
    }
  };
  go(0);
  return best;
}

std::vector<ActionEvent> random_events(std::mt19937_64& rng, std::size_t n) {
  const std::vector<std::string> actions{"eat", "drink", "pick", "place"};
  const std::vector<std::string> ids{"a", "b", "c"};
  std::vector<ActionEvent> out;
  int t = 2;
  for (std::size_t i = 0; i < n; ++i) {
    t += static_cast<int>(rng() % 3);
    out.push_back(ev(actions[rng() % actions.size()], t, {"h", ids[rng() % ids.size()]}));
  }
  return out;
}

std::vector<ActivityRule> rule_family() {
  return {
      kMeal,
      {"pick_then_place", {"pick", "place"}, true, {{{{0, 1}, {1, 1}}}}},
      {"double_pick", {"pick", "pick"}, false, {}},
      {"meal_same_food", {"eat", "drink"}, false, {{{{0, 1}, {1, 1}}}}},
  };
}

std::size_t index_of(const std::vector<ActionEvent>& events, const ActionEvent& e,
                     const std::vector<bool>& used) {
  for (std::size_t i = 0; i < events.size(); ++i)
    if (!used[i] && events[i] == e) return i;
  return events.size();
}

// Detections of one rule in the order the greedy matcher found them.
std::vector<const ActivityDetection*> per_rule(const std::vector<ActivityDetection>& found,
                                               const std::string& name) {
  std::vector<const ActivityDetection*> out;
  for (const auto& d : found)
    if (d.name == name) out.push_back(&d);
  std::stable_sort(out.begin(), out.end(), [](auto* a, auto* b) { return a->last < b->last; });
  return out;
}

}  // namespace

TEST(Composer, HavingMealScenario) {
  ReasonerConfig cfg;
  const auto events =
      reason(vrtest::script_graph(vrtest::load_script("meal")), vrtest::daily_life(), cfg).events;
  const auto found = detect_activities(events, std::vector{kMeal}, vocab());
  ASSERT_EQ(found.size(), 1u);
  EXPECT_EQ(found[0].name, "having_meal");
  EXPECT_EQ(found[0].first, 70);
  EXPECT_EQ(found[0].last, 188);
  EXPECT_EQ(found[0].witnesses[0].action, "eat");
  EXPECT_EQ(found[0].witnesses[1].action, "drink");
}

TEST(Composer, NeedsEveryAtom) {
  std::vector<ActionEvent> only_eat{ev("eat", 5, {"head_1", "apple_1"})};
  EXPECT_TRUE(detect_activities(only_eat, std::vector{kMeal}, vocab()).empty());
  EXPECT_TRUE(detect_activities({}, std::vector{kMeal}, vocab()).empty());
}

TEST(Composer, OrderedRuleRespectsTime) {
  const ActivityRule r{"pick_then_place", {"pick", "place"}, true, {}};
  std::vector<ActionEvent> wrong{ev("place", 3, {"h", "c"}), ev("pick", 9, {"h", "c"})};
  EXPECT_TRUE(detect_activities(wrong, std::vector{r}, vocab()).empty());
  std::vector<ActionEvent> right{ev("pick", 3, {"h", "c"}), ev("place", 9, {"h", "c"})};
  EXPECT_EQ(detect_activities(right, std::vector{r}, vocab()).size(), 1u);
}

TEST(Composer, BindingsRequireSameParticipant) {
  const ActivityRule r{"same", {"pick", "place"}, false, {{{{0, 1}, {1, 1}}}}};
  std::vector<ActionEvent> events{ev("pick", 3, {"h", "cup"}), ev("place", 5, {"h", "bowl"}),
                                  ev("place", 8, {"h", "cup"})};
  const auto found = detect_activities(events, std::vector{r}, vocab());
  ASSERT_EQ(found.size(), 1u);
  EXPECT_EQ(found[0].last, 8);
}

TEST(Composer, RuleValidation) {
  EXPECT_THROW(validate_activity_rule({"x", {}, false, {}}, vocab()), ValidationError);
  EXPECT_THROW(validate_activity_rule({"x", {"fly"}, false, {}}, vocab()), ValidationError);
  EXPECT_THROW(validate_activity_rule({"x", {"null"}, false, {}}, vocab()), ValidationError);
  EXPECT_THROW(validate_activity_rule({"x", {"eat"}, false, {{{{0, 0}}}}}, vocab()), ValidationError);
  EXPECT_THROW(validate_activity_rule({"x", {"eat"}, false, {{{{0, 0}, {3, 0}}}}}, vocab()),
               ValidationError);
  std::vector<ActionEvent> unsorted{ev("eat", 9, {"a", "b"}), ev("drink", 3, {"a", "c"})};
  EXPECT_THROW(detect_activities(unsorted, std::vector{kMeal}, vocab()), ValidationError);
}

TEST(Composer, ParseRules) {
  const auto rules = parse_activity_rules(
      R"([{"name": "m", "actions": ["eat", "drink"]},
          {"name": "p", "actions": ["pick", "place"], "ordered": true, "bindings": [{"same": [[0, 1], [1, 1]]}]}])");
  ASSERT_EQ(rules.size(), 2u);
  EXPECT_EQ(rules[0], (ActivityRule{"m", {"eat", "drink"}, false, {}}));
  EXPECT_TRUE(rules[1].ordered);
  EXPECT_EQ(rules[1].bindings[0].same[1], (ParticipantRef{1, 1}));
  EXPECT_THROW(parse_activity_rules(R"([{"name": "m"}])"), ParseError);
  EXPECT_THROW(parse_activity_rules(R"([{"name": "m", "actions": [], "when": 1}])"), ParseError);
}

TEST(Composer, SoundDisjointAndEarliest) {
  std::mt19937_64 rng(21);
  const auto rules = rule_family();
  for (int trial = 0; trial < 150; ++trial) {
    const auto events = random_events(rng, 2 + rng() % 8);
    const auto found = detect_activities(events, rules, vocab());
    for (const auto& rule : rules) {
      std::vector<bool> used(events.size(), false);
      for (const auto* d : per_rule(found, rule.name)) {
        EXPECT_TRUE(satisfies(rule, d->witnesses));
        // the greedy pick completes as early as any witness set still could
        EXPECT_EQ(d->last, earliest_completion(rule, events, used)) << rule.name << " " << trial;
        for (const auto& w : d->witnesses) {
          const auto i = index_of(events, w, used);
          ASSERT_LT(i, events.size());
          used[i] = true;
        }
      }
      // nothing is left to match among the unused events
      EXPECT_EQ(earliest_completion(rule, events, used), INT_MAX) << rule.name << " " << trial;
    }
  }
}

TEST(Composer, PlainConjunctionCountIsMinimumActionCount) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const auto events = random_events(rng, rng() % 12);
    std::map<std::string, std::size_t> count;
    for (const auto& e : events) ++count[e.action];
    const auto found = detect_activities(events, std::vector{kMeal}, vocab());
    EXPECT_EQ(found.size(), std::min(count["eat"], count["drink"]));
  }
}

TEST(Composer, AppendingLaterEventsKeepsEarlierDetections) {
  std::mt19937_64 rng(8);
  const auto rules = rule_family();
  for (int trial = 0; trial < 150; ++trial) {
    auto events = random_events(rng, 1 + rng() % 8);
    const auto before = detect_activities(events, rules, vocab());
    auto more = random_events(rng, 1 + rng() % 4);
    for (auto& e : more) {
      e.time += events.back().time + 1;
      events.push_back(e);
    }
    const auto after = detect_activities(events, rules, vocab());
    EXPECT_GE(after.size(), before.size());
    for (const auto& rule : rules) {
      const auto a = per_rule(before, rule.name);
      const auto b = per_rule(after, rule.name);
      ASSERT_GE(b.size(), a.size());
      for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i]->witnesses, b[i]->witnesses);
      }
    }
  }
}

TEST(Composer, DetectionJson) {
  std::vector<ActionEvent> events{ev("drink", 4, {"head", "cup"}), ev("eat", 6, {"head", "apple"})};
  events[0].pre = "apart";
  events[0].eff = "contacting";
  events[1].pre = "apart";
  events[1].eff = "contacting";
  const auto doc = to_json(detect_activities(events, std::vector{kMeal}, vocab()).at(0));
  EXPECT_EQ(doc["name"], "having_meal");
  EXPECT_EQ(doc["span"], nlohmann::ordered_json({4, 6}));
  EXPECT_EQ(doc["witnesses"][0], "eat (head, apple, apart to contacting, frame 6)");
}

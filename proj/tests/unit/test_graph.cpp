#include <gtest/gtest.h>

#include "test_support.hpp"
#include "vidreason/error.hpp"
#include "vidreason/graph.hpp"

using namespace vidreason;

namespace {

const KnowledgeBase& kb() { return vrtest::daily_life(); }

std::vector<FrameObservation> parse(const std::string& text) {
  return parse_observations(text, "obs.jsonl");
}

const char* kMicrowave = R"({"frame": 1, "objects": [{"id": "microwave_1", "category": "microwave", "bbox": [10, 20, 30, 40]}], "attributes": [{"id": "microwave_1", "value": "closed"}]}
{"frame": 4, "attributes": [{"id": "microwave_1", "value": "open"}]}
{"frame": 6, "objects": [{"id": "microwave_1", "category": "microwave", "bbox": [11, 20, 30, 40]}]}
)";

}  // namespace

TEST(Graph, CarryForwardFillsSparseFrames) {
  const auto g = build_video_graph(kb(), parse(kMicrowave));
  EXPECT_EQ(g.frame_count(), 6);
  const auto track = g.attribute_track("microwave_1", 0);
  ASSERT_EQ(track.size(), 6u);
  EXPECT_EQ(track[0], (std::pair<int, std::string>{1, "closed"}));
  EXPECT_EQ(track[2].second, "closed");
  EXPECT_EQ(track[3].second, "open");
  EXPECT_EQ(track[5].second, "open");
}

TEST(Graph, FrameCountOverride) {
  EXPECT_EQ(build_video_graph(kb(), parse(kMicrowave), 10).frame_count(), 10);
  EXPECT_THROW(build_video_graph(kb(), parse(kMicrowave), 3), ValidationError);
}

TEST(Graph, EmptyVideoRejected) {
  EXPECT_THROW(build_video_graph(kb(), {}), ValidationError);
}

TEST(Graph, TransitionTimeIsFirstFrameOfEffect) {
  const auto g = build_video_graph(kb(), parse(kMicrowave));
  const auto transitions = detect_transitions(g);
  ASSERT_EQ(transitions.size(), 1u);
  EXPECT_EQ(transitions[0].time, 4);
  EXPECT_EQ(transitions[0].pre, "closed");
  EXPECT_EQ(transitions[0].eff, "open");
  EXPECT_EQ(transitions[0].participants, std::vector<std::string>{"microwave_1"});
  ASSERT_EQ(transitions[0].locations.size(), 1u);
  // no box at frame 4: last box before it
  EXPECT_EQ(transitions[0].locations[0], (BBox{10, 20, 30, 40}));
}

TEST(Graph, LocationUsesLatestBox) {
  const auto g = build_video_graph(kb(), parse(kMicrowave));
  EXPECT_EQ(g.location("microwave_1", 5), (BBox{10, 20, 30, 40}));
  EXPECT_EQ(g.location("microwave_1", 6), (BBox{11, 20, 30, 40}));
}

TEST(Graph, UndefinedToDefinedIsNotATransition) {
  const auto g = build_video_graph(kb(), parse(R"({"frame": 1, "objects": [{"id": "m", "category": "microwave"}]}
{"frame": 3, "attributes": [{"id": "m", "value": "open"}]}
)"));
  EXPECT_TRUE(detect_transitions(g).empty());
  EXPECT_EQ(g.attribute_track("m", 0).front().first, 3);
}

TEST(Graph, SceneView) {
  const auto g = build_video_graph(kb(), parse(kMicrowave));
  const auto s = g.scene(5);
  EXPECT_EQ(s.frame, 5);
  EXPECT_EQ(s.node_states.at(NodeKey{"microwave_1", 0}), "open");
  EXPECT_EQ(g.scenes().size(), 6u);
  EXPECT_THROW(g.scene(0), ValidationError);
}

TEST(Graph, TrackAccessorErrors) {
  const auto g = build_video_graph(kb(), parse(R"({"frame": 1, "objects": [{"id": "m", "category": "microwave"}, {"id": "h", "category": "hand"}]})"));
  EXPECT_THROW(g.attribute_track("nobody", 0), ValidationError);
  EXPECT_THROW(g.attribute_track("h", 0), DomainError);
  EXPECT_THROW(g.relationship_track("h", "m", 0), DomainError);
}

TEST(Graph, RejectsBadRecords) {
  // unknown category
  EXPECT_THROW(build_video_graph(kb(), parse(R"({"frame": 1, "objects": [{"id": "x", "category": "dragon"}]})")),
               ValidationError);
  // category change
  EXPECT_THROW(build_video_graph(kb(), parse(R"({"frame": 1, "objects": [{"id": "x", "category": "cup"}]}
{"frame": 2, "objects": [{"id": "x", "category": "bowl"}]})")),
               ValidationError);
  // state before declaration
  EXPECT_THROW(build_video_graph(kb(), parse(R"({"frame": 1, "attributes": [{"id": "m", "value": "open"}]})")),
               ValidationError);
  // inapplicable attribute
  EXPECT_THROW(build_video_graph(kb(), parse(R"({"frame": 1, "objects": [{"id": "c", "category": "cup"}], "attributes": [{"id": "c", "value": "open"}]})")),
               DomainError);
  // subject equals object
  EXPECT_THROW(build_video_graph(kb(), parse(R"({"frame": 1, "objects": [{"id": "h", "category": "head"}], "relationships": [{"subject": "h", "object": "h", "value": "apart"}]})")),
               ValidationError);
  // conflicting duplicate
  EXPECT_THROW(build_video_graph(kb(), parse(R"({"frame": 1, "objects": [{"id": "m", "category": "microwave"}], "attributes": [{"id": "m", "value": "open"}, {"id": "m", "value": "closed"}]})")),
               ValidationError);
}

TEST(Graph, ParseErrorsCarryLineNumbers) {
  try {
    parse("{\"frame\": 1}\n\n{\"frame\": \"two\"}\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.location(), "obs.jsonl:3");
  }
  EXPECT_THROW(parse(R"({"frame": 1, "colour": "red"})"), ParseError);
  EXPECT_THROW(parse(R"({"frame": 1, "objects": [{"id": "a", "category": "cup", "bbox": [0, 0, 0, 1]}]})"),
               ValidationError);
}

TEST(Graph, ObservationSerializationRoundTrips) {
  const auto records = parse(kMicrowave);
  EXPECT_EQ(parse(serialize_observations(records)), records);
}

TEST(Graph, DenseObservationsRebuildTheSameGraph) {
  for (const char* name : {"open_and_pick", "meal", "heating_food"}) {
    const auto g = vrtest::script_graph(vrtest::load_script(name));
    const auto again = build_video_graph(kb(), to_observations(g), g.frame_count());
    EXPECT_EQ(again.node_tracks(), g.node_tracks()) << name;
    EXPECT_EQ(again.edge_tracks(), g.edge_tracks()) << name;
    EXPECT_EQ(detect_transitions(again), detect_transitions(g)) << name;
  }
}

TEST(Graph, TransitionsAreSortedByTimeThenParticipants) {
  const auto g = vrtest::script_graph(vrtest::load_script("heating_food"));
  const auto t = detect_transitions(g);
  for (std::size_t i = 1; i < t.size(); ++i) {
    EXPECT_LE(t[i - 1].time, t[i].time);
    if (t[i - 1].time == t[i].time) {
      EXPECT_LE(t[i - 1].participants, t[i].participants);
    }
  }
}

TEST(Graph, TransitionsMatchFrameByFrameScan) {
  const auto g = vrtest::script_graph(vrtest::load_script("meal"));
  std::size_t expected = 0;
  auto count = [&](const StateTrack& track) {
    for (std::size_t i = 1; i < track.size(); ++i)
      if (track[i - 1] != kUndefinedState && track[i] != track[i - 1]) ++expected;
  };
  for (const auto& [_, track] : g.node_tracks()) count(track);
  for (const auto& [_, track] : g.edge_tracks()) count(track);
  EXPECT_EQ(detect_transitions(g).size(), expected);
}

TEST(Graph, WithTracksChecksLength) {
  const auto g = build_video_graph(kb(), parse(kMicrowave));
  auto nodes = g.node_tracks();
  nodes.begin()->second.pop_back();
  EXPECT_THROW(g.with_tracks(nodes, g.edge_tracks()), ValidationError);
}

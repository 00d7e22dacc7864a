#include <gtest/gtest.h>

#include <set>

#include "test_support.hpp"
#include "vidreason/classifiers.hpp"
#include "vidreason/error.hpp"

using namespace vidreason;

namespace {

const KnowledgeBase& kb() { return vrtest::daily_life(); }

// Both heads train once for the whole file.
const TrainedActionHead& trained(ActionModel which) {
  static const TrainedActionHead aar = train_action_head(kb(), ActionModel::aar, TrainConfig{});
  static const TrainedActionHead rar = train_action_head(kb(), ActionModel::rar, TrainConfig{});
  return which == ActionModel::aar ? aar : rar;
}

}  // namespace

TEST(OneHot, EncodeDecode) {
  OneHotEncoder enc({"a", "b", "c"});
  EXPECT_EQ(enc.encode("b"), (std::vector<double>{0, 1, 0}));
  EXPECT_EQ(enc.decode(enc.encode("c")), "c");
  EXPECT_THROW(enc.index("d"), ValidationError);
  const std::vector<double> two{1, 1, 0};
  EXPECT_THROW(enc.decode(two), ValidationError);
}

TEST(Encoding, Dimensions) {
  EXPECT_EQ(encode_attribute_transition(kb(), "microwave", "closed", "open").size(), 17u);
  EXPECT_EQ(encode_relationship_transition(kb(), "hand", "cup", "not_holding", "holding").size(), 38u);
}

TEST(Encoding, IsInjectiveAndInvertible) {
  std::set<std::vector<double>> seen;
  for (const auto& t : kb().enumerate_transitions()) {
    const auto x = encode_transition(kb(), t);
    EXPECT_TRUE(seen.insert(x).second);
    const auto back = t.kind == TransitionKind::attribute ? decode_attribute_transition(kb(), x)
                                                          : decode_relationship_transition(kb(), x);
    EXPECT_EQ(back.kind, t.kind);
    EXPECT_EQ(back.subject, t.subject);
    EXPECT_EQ(back.object, t.object);
    EXPECT_EQ(back.pre, t.pre);
    EXPECT_EQ(back.eff, t.eff);
  }
  EXPECT_EQ(seen.size(), 84u);
}

TEST(Encoding, OutOfDomainRejected) {
  EXPECT_THROW(encode_relationship_transition(kb(), "head", "head", "apart", "contacting"), DomainError);
  EXPECT_THROW(encode_attribute_transition(kb(), "cup", "closed", "open"), DomainError);
  EXPECT_THROW(encode_attribute_transition(kb(), "dragon", "closed", "open"), Error);
}

TEST(Encoding, CategoryFeatures) {
  const std::vector<std::string> cats{"hand", "cup"};
  const auto f = category_features(kb(), cats);
  ASSERT_EQ(f.size(), 26u);
  EXPECT_EQ(f[0], 1.0);
  EXPECT_EQ(f[13 + 6], 1.0);
}

TEST(LinearHead, ArgmaxTiesPickLowestIndex) {
  auto head = LinearHead::zeros(2, {"null", "a", "b"});
  const std::vector<double> x{1.0, 0.0};
  EXPECT_EQ(predict_action(head, x).index, 0u);
  head.b = {0.0, 1.0, 1.0};
  EXPECT_EQ(predict_action(head, x).index, 1u);
  const std::vector<double> wrong{1.0};
  EXPECT_THROW(predict_action(head, wrong), RuntimeError);
}

TEST(LinearHead, LossOfUniformScoresIsLogK) {
  const auto head = LinearHead::zeros(3, {"a", "b", "c", "d"});
  std::vector<LabeledVector> batch{{{1, 2, 3}, 2}};
  EXPECT_NEAR(cross_entropy_loss(head, batch), std::log(4.0), 1e-12);
}

TEST(LinearHead, GradientMatchesCentralDifference) {
  for (std::uint64_t seed = 0; seed < 10; ++seed)
    EXPECT_LE(vrtest::linear_head_gradient_error(seed), 1e-4) << seed;
}

TEST(GatedHead, GradientMatchesCentralDifference) {
  for (std::uint64_t seed = 0; seed < 10; ++seed)
    EXPECT_LE(vrtest::gated_head_gradient_error(seed), 1e-4) << seed;
}

TEST(GatedHead, IdentityGateIsLinear) {
  auto head = GatedStateHead::identity(2, 3, {"a", "b"});
  head.z = Matrix(2, 2);
  head.z(0, 0) = 1.0;
  head.z(1, 1) = 2.0;
  head.d = {0.5, -0.5};
  const std::vector<double> f{3.0, 4.0};
  const std::vector<double> c{0.0, 1.0, 0.0};
  EXPECT_EQ(head.gate(c), (std::vector<double>{1.0, 1.0}));
  EXPECT_EQ(gated_state_score(head, f, c), (std::vector<double>{3.5, 7.5}));
}

TEST(ActionTraining, TrainingSetSizes) {
  EXPECT_EQ(action_training_set(kb(), ActionModel::aar).size(), 12u);
  EXPECT_EQ(action_training_set(kb(), ActionModel::rar).size(), 72u);
}

TEST(ActionTraining, HeadsReproduceRuleLookup) {
  for (auto which : {ActionModel::aar, ActionModel::rar}) {
    const auto& t = trained(which);
    EXPECT_EQ(t.training_accuracy, 1.0);
    const auto transitions = which == ActionModel::aar ? kb().enumerate_attribute_transitions()
                                                       : kb().enumerate_relationship_transitions();
    for (const auto& tr : transitions) {
      const auto p = predict_action(t.head, encode_transition(kb(), tr));
      EXPECT_EQ(t.head.classes[p.index], tr.action);
    }
  }
}

TEST(ActionTraining, SeededRunsAreIdentical) {
  TrainConfig cfg;
  cfg.seed = 3;
  const auto a = train_action_head(kb(), ActionModel::aar, cfg);
  const auto b = train_action_head(kb(), ActionModel::aar, cfg);
  EXPECT_EQ(a.head, b.head);
  EXPECT_EQ(a.epochs_run, b.epochs_run);
}

TEST(ActionTraining, NonConvergenceIsRuntimeError) {
  TrainConfig cfg;
  cfg.epochs = 3;
  EXPECT_THROW(train_action_head(kb(), ActionModel::rar, cfg), RuntimeError);
}

TEST(ActionTraining, BadConfigRejected) {
  TrainConfig cfg;
  cfg.learning_rate = -1.0;
  EXPECT_THROW(train_action_head(kb(), ActionModel::aar, cfg), ValidationError);
}

TEST(Serialization, LinearHeadRoundTripIsBitExact) {
  const auto& head = trained(ActionModel::rar).head;
  const auto text = to_json(head).dump();
  const auto back = linear_head_from_json(text);
  EXPECT_EQ(back, head);
  EXPECT_EQ(to_json(back).dump(), text);
}

TEST(Serialization, GatedHeadRoundTripIsBitExact) {
  auto head = GatedStateHead::identity(3, 2, {"open", "closed"});
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (auto* v : {&head.z.data, &head.d, &head.gate_w.data, &head.gate_b})
    for (auto& p : *v) p = g(rng);
  EXPECT_EQ(gated_head_from_json(to_json(head).dump()), head);
}

TEST(Serialization, MalformedHeadRejected) {
  EXPECT_THROW(linear_head_from_json("{}"), ParseError);
  EXPECT_THROW(linear_head_from_json(R"({"input_dim": 2, "classes": ["a"], "w": [[1]], "b": [0]})"),
               Error);
}

TEST(StateTraining, SeparableSetReachesHighHoldoutAccuracy) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<StateSample> data;
  while (data.size() < 400) {
    std::vector<double> f{u(rng), u(rng), u(rng)};
    const double margin = f[0] + 0.5 * f[1];
    if (std::abs(margin) < 0.1) continue;
    data.push_back({f, {1.0}, margin > 0 ? 1u : 0u});
  }
  const auto t = train_state_head(data, {"off", "on"}, StateTrainConfig{});
  EXPECT_GE(t.holdout_accuracy, 0.95);
}

TEST(StateTraining, GatingBeatsUngatedOnCategoryDependentData) {
  const auto data = vrtest::category_dependent_dataset(800, 1);
  StateTrainConfig gated;
  StateTrainConfig plain;
  plain.gated = false;
  const auto a = train_state_head(data, {"neg", "pos"}, gated);
  const auto b = train_state_head(data, {"neg", "pos"}, plain);
  EXPECT_GE(a.holdout_accuracy, 0.95);
  EXPECT_GE(a.holdout_accuracy - b.holdout_accuracy, 0.10);
  // ungated gate stays the identity
  EXPECT_EQ(b.head.gate_b, (std::vector<double>{1.0, 1.0}));
}

TEST(StateTraining, RejectsDegenerateData) {
  EXPECT_THROW(train_state_head({}, {"a", "b"}, StateTrainConfig{}), ValidationError);
  std::vector<StateSample> one{{{1.0}, {1.0}, 0}, {{2.0}, {1.0}, 0}};
  EXPECT_THROW(train_state_head(one, {"a", "b"}, StateTrainConfig{}), ValidationError);
}

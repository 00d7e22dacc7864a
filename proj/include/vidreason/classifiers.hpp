#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vidreason/knowledge_base.hpp"

namespace vidreason {

// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  bool operator==(const Matrix&) const = default;
};

class OneHotEncoder {
 public:
  explicit OneHotEncoder(std::vector<std::string> vocabulary);

  std::size_t dimension() const { return vocabulary_.size(); }
  std::size_t index(std::string_view name) const;  // ValidationError if unknown
  std::vector<double> encode(std::string_view name) const;
  // Appends the one-hot block for `name` to `out`.
  void append(std::string_view name, std::vector<double>& out) const;
  // Name of the single hot entry of a block; ValidationError if not one-hot.
  std::string decode(std::span<const double> block) const;

 private:
  std::vector<std::string> vocabulary_;
};

// ---- Transition encodings for the action models ----

// [onehot(object) | onehot(pre) | onehot(eff)], dimension M + 2S.
std::vector<double> encode_attribute_transition(const KnowledgeBase& kb, std::string_view object,
                                                std::string_view pre, std::string_view eff);
// [onehot(subject) | onehot(object) | onehot(pre) | onehot(eff)], dimension 2M + 2N.
std::vector<double> encode_relationship_transition(const KnowledgeBase& kb,
                                                   std::string_view subject,
                                                   std::string_view object, std::string_view pre,
                                                   std::string_view eff);
// Encodes a labeled transition of either kind (label is ignored).
std::vector<double> encode_transition(const KnowledgeBase& kb, const LabeledTransition& t);
// Inverse of the encoders; `action` of the result is left empty.
LabeledTransition decode_attribute_transition(const KnowledgeBase& kb, std::span<const double> x);
LabeledTransition decode_relationship_transition(const KnowledgeBase& kb,
                                                 std::span<const double> x);

// Concatenated category one-hots used to gate state detectors.
std::vector<double> category_features(const KnowledgeBase& kb,
                                      std::span<const std::string> categories);

// ---- Linear action heads ----

struct LinearHead {
  std::size_t input_dim = 0;
  std::vector<std::string> classes;
  Matrix w;  // classes x input_dim
  std::vector<double> b;

  static LinearHead zeros(std::size_t input_dim, std::vector<std::string> classes);
  std::vector<double> scores(std::span<const double> x) const;
  bool operator==(const LinearHead&) const = default;
};

struct Prediction {
  std::size_t index = 0;
  std::vector<double> scores;
};

// Affine scores and their argmax (lowest index wins ties). Throws
// RuntimeError on dimension mismatch.
Prediction predict_action(const LinearHead& head, std::span<const double> x);

struct LabeledVector {
  std::vector<double> x;
  std::size_t label = 0;
};

struct LinearHeadGradient {
  Matrix w;
  std::vector<double> b;
};

// Mean softmax cross-entropy over `batch`; fills `grad` when given.
double cross_entropy_loss(const LinearHead& head, std::span<const LabeledVector> batch,
                          LinearHeadGradient* grad = nullptr);

enum class Optimizer { gradient_descent, adam };

struct TrainConfig {
  double learning_rate = 0.01;
  int epochs = 100000;
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::gradient_descent;
  double init_scale = 0.01;  // weights start uniform in [-init_scale, init_scale]
};

enum class ActionModel { aar, rar };

std::string_view to_string(ActionModel which);
ActionModel parse_action_model(std::string_view name);

struct TrainedActionHead {
  LinearHead head;
  double training_accuracy = 0.0;
  std::size_t training_size = 0;
  int epochs_run = 0;
};

// Training set of an action model: every enumerated transition of that kind.
std::vector<LabeledVector> action_training_set(const KnowledgeBase& kb, ActionModel which);

// Full-batch training on the enumerated transitions; stops as soon as every
// training tuple is classified correctly. Throws RuntimeError when the
// epochs run out first, and ValidationError for an empty training set.
TrainedActionHead train_action_head(const KnowledgeBase& kb, ActionModel which,
                                    const TrainConfig& cfg);

// ---- Category-gated state detectors ----

// score = z * (feature ⊙ gate) + d, with gate = gate_w * categories + gate_b.
struct GatedStateHead {
  std::size_t feature_dim = 0;
  std::size_t category_dim = 0;
  std::vector<std::string> classes;
  Matrix z;       // classes x feature_dim
  std::vector<double> d;
  Matrix gate_w;  // feature_dim x category_dim
  std::vector<double> gate_b;

  // Identity gate (gate_w = 0, gate_b = 1) and zero classifier.
  static GatedStateHead identity(std::size_t feature_dim, std::size_t category_dim,
                                 std::vector<std::string> classes);
  std::vector<double> gate(std::span<const double> categories) const;
  bool operator==(const GatedStateHead&) const = default;
};

std::vector<double> gated_state_score(const GatedStateHead& head, std::span<const double> feature,
                                      std::span<const double> categories);

struct StateSample {
  std::vector<double> feature;
  std::vector<double> categories;
  std::size_t label = 0;
};

struct GatedStateGradient {
  Matrix z;
  std::vector<double> d;
  Matrix gate_w;
  std::vector<double> gate_b;
};

double cross_entropy_loss(const GatedStateHead& head, std::span<const StateSample> batch,
                          GatedStateGradient* grad = nullptr);

struct StateTrainConfig {
  TrainConfig train{0.01, 400, 0, Optimizer::adam, 0.1};
  bool gated = true;  // false freezes the identity gate
  double holdout_fraction = 0.25;
};

struct TrainedStateHead {
  GatedStateHead head;
  double training_accuracy = 0.0;
  double holdout_accuracy = 0.0;
};

double accuracy(const GatedStateHead& head, std::span<const StateSample> samples);

// Seeded shuffle, holdout split, then full-batch training. Throws
// ValidationError for an empty dataset or one with a single class.
TrainedStateHead train_state_head(std::span<const StateSample> dataset,
                                  std::vector<std::string> classes, const StateTrainConfig& cfg);

// ---- Serialization ----
// {input_dim, classes, w, b}; doubles round-trip exactly.

nlohmann::ordered_json to_json(const LinearHead& head);
LinearHead linear_head_from_json(std::string_view text, const std::string& source = "head");

nlohmann::ordered_json to_json(const GatedStateHead& head);
GatedStateHead gated_head_from_json(std::string_view text, const std::string& source = "head");

}  // namespace vidreason

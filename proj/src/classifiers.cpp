#include "vidreason/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "json_util.hpp"
#include "vidreason/error.hpp"

namespace vidreason {

namespace {

using detail::json;

void softmax_in_place(std::vector<double>& scores) {
  const double top = *std::max_element(scores.begin(), scores.end());
  double sum = 0.0;
  for (double& s : scores) {
    s = std::exp(s - top);
    sum += s;
  }
  for (double& s : scores) s /= sum;
}

std::size_t argmax(std::span<const double> scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  return best;
}

void check_dim(std::size_t got, std::size_t want, const char* what) {
  if (got != want)
    throw RuntimeError(std::string(what) + " dimension mismatch: got " + std::to_string(got) +
                       ", expected " + std::to_string(want));
}

void fill_uniform(std::vector<double>& values, double scale, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  for (double& v : values) v = dist(rng);
}

// Per-tensor parameter update: plain gradient descent or Adam.
class Updater {
 public:
  Updater(const TrainConfig& cfg, std::size_t slots) : cfg_(cfg), m_(slots), v_(slots) {}

  void begin_step() { ++step_; }

  void apply(std::size_t slot, std::vector<double>& params, const std::vector<double>& grad) {
    if (cfg_.optimizer == Optimizer::gradient_descent) {
      for (std::size_t i = 0; i < params.size(); ++i) params[i] -= cfg_.learning_rate * grad[i];
      return;
    }
    constexpr double beta1 = 0.9;
    constexpr double beta2 = 0.999;
    constexpr double eps = 1e-8;
    auto& m = m_[slot];
    auto& v = v_[slot];
    if (m.empty()) {
      m.assign(params.size(), 0.0);
      v.assign(params.size(), 0.0);
    }
    const double c1 = 1.0 - std::pow(beta1, step_);
    const double c2 = 1.0 - std::pow(beta2, step_);
    for (std::size_t i = 0; i < params.size(); ++i) {
      m[i] = beta1 * m[i] + (1 - beta1) * grad[i];
      v[i] = beta2 * v[i] + (1 - beta2) * grad[i] * grad[i];
      params[i] -= cfg_.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
    }
  }

 private:
  TrainConfig cfg_;
  int step_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

void validate_train_config(const TrainConfig& cfg) {
  if (!(cfg.learning_rate > 0)) throw ValidationError("learning rate must be positive");
  if (cfg.epochs < 1) throw ValidationError("epochs must be >= 1");
}

std::vector<std::vector<double>> rows_of(const Matrix& m) {
  std::vector<std::vector<double>> out(m.rows);
  for (std::size_t r = 0; r < m.rows; ++r)
    out[r].assign(m.data.begin() + static_cast<std::ptrdiff_t>(r * m.cols),
                  m.data.begin() + static_cast<std::ptrdiff_t>((r + 1) * m.cols));
  return out;
}

Matrix matrix_from_json(const json& value, std::size_t rows, std::size_t cols,
                        const std::string& where) {
  detail::require_array(value, where);
  if (value.size() != rows)
    throw ParseError("expected " + std::to_string(rows) + " rows", where);
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::string row_where = detail::indexed(where, r);
    detail::require_array(value[r], row_where);
    if (value[r].size() != cols)
      throw ParseError("expected " + std::to_string(cols) + " columns", row_where);
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = detail::get_number(value[r][c], row_where);
  }
  return m;
}

std::vector<double> vector_from_json(const json& value, std::size_t size,
                                     const std::string& where) {
  detail::require_array(value, where);
  if (value.size() != size) throw ParseError("expected " + std::to_string(size) + " values", where);
  std::vector<double> out(size);
  for (std::size_t i = 0; i < size; ++i) out[i] = detail::get_number(value[i], where);
  return out;
}

std::size_t get_size(const json& value, const std::string& where) {
  const long long n = detail::get_integer(value, where);
  if (n < 0) throw ParseError("expected a non-negative integer", where);
  return static_cast<std::size_t>(n);
}

}  // namespace

// ---- OneHotEncoder ----

OneHotEncoder::OneHotEncoder(std::vector<std::string> vocabulary)
    : vocabulary_(std::move(vocabulary)) {}

std::size_t OneHotEncoder::index(std::string_view name) const {
  auto it = std::find(vocabulary_.begin(), vocabulary_.end(), name);
  if (it == vocabulary_.end()) throw ValidationError("unknown name '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - vocabulary_.begin());
}

std::vector<double> OneHotEncoder::encode(std::string_view name) const {
  std::vector<double> out;
  append(name, out);
  return out;
}

void OneHotEncoder::append(std::string_view name, std::vector<double>& out) const {
  const std::size_t hot = index(name);
  const std::size_t base = out.size();
  out.resize(base + dimension(), 0.0);
  out[base + hot] = 1.0;
}

std::string OneHotEncoder::decode(std::span<const double> block) const {
  check_dim(block.size(), dimension(), "one-hot");
  std::size_t hot = block.size();
  for (std::size_t i = 0; i < block.size(); ++i) {
    if (block[i] == 1.0 && hot == block.size()) {
      hot = i;
    } else if (block[i] != 0.0) {
      throw ValidationError("block is not one-hot");
    }
  }
  if (hot == block.size()) throw ValidationError("block is not one-hot");
  return vocabulary_[hot];
}

// ---- Encodings ----

std::vector<double> encode_attribute_transition(const KnowledgeBase& kb, std::string_view object,
                                                std::string_view pre, std::string_view eff) {
  const auto& vocab = kb.vocabulary();
  OneHotEncoder objects(vocab.objects);
  OneHotEncoder values(vocab.attributes);
  std::vector<double> x;
  x.reserve(objects.dimension() + 2 * values.dimension());
  objects.append(object, x);
  values.append(pre, x);
  values.append(eff, x);
  // Only in-domain tuples have a meaning for the action model.
  kb.lookup_attribute_action(object, pre, eff);
  return x;
}

std::vector<double> encode_relationship_transition(const KnowledgeBase& kb,
                                                   std::string_view subject,
                                                   std::string_view object, std::string_view pre,
                                                   std::string_view eff) {
  const auto& vocab = kb.vocabulary();
  OneHotEncoder objects(vocab.objects);
  OneHotEncoder values(vocab.relationships);
  std::vector<double> x;
  x.reserve(2 * objects.dimension() + 2 * values.dimension());
  objects.append(subject, x);
  objects.append(object, x);
  values.append(pre, x);
  values.append(eff, x);
  if (subject == object)
    throw DomainError("relationship subject and object must differ ('" + std::string(subject) +
                      "')");
  kb.lookup_relationship_action(subject, object, pre, eff);
  return x;
}

std::vector<double> encode_transition(const KnowledgeBase& kb, const LabeledTransition& t) {
  if (t.kind == TransitionKind::attribute)
    return encode_attribute_transition(kb, t.subject, t.pre, t.eff);
  return encode_relationship_transition(kb, t.subject, t.object, t.pre, t.eff);
}

LabeledTransition decode_attribute_transition(const KnowledgeBase& kb,
                                              std::span<const double> x) {
  const auto& vocab = kb.vocabulary();
  const std::size_t m = vocab.objects.size();
  const std::size_t s = vocab.attributes.size();
  check_dim(x.size(), m + 2 * s, "attribute encoding");
  OneHotEncoder objects(vocab.objects);
  OneHotEncoder values(vocab.attributes);
  LabeledTransition t;
  t.kind = TransitionKind::attribute;
  t.subject = objects.decode(x.subspan(0, m));
  t.pre = values.decode(x.subspan(m, s));
  t.eff = values.decode(x.subspan(m + s, s));
  return t;
}

LabeledTransition decode_relationship_transition(const KnowledgeBase& kb,
                                                 std::span<const double> x) {
  const auto& vocab = kb.vocabulary();
  const std::size_t m = vocab.objects.size();
  const std::size_t n = vocab.relationships.size();
  check_dim(x.size(), 2 * m + 2 * n, "relationship encoding");
  OneHotEncoder objects(vocab.objects);
  OneHotEncoder values(vocab.relationships);
  LabeledTransition t;
  t.kind = TransitionKind::relationship;
  t.subject = objects.decode(x.subspan(0, m));
  t.object = objects.decode(x.subspan(m, m));
  t.pre = values.decode(x.subspan(2 * m, n));
  t.eff = values.decode(x.subspan(2 * m + n, n));
  return t;
}

std::vector<double> category_features(const KnowledgeBase& kb,
                                      std::span<const std::string> categories) {
  OneHotEncoder objects(kb.vocabulary().objects);
  std::vector<double> out;
  for (const auto& category : categories) objects.append(category, out);
  return out;
}

// ---- LinearHead ----

LinearHead LinearHead::zeros(std::size_t input_dim, std::vector<std::string> classes) {
  LinearHead head;
  head.input_dim = input_dim;
  head.w = Matrix(classes.size(), input_dim);
  head.b.assign(classes.size(), 0.0);
  head.classes = std::move(classes);
  return head;
}

std::vector<double> LinearHead::scores(std::span<const double> x) const {
  check_dim(x.size(), input_dim, "input");
  std::vector<double> out(b);
  for (std::size_t k = 0; k < w.rows; ++k)
    for (std::size_t j = 0; j < input_dim; ++j) out[k] += w(k, j) * x[j];
  return out;
}

Prediction predict_action(const LinearHead& head, std::span<const double> x) {
  Prediction p;
  p.scores = head.scores(x);
  p.index = argmax(p.scores);
  return p;
}

double cross_entropy_loss(const LinearHead& head, std::span<const LabeledVector> batch,
                          LinearHeadGradient* grad) {
  const std::size_t k = head.classes.size();
  if (grad) {
    grad->w = Matrix(k, head.input_dim);
    grad->b.assign(k, 0.0);
  }
  if (batch.empty()) return 0.0;
  double loss = 0.0;
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (const auto& sample : batch) {
    auto p = head.scores(sample.x);
    softmax_in_place(p);
    loss -= std::log(std::max(p[sample.label], 1e-300));
    if (!grad) continue;
    for (std::size_t c = 0; c < k; ++c) {
      const double delta = (p[c] - (c == sample.label ? 1.0 : 0.0)) * scale;
      grad->b[c] += delta;
      for (std::size_t j = 0; j < head.input_dim; ++j) grad->w(c, j) += delta * sample.x[j];
    }
  }
  return loss * scale;
}

std::string_view to_string(ActionModel which) { return which == ActionModel::aar ? "aar" : "rar"; }

ActionModel parse_action_model(std::string_view name) {
  if (name == "aar") return ActionModel::aar;
  if (name == "rar") return ActionModel::rar;
  throw ValidationError("unknown action model '" + std::string(name) + "' (expected aar or rar)");
}

std::vector<LabeledVector> action_training_set(const KnowledgeBase& kb, ActionModel which) {
  const auto transitions = which == ActionModel::aar ? kb.enumerate_attribute_transitions()
                                                     : kb.enumerate_relationship_transitions();
  std::vector<LabeledVector> out;
  out.reserve(transitions.size());
  for (const auto& t : transitions)
    out.push_back({encode_transition(kb, t), *kb.vocabulary().action_index(t.action)});
  return out;
}

TrainedActionHead train_action_head(const KnowledgeBase& kb, ActionModel which,
                                    const TrainConfig& cfg) {
  validate_train_config(cfg);
  const auto data = action_training_set(kb, which);
  if (data.empty())
    throw ValidationError("no " + std::string(to_string(which)) + " transitions to train on");

  const auto& vocab = kb.vocabulary();
  const std::size_t dim = which == ActionModel::aar
                              ? vocab.objects.size() + 2 * vocab.attributes.size()
                              : 2 * vocab.objects.size() + 2 * vocab.relationships.size();
  TrainedActionHead result;
  result.training_size = data.size();
  LinearHead& head = result.head;
  head = LinearHead::zeros(dim, vocab.actions);
  std::mt19937_64 rng(cfg.seed);
  fill_uniform(head.w.data, cfg.init_scale, rng);

  auto correct = [&] {
    std::size_t hits = 0;
    for (const auto& sample : data) hits += predict_action(head, sample.x).index == sample.label;
    return hits;
  };

  Updater updater(cfg, 2);
  LinearHeadGradient grad;
  std::size_t hits = correct();
  int epoch = 0;
  while (hits < data.size() && epoch < cfg.epochs) {
    cross_entropy_loss(head, data, &grad);
    updater.begin_step();
    updater.apply(0, head.w.data, grad.w.data);
    updater.apply(1, head.b, grad.b);
    ++epoch;
    hits = correct();
  }
  result.epochs_run = epoch;
  result.training_accuracy = static_cast<double>(hits) / static_cast<double>(data.size());
  if (hits < data.size())
    throw RuntimeError(std::string(to_string(which)) + " head did not converge within " +
                       std::to_string(cfg.epochs) + " epochs (training accuracy " +
                       std::to_string(result.training_accuracy) + ")");
  return result;
}

// ---- GatedStateHead ----

GatedStateHead GatedStateHead::identity(std::size_t feature_dim, std::size_t category_dim,
                                        std::vector<std::string> classes) {
  GatedStateHead head;
  head.feature_dim = feature_dim;
  head.category_dim = category_dim;
  head.z = Matrix(classes.size(), feature_dim);
  head.d.assign(classes.size(), 0.0);
  head.gate_w = Matrix(feature_dim, category_dim);
  head.gate_b.assign(feature_dim, 1.0);
  head.classes = std::move(classes);
  return head;
}

std::vector<double> GatedStateHead::gate(std::span<const double> categories) const {
  check_dim(categories.size(), category_dim, "category");
  std::vector<double> g(gate_b);
  for (std::size_t f = 0; f < feature_dim; ++f)
    for (std::size_t c = 0; c < category_dim; ++c) g[f] += gate_w(f, c) * categories[c];
  return g;
}

std::vector<double> gated_state_score(const GatedStateHead& head, std::span<const double> feature,
                                      std::span<const double> categories) {
  check_dim(feature.size(), head.feature_dim, "feature");
  const auto g = head.gate(categories);
  std::vector<double> out(head.d);
  for (std::size_t s = 0; s < head.z.rows; ++s)
    for (std::size_t f = 0; f < head.feature_dim; ++f) out[s] += head.z(s, f) * feature[f] * g[f];
  return out;
}

double cross_entropy_loss(const GatedStateHead& head, std::span<const StateSample> batch,
                          GatedStateGradient* grad) {
  const std::size_t k = head.classes.size();
  const std::size_t nf = head.feature_dim;
  const std::size_t nc = head.category_dim;
  if (grad) {
    grad->z = Matrix(k, nf);
    grad->d.assign(k, 0.0);
    grad->gate_w = Matrix(nf, nc);
    grad->gate_b.assign(nf, 0.0);
  }
  if (batch.empty()) return 0.0;
  double loss = 0.0;
  const double scale = 1.0 / static_cast<double>(batch.size());
  std::vector<double> delta(k);
  std::vector<double> gated(nf);
  for (const auto& sample : batch) {
    const auto g = head.gate(sample.categories);
    for (std::size_t f = 0; f < nf; ++f) gated[f] = sample.feature[f] * g[f];
    auto p = gated_state_score(head, sample.feature, sample.categories);
    softmax_in_place(p);
    loss -= std::log(std::max(p[sample.label], 1e-300));
    if (!grad) continue;
    for (std::size_t s = 0; s < k; ++s) {
      delta[s] = (p[s] - (s == sample.label ? 1.0 : 0.0)) * scale;
      grad->d[s] += delta[s];
      for (std::size_t f = 0; f < nf; ++f) grad->z(s, f) += delta[s] * gated[f];
    }
    for (std::size_t f = 0; f < nf; ++f) {
      double back = 0.0;
      for (std::size_t s = 0; s < k; ++s) back += head.z(s, f) * delta[s];
      const double dgate = back * sample.feature[f];
      grad->gate_b[f] += dgate;
      for (std::size_t c = 0; c < nc; ++c) grad->gate_w(f, c) += dgate * sample.categories[c];
    }
  }
  return loss * scale;
}

double accuracy(const GatedStateHead& head, std::span<const StateSample> samples) {
  if (samples.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& sample : samples)
    hits += argmax(gated_state_score(head, sample.feature, sample.categories)) == sample.label;
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

TrainedStateHead train_state_head(std::span<const StateSample> dataset,
                                  std::vector<std::string> classes, const StateTrainConfig& cfg) {
  validate_train_config(cfg.train);
  if (dataset.empty()) throw ValidationError("empty state dataset");
  if (!(cfg.holdout_fraction >= 0.0 && cfg.holdout_fraction < 1.0))
    throw ValidationError("holdout fraction must lie in [0, 1)");
  const std::size_t nf = dataset.front().feature.size();
  const std::size_t nc = dataset.front().categories.size();
  std::vector<bool> present(classes.size(), false);
  for (const auto& sample : dataset) {
    if (sample.feature.size() != nf || sample.categories.size() != nc)
      throw ValidationError("inconsistent sample dimensions");
    if (sample.label >= classes.size()) throw ValidationError("label outside class list");
    for (double v : sample.feature)
      if (!std::isfinite(v)) throw ValidationError("non-finite feature value");
    present[sample.label] = true;
  }
  if (std::count(present.begin(), present.end(), true) < 2)
    throw ValidationError("state dataset needs at least two classes");

  std::mt19937_64 rng(cfg.train.seed);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const auto holdout_size =
      static_cast<std::size_t>(cfg.holdout_fraction * static_cast<double>(dataset.size()));
  std::vector<StateSample> train;
  std::vector<StateSample> holdout;
  for (std::size_t i = 0; i < order.size(); ++i)
    (i < holdout_size ? holdout : train).push_back(dataset[order[i]]);

  TrainedStateHead result;
  GatedStateHead& head = result.head;
  head = GatedStateHead::identity(nf, nc, std::move(classes));
  fill_uniform(head.z.data, cfg.train.init_scale, rng);
  if (cfg.gated) fill_uniform(head.gate_w.data, cfg.train.init_scale, rng);

  Updater updater(cfg.train, 4);
  GatedStateGradient grad;
  for (int epoch = 0; epoch < cfg.train.epochs; ++epoch) {
    cross_entropy_loss(head, train, &grad);
    updater.begin_step();
    updater.apply(0, head.z.data, grad.z.data);
    updater.apply(1, head.d, grad.d);
    if (cfg.gated) {
      updater.apply(2, head.gate_w.data, grad.gate_w.data);
      updater.apply(3, head.gate_b, grad.gate_b);
    }
  }
  result.training_accuracy = accuracy(head, train);
  result.holdout_accuracy = accuracy(head, holdout);
  return result;
}

// ---- Serialization ----

nlohmann::ordered_json to_json(const LinearHead& head) {
  nlohmann::ordered_json doc;
  doc["input_dim"] = head.input_dim;
  doc["classes"] = head.classes;
  doc["w"] = rows_of(head.w);
  doc["b"] = head.b;
  return doc;
}

LinearHead linear_head_from_json(std::string_view text, const std::string& source) {
  const json doc = detail::parse_json(text, source);
  const std::string where = source + ":$";
  detail::check_keys(doc, {"input_dim", "classes", "w", "b", "manifest"}, where);
  LinearHead head;
  head.input_dim = get_size(detail::require_key(doc, "input_dim", where), source + ":input_dim");
  head.classes =
      detail::get_string_array(detail::require_key(doc, "classes", where), source + ":classes");
  if (head.classes.empty()) throw ValidationError("head has no classes", source + ":classes");
  head.w = matrix_from_json(detail::require_key(doc, "w", where), head.classes.size(),
                            head.input_dim, source + ":w");
  head.b = vector_from_json(detail::require_key(doc, "b", where), head.classes.size(),
                            source + ":b");
  return head;
}

nlohmann::ordered_json to_json(const GatedStateHead& head) {
  nlohmann::ordered_json doc;
  doc["feature_dim"] = head.feature_dim;
  doc["category_dim"] = head.category_dim;
  doc["classes"] = head.classes;
  doc["z"] = rows_of(head.z);
  doc["d"] = head.d;
  doc["gate_w"] = rows_of(head.gate_w);
  doc["gate_b"] = head.gate_b;
  return doc;
}

GatedStateHead gated_head_from_json(std::string_view text, const std::string& source) {
  const json doc = detail::parse_json(text, source);
  const std::string where = source + ":$";
  detail::check_keys(doc, {"feature_dim", "category_dim", "classes", "z", "d", "gate_w", "gate_b"},
                     where);
  GatedStateHead head;
  head.feature_dim =
      get_size(detail::require_key(doc, "feature_dim", where), source + ":feature_dim");
  head.category_dim =
      get_size(detail::require_key(doc, "category_dim", where), source + ":category_dim");
  head.classes =
      detail::get_string_array(detail::require_key(doc, "classes", where), source + ":classes");
  const std::size_t k = head.classes.size();
  head.z = matrix_from_json(detail::require_key(doc, "z", where), k, head.feature_dim,
                            source + ":z");
  head.d = vector_from_json(detail::require_key(doc, "d", where), k, source + ":d");
  head.gate_w = matrix_from_json(detail::require_key(doc, "gate_w", where), head.feature_dim,
                                 head.category_dim, source + ":gate_w");
  head.gate_b = vector_from_json(detail::require_key(doc, "gate_b", where), head.feature_dim,
                                 source + ":gate_b");
  return head;
}

}  // namespace vidreason

// vidreason command-line front end.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vidreason/classifiers.hpp"
#include "vidreason/composer.hpp"
#include "vidreason/error.hpp"
#include "vidreason/evaluation.hpp"
#include "vidreason/graph.hpp"
#include "vidreason/io.hpp"
#include "vidreason/knowledge_base.hpp"
#include "vidreason/reasoner.hpp"

namespace {

using namespace vidreason;
using ojson = nlohmann::ordered_json;

constexpr const char* kVersion = "0.1.0";

struct RunManifest {
  std::string command;
  std::vector<std::pair<std::string, std::string>> inputs;
  ojson config = ojson::object();
  std::string output;

  ojson to_json() const {
    ojson doc;
    doc["command"] = command;
    doc["inputs"] = ojson::object();
    for (const auto& [name, path] : inputs) doc["inputs"][name] = path;
    doc["config"] = config;
    doc["output"] = output.empty() ? ojson(nullptr) : ojson(output);
    doc["version"] = kVersion;
    return doc;
  }
};

void emit(const std::string& text, const std::string& out) {
  if (out.empty())
    std::cout << text;
  else
    write_text_file(out, text);
}

std::string dump(const ojson& doc) { return doc.dump(2) + "\n"; }

// ---- validate-kb ----

struct ValidateArgs {
  std::string kb;
};

int run_validate(const ValidateArgs& a) {
  const auto kb = load_knowledge_base_file(a.kb);
  const auto c = kb.cardinalities();
  std::cout << "M=" << c.objects << " S=" << c.attributes << " N=" << c.relationships
            << " K=" << c.actions << "; attr transitions "
            << kb.enumerate_attribute_transitions().size() << "; rel transitions "
            << kb.enumerate_relationship_transitions().size() << "\n";
  return 0;
}

// ---- train ----

struct TrainArgs {
  std::string kb;
  std::string which = "aar";
  std::string out;
  double lr = 0.01;
  int epochs = 100000;
  std::uint64_t seed = 0;
};

int run_train(const TrainArgs& a) {
  const auto kb = load_knowledge_base_file(a.kb);
  TrainConfig cfg;
  cfg.learning_rate = a.lr;
  cfg.epochs = a.epochs;
  cfg.seed = a.seed;
  const auto model = parse_action_model(a.which);
  const auto trained = train_action_head(kb, model, cfg);

  RunManifest manifest{"train", {{"kb", a.kb}}, ojson::object(), a.out};
  manifest.config["which"] = to_string(model);
  manifest.config["learning_rate"] = a.lr;
  manifest.config["epochs"] = a.epochs;
  manifest.config["seed"] = a.seed;

  ojson head = to_json(trained.head);
  head["manifest"] = manifest.to_json();
  emit(dump(head), a.out);

  ojson report;
  report["manifest"] = manifest.to_json();
  report["training_accuracy"] = trained.training_accuracy;
  report["training_size"] = trained.training_size;
  report["epochs_run"] = trained.epochs_run;
  if (!a.out.empty()) std::cout << dump(report);
  return 0;
}

// ---- reason ----

struct ReasonArgs {
  std::string kb;
  std::string observations;
  int theta = 5;
  std::string backend = "rule";
  std::vector<std::string> heads;
  bool explain = false;
  std::string rules;
  std::string out;
  std::uint64_t seed = 0;
};

ojson transition_json(const TransitionEvent& t) {
  ojson doc;
  doc["kind"] = to_string(t.kind);
  doc["participants"] = t.participants;
  doc["pre"] = t.pre;
  doc["eff"] = t.eff;
  doc["time"] = t.time;
  return doc;
}

int run_reason(const ReasonArgs& a) {
  const auto kb = load_knowledge_base_file(a.kb);
  const auto records = parse_observations(read_text_file(a.observations), a.observations);
  ReasonerConfig cfg;
  cfg.backend = parse_backend(a.backend);
  cfg.refinement.window_width = a.theta;
  if (a.theta < 1) throw ValidationError("--theta must be >= 1");

  std::vector<ActivityRule> rules;
  if (!a.rules.empty()) {
    rules = parse_activity_rules(read_text_file(a.rules), a.rules);
    for (const auto& rule : rules) validate_activity_rule(rule, kb.vocabulary());
  }

  std::optional<ActionHeads> heads;
  if (cfg.backend == Backend::learned) {
    if (!a.heads.empty()) {
      if (a.heads.size() != 2) throw ValidationError("--heads expects two files: aar rar");
      heads = ActionHeads{linear_head_from_json(read_text_file(a.heads[0]), a.heads[0]),
                          linear_head_from_json(read_text_file(a.heads[1]), a.heads[1])};
    } else {
      TrainConfig train;
      train.seed = a.seed;
      heads = train_action_heads(kb, train);
    }
  }

  ReasoningResult result;
  if (!records.empty()) {
    const auto graph = build_video_graph(kb, records);
    result = reason(graph, kb, cfg, heads ? &*heads : nullptr);
  }

  RunManifest manifest{"reason", {{"kb", a.kb}, {"observations", a.observations}}, ojson::object(),
                       a.out};
  if (!a.rules.empty()) manifest.inputs.emplace_back("rules", a.rules);
  for (std::size_t i = 0; i < a.heads.size(); ++i)
    manifest.inputs.emplace_back(i == 0 ? "aar_head" : "rar_head", a.heads[i]);
  manifest.config["theta"] = a.theta;
  manifest.config["backend"] = to_string(cfg.backend);
  manifest.config["seed"] = a.seed;
  manifest.config["explain"] = a.explain;

  ojson doc;
  doc["manifest"] = manifest.to_json();
  doc["events"] = ojson::array();
  for (const auto& e : result.events) doc["events"].push_back(to_json(e, a.explain));
  doc["diagnostics"] = ojson::array();
  for (const auto& d : result.diagnostics)
    doc["diagnostics"].push_back({{"transition", transition_json(d.transition)},
                                  {"message", d.message}});
  doc["summary"] = {{"transitions", result.transition_count},
                    {"events", result.events.size()},
                    {"null", result.null_count},
                    {"diagnostics", result.diagnostics.size()}};
  if (!a.rules.empty()) {
    doc["activities"] = ojson::array();
    for (const auto& d : detect_activities(result.events, rules, kb.vocabulary()))
      doc["activities"].push_back(to_json(d));
  }
  emit(dump(doc), a.out);
  return 0;
}

// ---- eval ----

struct EvalArgs {
  std::string predictions;
  std::string clips;
  std::string kb;
  std::string out;
};

int run_eval(const EvalArgs& a) {
  const auto clips = parse_clips_csv(read_text_file(a.clips), a.clips);
  std::optional<KnowledgeBase> kb;
  if (!a.kb.empty()) kb = load_knowledge_base_file(a.kb);
  validate_clips(clips, kb ? &kb->vocabulary() : nullptr);
  const auto predictions = parse_predictions(read_text_file(a.predictions), clips, a.predictions);
  const auto metrics = score_clips(predictions, clips);

  RunManifest manifest{"eval", {{"predictions", a.predictions}, {"clips", a.clips}},
                       ojson::object(), a.out};
  if (!a.kb.empty()) manifest.inputs.emplace_back("kb", a.kb);
  ojson doc;
  doc["manifest"] = manifest.to_json();
  const ojson scored = to_json(metrics);
  for (const auto& [key, value] : scored.items()) doc[key] = value;
  emit(dump(doc), a.out);
  return 0;
}

// ---- synth ----

struct SynthArgs {
  std::string kb;
  std::string script;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string truth;
};

int run_synth(const SynthArgs& a) {
  const auto kb = load_knowledge_base_file(a.kb);
  auto script = parse_scenario_script(read_text_file(a.script), a.script);
  if (a.seed) script.noise.seed = *a.seed;
  const auto result = synthesize_observations(kb, script);

  RunManifest manifest{"synth", {{"kb", a.kb}, {"script", a.script}}, ojson::object(), a.out};
  manifest.config["seed"] = script.noise.seed;
  manifest.config["flip_probability"] = script.noise.flip_probability;
  manifest.config["dropout_probability"] = script.noise.dropout_probability;

  emit(serialize_observations(result.observations), a.out);
  if (!a.truth.empty()) {
    ojson truth;
    truth["manifest"] = manifest.to_json();
    truth["transitions"] = ojson::array();
    for (const auto& t : result.transitions) truth["transitions"].push_back(transition_json(t));
    truth["events"] = ojson::array();
    for (const auto& e : result.events) truth["events"].push_back(to_json(e, true));
    write_text_file(a.truth, dump(truth));
  }
  if (!a.out.empty()) std::cout << dump(ojson{{"manifest", manifest.to_json()}});
  return 0;
}

int fail(const char* kind, const std::string& message, int code) {
  std::string line = message;
  for (char& c : line)
    if (c == '\n' || c == '\r') c = ' ';
  std::cerr << "error[" << kind << "]: " << line << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Explainable video action reasoning over semantic state observations"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  ValidateArgs validate;
  auto* cmd_validate = app.add_subcommand("validate-kb", "Check a knowledge base file");
  cmd_validate->add_option("kb,--kb", validate.kb, "Knowledge base JSON")->required();

  TrainArgs train;
  auto* cmd_train = app.add_subcommand("train", "Train an action head from a knowledge base");
  cmd_train->add_option("--kb", train.kb, "Knowledge base JSON")->required();
  cmd_train->add_option("--which", train.which, "aar or rar")
      ->check(CLI::IsMember({"aar", "rar"}));
  cmd_train->add_option("--out", train.out, "Head output file (stdout when omitted)");
  cmd_train->add_option("--lr", train.lr, "Learning rate")->capture_default_str();
  cmd_train->add_option("--epochs", train.epochs, "Epoch cap")->capture_default_str();
  cmd_train->add_option("--seed", train.seed, "Initialisation seed")->capture_default_str();

  ReasonArgs reason_args;
  auto* cmd_reason = app.add_subcommand("reason", "Explain the actions in an observation stream");
  cmd_reason->add_option("--kb", reason_args.kb, "Knowledge base JSON")->required();
  cmd_reason->add_option("--observations", reason_args.observations, "Observation JSON Lines")
      ->required();
  cmd_reason->add_option("--theta", reason_args.theta, "Refinement window")->capture_default_str();
  cmd_reason->add_option("--backend", reason_args.backend, "rule or learned")
      ->check(CLI::IsMember({"rule", "learned"}))
      ->capture_default_str();
  cmd_reason->add_option("--heads", reason_args.heads, "Trained heads: aar.json rar.json")
      ->expected(2);
  cmd_reason->add_flag("--explain", reason_args.explain, "Add a sentence to every event");
  cmd_reason->add_option("--rules", reason_args.rules, "Activity rules JSON");
  cmd_reason->add_option("--out", reason_args.out, "Output file (stdout when omitted)");
  cmd_reason->add_option("--seed", reason_args.seed, "Seed for on-the-fly head training")
      ->capture_default_str();

  EvalArgs eval;
  auto* cmd_eval = app.add_subcommand("eval", "Score predictions against ground-truth clips");
  cmd_eval->add_option("--predictions", eval.predictions, "Predictions or reason output JSON")
      ->required();
  cmd_eval->add_option("--clips", eval.clips, "Ground-truth clips CSV")->required();
  cmd_eval->add_option("--kb", eval.kb, "Knowledge base for label validation");
  cmd_eval->add_option("--out", eval.out, "Output file (stdout when omitted)");

  SynthArgs synth;
  auto* cmd_synth = app.add_subcommand("synth", "Render a scenario script as an observation stream");
  cmd_synth->add_option("--kb", synth.kb, "Knowledge base JSON")->required();
  cmd_synth->add_option("--script", synth.script, "Scenario script JSON")->required();
  cmd_synth->add_option("--seed", synth.seed, "Overrides the script's noise seed");
  cmd_synth->add_option("--out", synth.out, "Observation output (stdout when omitted)");
  cmd_synth->add_option("--truth", synth.truth, "Write noise-free transitions and events here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  }

  try {
    if (*cmd_validate) return run_validate(validate);
    if (*cmd_train) return run_train(train);
    if (*cmd_reason) return run_reason(reason_args);
    if (*cmd_eval) return run_eval(eval);
    if (*cmd_synth) return run_synth(synth);
  } catch (const ParseError& e) {
    return fail("parse", e.what(), 2);
  } catch (const ValidationError& e) {
    return fail("validation", e.what(), 2);
  } catch (const DomainError& e) {
    return fail("domain", e.what(), 2);
  } catch (const RuntimeError& e) {
    return fail("runtime", e.what(), 3);
  } catch (const std::exception& e) {
    return fail("runtime", e.what(), 3);
  }
  return 0;
}

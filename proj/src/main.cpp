#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "CLI11.hpp"

#include "golomb/config.hpp"
#include "golomb/errors.hpp"
#include "golomb/json_io.hpp"
#include "golomb/metrics.hpp"
#include "golomb/model.hpp"
#include "golomb/rng.hpp"
#include "golomb/synth.hpp"
#include "golomb/tracker.hpp"
#include "golomb/training.hpp"

namespace {

using namespace golomb;

// Dotted flags ("--train.learning_rate 3e-4" or "--assembly.use_nld=false")
// are dynamic config overrides; they are peeled off before CLI11 sees the
// argument list.
std::vector<std::string> extract_overrides(
    std::vector<std::string>& args,
    std::vector<std::pair<std::string, std::string>>& overrides) {
  std::vector<std::string> rest;
  for (size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a.rfind("--", 0) == 0) {
      auto eq = a.find('=');
      std::string key = a.substr(2, eq == std::string::npos ? std::string::npos
                                                            : eq - 2);
      if (key.find('.') != std::string::npos) {
        std::string value;
        if (eq != std::string::npos) {
          value = a.substr(eq + 1);
        } else if (i + 1 < args.size()) {
          value = args[++i];
        } else {
          throw ConfigError("flag --" + key + " needs a value");
        }
        overrides.emplace_back(key, value);
        continue;
      }
    }
    rest.push_back(a);
  }
  return rest;
}

RunConfig make_config(const std::string& config_path,
                      const std::vector<std::pair<std::string, std::string>>&
                          overrides) {
  RunConfig cfg;
  if (!config_path.empty()) cfg = load_run_config(config_path);
  for (const auto& [key, value] : overrides) apply_override(cfg, key, value);
  cfg.validate();
  return cfg;
}

void echo_config(const RunConfig& cfg, const std::string& dir) {
  std::filesystem::create_directories(dir);
  write_text_file(dir + "/config.json", config_to_json(cfg).dump(2) + "\n");
}

void check_synth_output(const std::vector<Dialogue>& dialogues,
                        const std::vector<ServiceSchema>& schemas) {
  for (const Dialogue& d : dialogues) {
    auto issues = validate_dialogue(d, schemas);
    if (!issues.empty())
      throw InternalError("generated dialogue " + d.dialogue_id +
                          " failed validation: " + issues.front());
  }
}

int cmd_synth(const RunConfig& cfg) {
  SynthSplit split = synth_schemas(cfg.synth);
  std::vector<ServiceSchema> train_schemas, eval_schemas;
  for (const ServiceSchema& s : split.schemas) {
    if (split.train_services.count(s.service_name) > 0)
      train_schemas.push_back(s);
    else
      eval_schemas.push_back(s);
  }
  std::vector<Dialogue> train_dialogues =
      synth_dialogues(train_schemas, cfg.synth);
  check_synth_output(train_dialogues, train_schemas);

  const std::string& out = cfg.output_dir;
  std::filesystem::create_directories(out + "/train");
  save_schemas(train_schemas, out + "/train/schema.json");
  save_dialogues(train_dialogues, out + "/train/dialogues.json");

  size_t eval_count = 0;
  if (!eval_schemas.empty()) {
    std::vector<Dialogue> eval_dialogues =
        synth_dialogues(eval_schemas, cfg.synth);
    check_synth_output(eval_dialogues, eval_schemas);
    eval_count = eval_dialogues.size();
    std::filesystem::create_directories(out + "/eval");
    save_schemas(eval_schemas, out + "/eval/schema.json");
    save_dialogues(eval_dialogues, out + "/eval/dialogues.json");
  }
  write_text_file(out + "/split.json", split_manifest(split).dump(2) + "\n");
  echo_config(cfg, out);

  for (const std::string& w : split.warnings)
    std::cerr << "warning: " << w << "\n";
  std::cout << "wrote " << train_schemas.size() << " train services with "
            << train_dialogues.size() << " dialogues and "
            << eval_schemas.size() << " unseen services with " << eval_count
            << " dialogues to " << out << "\n";
  return 0;
}

int cmd_train(RunConfig cfg, const std::string& dev_path) {
  std::vector<ServiceSchema> schemas = load_schemas(cfg.schemas_path);
  std::vector<Dialogue> dialogues = load_dialogues(cfg.dialogues_path);
  std::vector<Dialogue> dev;
  if (!dev_path.empty()) dev = load_dialogues(dev_path);

  Vocabulary vocab = build_vocab_for(schemas, dialogues, cfg.max_vocab_size);
  cfg.encoder.vocab_size = vocab.size();
  Model model(cfg.encoder, cfg.assembly, cfg.decoding, vocab);
  model.init_params(cfg.train.seed);

  std::vector<TrainingExample> examples;
  for (const Dialogue& d : dialogues) {
    auto more = make_examples(d, schemas, cfg.assembly, vocab, cfg.train.seed);
    examples.insert(examples.end(), more.begin(), more.end());
  }
  std::cout << "training on " << examples.size() << " examples from "
            << dialogues.size() << " dialogues ("
            << vocab.size() << " vocabulary entries)\n";

  echo_config(cfg, cfg.output_dir);
  TrainResult result =
      train(model, examples, dev, schemas, cfg.train, cfg.output_dir);
  std::cout << std::fixed << std::setprecision(4) << "done: "
            << result.optimizer_steps << " optimizer steps, final loss "
            << result.final_loss.total;
  if (result.best_epoch >= 0)
    std::cout << ", best dev joint GA " << result.best_dev_joint_ga
              << " at epoch " << result.best_epoch;
  std::cout << "\n";
  return 0;
}

std::set<std::string> load_seen_services(const std::string& path) {
  if (path.empty()) return {};
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("split manifest " + path + " is not valid JSON: " +
                    e.what());
  }
  std::set<std::string> seen;
  if (j.contains("train_services"))
    for (const auto& s : j.at("train_services"))
      seen.insert(s.get<std::string>());
  return seen;
}

int cmd_eval(const RunConfig& cfg, const std::string& predictions_path,
             const std::string& seen_path, bool strict_joint) {
  std::vector<ServiceSchema> schemas = load_schemas(cfg.schemas_path);
  std::vector<Dialogue> gold = load_dialogues(cfg.dialogues_path);

  std::vector<Dialogue> predicted;
  if (!predictions_path.empty()) {
    predicted = load_dialogues(predictions_path);
  } else {
    if (cfg.model_dir.empty())
      throw ConfigError("eval needs --model or --predictions");
    Model model = Model::load(cfg.model_dir);
    for (const Dialogue& d : gold)
      predicted.push_back(track_dialogue(d, schemas, model));
  }

  std::vector<TurnPrediction> preds = collect_predictions(gold, predicted);
  MetricReport report =
      build_report(preds, schemas, load_seen_services(seen_path));

  std::filesystem::create_directories(cfg.output_dir);
  write_text_file(cfg.output_dir + "/report.json",
                  report_to_json(report).dump(2) + "\n");
  std::string text = report_to_text(report, strict_joint);
  write_text_file(cfg.output_dir + "/report.txt", text);
  if (predictions_path.empty())
    save_dialogues(predicted, cfg.output_dir + "/predictions.json");
  std::cout << text;
  return 0;
}

int cmd_track(const RunConfig& cfg) {
  std::vector<ServiceSchema> schemas = load_schemas(cfg.schemas_path);
  std::vector<Dialogue> gold = load_dialogues(cfg.dialogues_path);
  if (cfg.model_dir.empty()) throw ConfigError("track needs --model");
  Model model = Model::load(cfg.model_dir);
  std::vector<Dialogue> predicted;
  for (const Dialogue& d : gold)
    predicted.push_back(track_dialogue(d, schemas, model));
  std::filesystem::create_directories(cfg.output_dir);
  save_dialogues(predicted, cfg.output_dir + "/predictions.json");
  std::cout << "wrote predictions for " << predicted.size()
            << " dialogues to " << cfg.output_dir << "/predictions.json\n";
  return 0;
}

void print_dist(const std::string& label, const Vector& dist,
                const std::vector<std::string>& names) {
  std::cout << "    " << label << ":";
  for (int i = 0; i < dist.size(); ++i) {
    std::cout << " " << (i < static_cast<int>(names.size()) ? names[i]
                                                            : std::to_string(i))
              << "=" << std::setprecision(3) << dist(i);
  }
  std::cout << "\n";
}

int cmd_repl(const RunConfig& cfg, const std::string& service_name) {
  std::vector<ServiceSchema> schemas = load_schemas(cfg.schemas_path);
  if (cfg.model_dir.empty()) throw ConfigError("repl needs --model");
  Model model = Model::load(cfg.model_dir);
  const ServiceSchema* service = find_service(schemas, service_name);
  if (service == nullptr)
    throw ConfigError("service '" + service_name + "' is not in the schema "
                      "file");

  std::cout << "tracking service " << service->service_name
            << "; alternate system/user utterances, empty system line to "
               "skip, ctrl-d or 'quit' to leave\n"
            << std::fixed;
  DialogueState state;
  std::string system_line, user_line;
  while (true) {
    std::cout << "system> " << std::flush;
    if (!std::getline(std::cin, system_line)) break;
    if (system_line == "quit" || system_line == "exit") break;
    std::cout << "user> " << std::flush;
    if (!std::getline(std::cin, user_line)) break;
    if (user_line == "quit" || user_line == "exit") break;
    if (user_line.empty()) continue;

    std::vector<HistoryUtterance> history;
    if (!system_line.empty())
      history.push_back({Speaker::kSystem, system_line});
    history.push_back({Speaker::kUser, user_line});

    std::vector<SlotDecision> decisions;
    std::map<std::string, Vector> req_dists;
    Vector intent_sum;
    int intent_n = 0;
    for (const SlotSchema& slot : service->slots) {
      std::string question =
          build_question(slot, *service, model.assembly_cfg.use_nld);
      EncoderInput input =
          assemble_input(question, history, service->intents, slot,
                         model.assembly_cfg, model.vocab);
      HeadOutputs out = model.predict(input, slot);
      SlotDecision decision = decode_slot(out, slot, input,
                                          model.decoding_cfg,
                                          model.assembly_cfg.categorical_head);
      std::cout << "  " << slot.name << "\n";
      print_dist("gate", out.gate_dist, {"none", "dontcare", "ptr"});
      if (out.cat_dist.size() > 0) {
        std::vector<std::string> names;
        if (model.assembly_cfg.categorical_head == CategoricalHead::kPv) {
          names.push_back("NONE");
          names.insert(names.end(), slot.possible_values.begin(),
                       slot.possible_values.end());
        } else {
          names = slot.possible_values;
          names.resize(static_cast<size_t>(out.cat_dist.size()) - 1, "-");
          names.push_back("NONE");
        }
        print_dist("value", out.cat_dist, names);
      }
      print_dist("requested", out.req_dist, {"yes", "no"});
      if (decision.action == SlotDecision::Action::kSetValue)
        std::cout << "    -> " << decision.value << "\n";
      else if (decision.action == SlotDecision::Action::kSetDontcare)
        std::cout << "    -> dontcare\n";
      decisions.push_back(std::move(decision));
      req_dists[slot.name] = out.req_dist;
      if (out.intent_dist.size() > 0) {
        if (intent_n == 0)
          intent_sum = out.intent_dist;
        else
          intent_sum += out.intent_dist;
        ++intent_n;
      }
    }
    std::vector<std::string> intent_names{kNoneIntent};
    for (const IntentSchema& intent : service->intents)
      intent_names.push_back(intent.name);
    Vector intent_avg;
    if (intent_n > 0) {
      intent_avg = intent_sum / intent_n;
      print_dist("  intent", intent_avg, intent_names);
    }
    TurnDecision td =
        decode_turn(decisions, intent_avg, req_dists, intent_names, state);
    state = td.state;

    std::cout << "  state: intent=" << state.active_intent;
    if (!state.requested_slots.empty()) {
      std::cout << " requested={";
      bool first = true;
      for (const std::string& s : state.requested_slots) {
        std::cout << (first ? "" : ", ") << s;
        first = false;
      }
      std::cout << "}";
    }
    for (const auto& [slot, values] : state.slot_values)
      std::cout << " " << slot << "=" << values.front();
    std::cout << "\n";
  }
  std::cout << "\n";
  return 0;
}

int run(int argc, char** argv) {
  std::vector<std::string> raw(argv + 1, argv + argc);
  std::vector<std::pair<std::string, std::string>> overrides;
  std::vector<std::string> args = extract_overrides(raw, overrides);

  CLI::App app{"schema-guided dialogue state tracker"};
  app.require_subcommand(1);

  std::string config_path, out_dir, schemas_path, dialogues_path, model_dir;
  std::string dev_path, predictions_path, seen_path, service_name;
  bool strict_joint = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "run config JSON");
    cmd->add_option("--out", out_dir, "output directory");
  };

  CLI::App* synth = app.add_subcommand("synth", "generate synthetic data");
  add_common(synth);

  CLI::App* train = app.add_subcommand("train", "train a tracker");
  add_common(train);
  train->add_option("--schemas", schemas_path, "schema JSON");
  train->add_option("--dialogues", dialogues_path, "training dialogues JSON");
  train->add_option("--dev", dev_path, "dev dialogues JSON");

  CLI::App* eval = app.add_subcommand("eval", "evaluate predictions");
  add_common(eval);
  eval->add_option("--schemas", schemas_path, "schema JSON");
  eval->add_option("--dialogues", dialogues_path, "gold dialogues JSON");
  eval->add_option("--model", model_dir, "trained model directory");
  eval->add_option("--predictions", predictions_path,
                   "precomputed prediction dump (skips the model)");
  eval->add_option("--seen", seen_path, "split manifest for unseen flags");
  eval->add_flag("--strict-joint", strict_joint,
                 "joint GA without fuzzy partial credit");

  CLI::App* track = app.add_subcommand("track", "emit a prediction dump");
  add_common(track);
  track->add_option("--schemas", schemas_path, "schema JSON");
  track->add_option("--dialogues", dialogues_path, "input dialogues JSON");
  track->add_option("--model", model_dir, "trained model directory");

  CLI::App* repl = app.add_subcommand("repl", "interactive inspection");
  add_common(repl);
  repl->add_option("--schemas", schemas_path, "schema JSON");
  repl->add_option("--model", model_dir, "trained model directory");
  repl->add_option("--service", service_name, "service to track")->required();

  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  RunConfig cfg = make_config(config_path, overrides);
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  if (!schemas_path.empty()) cfg.schemas_path = schemas_path;
  if (!dialogues_path.empty()) cfg.dialogues_path = dialogues_path;
  if (!model_dir.empty()) cfg.model_dir = model_dir;

  if (synth->parsed()) return cmd_synth(cfg);
  if (train->parsed()) return cmd_train(cfg, dev_path);
  if (eval->parsed())
    return cmd_eval(cfg, predictions_path, seen_path, strict_joint);
  if (track->parsed()) return cmd_track(cfg);
  if (repl->parsed()) return cmd_repl(cfg, service_name);
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  if (const char* threads = std::getenv("GOLOMB_THREADS"))
    Eigen::setNbThreads(std::max(1, std::atoi(threads)));
  try {
    return run(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
}

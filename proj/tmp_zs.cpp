#include <cstdio>
#include <cstdlib>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "golomb/assembly.hpp"
#include "golomb/metrics.hpp"
#include "golomb/model.hpp"
#include "golomb/synth.hpp"
#include "golomb/tracker.hpp"
#include "golomb/training.hpp"

using namespace golomb;

int main(int argc, char** argv) {
  SynthConfig scfg;
  scfg.num_services = 3;
  scfg.unseen_services = 1;
  scfg.dialogues_per_service = 50;
  scfg.turns_per_dialogue = 3;
  scfg.seed = 31;
  if (const char* s = std::getenv("DPS")) scfg.dialogues_per_service = std::atoi(s);
  if (const char* s = std::getenv("TURNS")) scfg.turns_per_dialogue = std::atoi(s);
  SynthSplit split = synth_schemas(scfg);
  std::vector<Dialogue> dialogues = synth_dialogues(split.schemas, scfg);

  std::vector<Dialogue> train_dials, eval_dials;
  for (Dialogue& d : dialogues) {
    bool unseen = false;
    for (const std::string& s : d.services)
      if (split.eval_services.count(s) > 0) unseen = true;
    (unseen ? eval_dials : train_dials).push_back(std::move(d));
  }
  std::printf("train_dials=%zu eval_dials=%zu\n", train_dials.size(),
              eval_dials.size());

  Vocabulary vocab = build_vocab_for(split.schemas, train_dials, 4000);

  AssemblyConfig acfg;
  acfg.max_hist_len = 64;
  acfg.max_intent_len = 32;
  acfg.max_seq_len = 160;
  acfg.categorical_head = CategoricalHead::kCls;
  acfg.cat_neg_sampling_prob = 1.0;
  acfg.noncat_neg_sampling_prob = 1.0;

  EncoderConfig ecfg;
  ecfg.num_layers = 2;
  ecfg.hidden_size = 64;
  ecfg.num_heads = 4;
  ecfg.ffn_size = 256;
  ecfg.max_seq_len = 160;
  ecfg.dropout = 0.0;
  ecfg.vocab_size = static_cast<int>(vocab.size());

  TrainConfig tcfg;
  tcfg.learning_rate = 1e-3;
  tcfg.epochs = 5;
  tcfg.batch_size = 4;
  tcfg.grad_accum_steps = 1;
  tcfg.adam_beta2 = 0.97;
  tcfg.seed = 42;
  if (argc > 1) tcfg.learning_rate = std::atof(argv[1]);
  if (argc > 2) tcfg.epochs = std::atoi(argv[2]);
  if (const char* s = std::getenv("B2")) tcfg.adam_beta2 = std::atof(s);
  if (const char* s = std::getenv("DROP")) ecfg.dropout = std::atof(s);

  std::vector<TrainingExample> examples;
  for (const Dialogue& d : train_dials) {
    auto one = make_examples(d, split.schemas, acfg, vocab, 23);
    examples.insert(examples.end(), one.begin(), one.end());
  }
  std::printf("examples=%zu vocab=%zu\n", examples.size(), vocab.size());

  DecodingConfig dcfg;
  Model model(ecfg, acfg, dcfg, vocab);
  int init_seed = 4321;
  if (const char* s = std::getenv("INIT")) init_seed = std::atoi(s);
  model.init_params(init_seed);
  TrainResult r = train(model, examples, {}, split.schemas, tcfg, "");
  std::printf("steps=%d\n", r.optimizer_steps);

  std::map<std::string, std::map<std::string, int>> counts;
  for (const Dialogue& d : train_dials)
    for (const Turn& t : d.turns) {
      if (t.speaker != Speaker::kUser) continue;
      for (const Frame& f : t.frames)
        if (f.state)
          for (const auto& [slot, values] : f.state->slot_values)
            if (!values.empty()) ++counts[slot][values.front()];
    }
  std::map<std::string, std::string> majority;
  for (const auto& [slot, by_value] : counts) {
    int best = -1;
    for (const auto& [value, n] : by_value)
      if (n > best) { best = n; majority[slot] = value; }
  }

  std::vector<TurnPrediction> trained_preds, none_preds, majority_preds;
  for (const Dialogue& d : eval_dials) {
    Dialogue predicted = track_dialogue(d, split.schemas, model);
    auto one = collect_predictions(d, predicted);
    trained_preds.insert(trained_preds.end(), one.begin(), one.end());
    for (TurnPrediction p : one) {
      p.predicted = DialogueState{};
      none_preds.push_back(p);
      const ServiceSchema* service = find_service(split.schemas, p.service);
      DialogueState maj;
      for (const SlotSchema& slot : service->slots) {
        auto it = majority.find(slot.name);
        if (it != majority.end()) maj.slot_values[slot.name] = {it->second};
      }
      p.predicted = std::move(maj);
      majority_preds.push_back(std::move(p));
    }
  }

  double trained = average_goal_accuracy(trained_preds, split.schemas);
  double none = average_goal_accuracy(none_preds, split.schemas);
  double maj = average_goal_accuracy(majority_preds, split.schemas);
  std::printf("trained=%.4f none=%.4f majority=%.4f margin_none=%.4f "
              "margin_maj=%.4f\n",
              trained, none, maj, trained - none, trained - maj);

  // Also report train-side joint GA for reference.
  std::vector<TurnPrediction> tp;
  for (const Dialogue& d : train_dials) {
    Dialogue predicted = track_dialogue(d, split.schemas, model);
    auto one = collect_predictions(d, predicted);
    tp.insert(tp.end(), one.begin(), one.end());
  }
  MetricReport rep = build_report(tp, split.schemas, {});
  std::printf("train joint=%.4f avg=%.4f\n", rep.joint_goal_accuracy,
              rep.average_goal_accuracy);
  return 0;
}

#include <cstdio>
#include <cstdlib>
#include <vector>

#include "golomb/assembly.hpp"
#include "golomb/metrics.hpp"
#include "golomb/model.hpp"
#include "golomb/synth.hpp"
#include "golomb/tokenizer.hpp"
#include "golomb/tracker.hpp"
#include "golomb/training.hpp"

using namespace golomb;

int main(int argc, char** argv) {
  SynthConfig scfg;
  scfg.num_services = 1;
  scfg.unseen_services = 0;
  scfg.dialogues_per_service = 200;
  scfg.turns_per_dialogue = 3;
  if (const char* s = std::getenv("TURNS")) scfg.turns_per_dialogue = std::atoi(s);
  scfg.seed = 21;
  SynthSplit split = synth_schemas(scfg);
  std::vector<Dialogue> dialogues = synth_dialogues(split.schemas, scfg);
  Vocabulary vocab = build_vocab_for(split.schemas, dialogues, 4000);

  AssemblyConfig acfg;
  acfg.max_hist_len = 64;
  acfg.max_intent_len = 32;
  acfg.max_seq_len = 160;
  if (const char* s = std::getenv("NEG")) {
    acfg.cat_neg_sampling_prob = std::atof(s);
    acfg.noncat_neg_sampling_prob = std::atof(s);
  }

  EncoderConfig ecfg;
  ecfg.num_layers = 2;
  ecfg.hidden_size = 64;
  ecfg.num_heads = 4;
  ecfg.ffn_size = 256;
  ecfg.max_seq_len = 160;
  ecfg.dropout = 0.1;
  ecfg.vocab_size = static_cast<int>(vocab.size());

  TrainConfig tcfg;
  tcfg.learning_rate = 1e-3;
  tcfg.epochs = 2;
  tcfg.batch_size = 8;
  tcfg.grad_accum_steps = 1;
  tcfg.seed = 42;

  // overrides: argv[1]=lr argv[2]=dropout argv[3]=epochs
  if (argc > 1) tcfg.learning_rate = std::atof(argv[1]);
  if (argc > 2) ecfg.dropout = std::atof(argv[2]);
  if (argc > 3) tcfg.epochs = std::atoi(argv[3]);
  if (argc > 4) tcfg.batch_size = std::atoi(argv[4]);
  if (const char* s = std::getenv("B2")) tcfg.adam_beta2 = std::atof(s);
  if (argc > 5) ecfg.num_heads = std::atoi(argv[5]);
  if (const char* s = std::getenv("NLD")) acfg.use_nld = std::atoi(s) != 0;
  if (const char* s = std::getenv("B1")) tcfg.adam_beta1 = std::atof(s);
  if (const char* s = std::getenv("SEED")) tcfg.seed = std::atoi(s);
  if (const char* s = std::getenv("FFN")) ecfg.ffn_size = std::atoi(s);
  if (const char* s = std::getenv("CAT"))
    acfg.categorical_head = s[0] == 'c' ? CategoricalHead::kCls
                                        : CategoricalHead::kPv;

  std::vector<TrainingExample> examples;
  int pos = 0, neg = 0, cat = 0, span_sup = 0;
  for (const Dialogue& d : dialogues) {
    auto one = make_examples(d, split.schemas, acfg, vocab, 17);
    for (const TrainingExample& ex : one) {
      if (ex.labels.gate != SlotGate::kNone) ++pos; else ++neg;
      if (ex.meta.is_categorical) ++cat;
      if (ex.labels.span_supervised) ++span_sup;
    }
    examples.insert(examples.end(), one.begin(), one.end());
  }
  std::printf("examples=%zu pos=%d neg=%d cat=%d span_supervised=%d vocab=%zu\n",
              examples.size(), pos, neg, cat, span_sup, vocab.size());

  DecodingConfig dcfg;
  Model model(ecfg, acfg, dcfg, vocab);
  int init_seed = 1234;
  if (const char* s = std::getenv("INIT")) init_seed = std::atoi(s);
  model.init_params(init_seed);
  TrainResult r = train(model, examples, dialogues, split.schemas, tcfg,
                        "/tmp/run6");
  std::printf("steps=%d final loss total=%.4f gate=%.4f cat=%.4f start=%.4f "
              "stop=%.4f req=%.4f intent=%.4f\n",
              r.optimizer_steps, r.final_loss.total, r.final_loss.gate,
              r.final_loss.categorical, r.final_loss.span_start,
              r.final_loss.span_stop, r.final_loss.requested,
              r.final_loss.intent);
  for (size_t e = 0; e < r.epoch_dev_joint_ga.size(); ++e)
    std::printf("epoch %zu dev joint GA %.4f\n", e, r.epoch_dev_joint_ga[e]);

  // Full metric report on train set with the final model.
  std::vector<TurnPrediction> preds;
  for (const Dialogue& d : dialogues) {
    Dialogue predicted = track_dialogue(d, split.schemas, model);
    auto one = collect_predictions(d, predicted);
    preds.insert(preds.end(), one.begin(), one.end());
  }
  MetricReport rep = build_report(preds, split.schemas, {});
  std::printf("final train: joint=%.4f avg=%.4f intent=%.4f reqF1=%.4f\n",
              rep.joint_goal_accuracy, rep.average_goal_accuracy,
              rep.active_intent_accuracy, rep.requested_slots_f1);

  // Per-slot accuracy over frames to see which slots fail.
  std::map<std::string, std::pair<int, int>> per_slot;  // correct, total
  for (const TurnPrediction& p : preds) {
    const ServiceSchema* svc = find_service(split.schemas, p.service);
    for (const SlotSchema& slot : svc->slots) {
      auto g = p.gold.slot_values.find(slot.name);
      auto q = p.predicted.slot_values.find(slot.name);
      bool g_has = g != p.gold.slot_values.end();
      bool q_has = q != p.predicted.slot_values.end();
      bool correct;
      if (!g_has && !q_has) correct = true;
      else if (g_has != q_has) correct = false;
      else correct = g->second.front() == q->second.front();
      auto& pr = per_slot[slot.name + (slot.is_categorical ? " [cat]" : "")];
      pr.second += 1;
      if (correct) pr.first += 1;
    }
  }
  for (const auto& [name, pr] : per_slot)
    std::printf("  slot %-28s %d/%d = %.3f\n", name.c_str(), pr.first,
                pr.second, static_cast<double>(pr.first) / pr.second);

  // Direct intent probe: head output vs label on individual examples.
  int int_ok = 0, int_n = 0;
  for (size_t i = 0; i < examples.size(); i += 37) {
    const TrainingExample& ex = examples[i];
    const ServiceSchema* svc = find_service(split.schemas, ex.meta.service);
    const SlotSchema* slot = svc->find_slot(ex.meta.slot);
    HeadOutputs out = model.predict(ex.input, *slot);
    if (out.intent_dist.size() == 0) continue;
    int argmax = 0;
    out.intent_dist.maxCoeff(&argmax);
    ++int_n;
    if (argmax == ex.labels.intent_index) ++int_ok;
    if (int_n <= 12) {
      std::printf("  ex %-30s label=%d dist=", (ex.meta.dialogue_id + ":" +
                  std::to_string(ex.meta.turn_index)).c_str(),
                  ex.labels.intent_index);
      for (int j = 0; j < out.intent_dist.size(); ++j)
        std::printf("%.3f ", out.intent_dist(j));
      std::printf("\n");
    }
  }
  std::printf("intent head alone: %d/%d\n", int_ok, int_n);
  (void)argv;


  // Per-head fit on the training examples (teacher-forced view).
  int g_ok = 0, g_n = 0, c_ok = 0, c_n = 0, s_ok = 0, s_n = 0, r_ok = 0,
      r_n = 0, i_ok = 0, i_n = 0;
  for (const TrainingExample& ex : examples) {
    const ServiceSchema* svc = find_service(split.schemas, ex.meta.service);
    const SlotSchema* slot = svc->find_slot(ex.meta.slot);
    HeadOutputs out = model.predict(ex.input, *slot);
    int am;
    out.gate_dist.maxCoeff(&am);
    ++g_n;
    if (am == static_cast<int>(ex.labels.gate)) ++g_ok;
    if (ex.meta.is_categorical && ex.labels.categorical_index) {
      out.cat_dist.maxCoeff(&am);
      ++c_n;
      if (am == *ex.labels.categorical_index) ++c_ok;
    }
    if (ex.labels.span_supervised && ex.labels.span) {
      int a_start, a_stop;
      out.start_dist.maxCoeff(&a_start);
      out.stop_dist.maxCoeff(&a_stop);
      ++s_n;
      if (a_start == ex.labels.span->first && a_stop == ex.labels.span->second)
        ++s_ok;
    }
    out.req_dist.maxCoeff(&am);
    ++r_n;
    if ((am == kReqRequested) == ex.labels.requested) ++r_ok;
    if (out.intent_dist.size() > 0) {
      out.intent_dist.maxCoeff(&am);
      ++i_n;
      if (am == ex.labels.intent_index) ++i_ok;
    }
  }
  std::printf("fit: gate %d/%d=%.3f  cat %d/%d=%.3f  span %d/%d=%.3f  req %d/%d=%.3f  intent %d/%d=%.3f\n",
              g_ok, g_n, 1.0 * g_ok / g_n, c_ok, c_n, c_n ? 1.0 * c_ok / c_n : 0.0,
              s_ok, s_n, s_n ? 1.0 * s_ok / s_n : 0.0, r_ok, r_n, 1.0 * r_ok / r_n,
              i_ok, i_n, i_n ? 1.0 * i_ok / i_n : 0.0);
  return 0;
}

#include "golomb/training.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "json.hpp"

#include "golomb/errors.hpp"
#include "golomb/metrics.hpp"
#include "golomb/rng.hpp"
#include "golomb/tracker.hpp"

namespace golomb {
namespace {

double nll(const Vector& dist, int index, const char* head) {
  if (index < 0 || index >= dist.size())
    throw InternalError(std::string("gold index out of range for the ") +
                        head + " head");
  return -std::log(dist(index));
}

// Gold index translated into the layout of the categorical distribution:
// PV keeps the label convention (NONE first), the CLS variant stores NONE at
// the final position.
int cat_target(const TrainingExample& ex, Eigen::Index dist_size) {
  int cat = ex.labels.categorical_index.value_or(0);
  if (!ex.input.pv_positions.empty()) return cat;
  int m = static_cast<int>(dist_size) - 1;
  return cat == 0 ? m : cat - 1;
}

bool wants_categorical_loss(const TrainingExample& ex) {
  return ex.meta.is_categorical && ex.labels.gate == SlotGate::kPtr;
}

bool wants_span_loss(const TrainingExample& ex) {
  return !ex.meta.is_categorical && ex.labels.gate == SlotGate::kPtr &&
         ex.labels.span_supervised && ex.labels.span.has_value();
}

Vector ce_grad(const Vector& dist, int index) {
  Vector d = dist;
  d(index) -= 1.0;
  return d;
}

}  // namespace

void TrainConfig::validate() const {
  // Zero is allowed: it turns training into the identity, which is useful
  // for pipeline checks.
  if (learning_rate < 0.0) throw ConfigError("learning_rate must be >= 0");
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (grad_accum_steps < 1) throw ConfigError("grad_accum_steps must be >= 1");
}

LossBreakdown compute_loss(const TrainingExample& ex,
                           const HeadOutputs& outputs) {
  LossBreakdown loss;
  loss.gate = nll(outputs.gate_dist, static_cast<int>(ex.labels.gate), "gate");
  if (wants_categorical_loss(ex)) {
    if (outputs.cat_dist.size() == 0)
      throw InternalError("categorical example without a categorical "
                          "distribution");
    loss.categorical =
        nll(outputs.cat_dist, cat_target(ex, outputs.cat_dist.size()),
            "categorical");
  }
  if (wants_span_loss(ex)) {
    loss.span_start = nll(outputs.start_dist, ex.labels.span->first, "start");
    loss.span_stop = nll(outputs.stop_dist, ex.labels.span->second, "stop");
  }
  loss.requested = nll(outputs.req_dist,
                       ex.labels.requested ? kReqRequested : kReqNotRequested,
                       "requested");
  if (outputs.intent_dist.size() > 0)
    loss.intent = nll(outputs.intent_dist, ex.labels.intent_index, "intent");
  loss.total = loss.gate + loss.categorical + loss.span_start +
               loss.span_stop + loss.requested + loss.intent;
  return loss;
}

HeadLogitGrads loss_logit_grads(const TrainingExample& ex,
                                const HeadOutputs& outputs) {
  HeadLogitGrads d;
  d.gate = ce_grad(outputs.gate_dist, static_cast<int>(ex.labels.gate));
  if (wants_categorical_loss(ex))
    d.cat = ce_grad(outputs.cat_dist, cat_target(ex, outputs.cat_dist.size()));
  if (wants_span_loss(ex)) {
    d.start = ce_grad(outputs.start_dist, ex.labels.span->first);
    d.stop = ce_grad(outputs.stop_dist, ex.labels.span->second);
  }
  d.req = ce_grad(outputs.req_dist,
                  ex.labels.requested ? kReqRequested : kReqNotRequested);
  if (outputs.intent_dist.size() > 0)
    d.intent = ce_grad(outputs.intent_dist, ex.labels.intent_index);
  return d;
}

std::vector<Batch> build_batches(const std::vector<TrainingExample>& examples,
                                 const TrainConfig& cfg, std::uint64_t seed) {
  std::vector<int> cat, noncat;
  for (int i = 0; i < static_cast<int>(examples.size()); ++i) {
    (examples[static_cast<size_t>(i)].meta.is_categorical ? cat : noncat)
        .push_back(i);
  }
  Rng rng_cat(derive_seed(seed, "categorical"));
  Rng rng_non(derive_seed(seed, "noncategorical"));
  rng_cat.shuffle(cat);
  rng_non.shuffle(noncat);

  auto slice = [&](const std::vector<int>& idx, bool categorical) {
    std::vector<Batch> batches;
    for (size_t i = 0; i < idx.size(); i += cfg.batch_size) {
      Batch b;
      b.categorical = categorical;
      size_t end = std::min(idx.size(), i + cfg.batch_size);
      b.examples.assign(idx.begin() + static_cast<std::ptrdiff_t>(i),
                        idx.begin() + static_cast<std::ptrdiff_t>(end));
      batches.push_back(std::move(b));
    }
    return batches;
  };
  std::vector<Batch> cb = slice(cat, true);
  std::vector<Batch> nb = slice(noncat, false);

  // Proportional interleave: emit whichever type is further behind its
  // quantile schedule; ties go to the categorical stream.
  std::vector<Batch> out;
  size_t ci = 0, ni = 0;
  while (ci < cb.size() || ni < nb.size()) {
    bool take_cat;
    if (ci >= cb.size())
      take_cat = false;
    else if (ni >= nb.size())
      take_cat = true;
    else
      take_cat = (ci + 1) * nb.size() <= (ni + 1) * cb.size();
    out.push_back(std::move(take_cat ? cb[ci++] : nb[ni++]));
  }
  return out;
}

Vocabulary build_vocab_for(const std::vector<ServiceSchema>& schemas,
                           const std::vector<Dialogue>& dialogues,
                           int max_size) {
  std::vector<std::string> corpus;
  corpus.push_back("none");
  corpus.push_back(kDontcare);
  for (const ServiceSchema& s : schemas) {
    corpus.push_back(s.service_name);
    corpus.push_back(s.description);
    for (const SlotSchema& slot : s.slots) {
      corpus.push_back(slot.name);
      corpus.push_back(slot.description);
      for (const std::string& v : slot.possible_values) corpus.push_back(v);
    }
    for (const IntentSchema& intent : s.intents) {
      corpus.push_back(intent.name);
      corpus.push_back(intent.description);
    }
  }
  for (const Dialogue& d : dialogues)
    for (const Turn& t : d.turns) corpus.push_back(t.utterance);
  return build_vocab(corpus, max_size);
}

namespace {

struct AdamState {
  std::vector<double> m, v;
  int t = 0;
};

void adam_step(ParamStore& params, const std::vector<double>& grad,
               AdamState& st, const TrainConfig& cfg) {
  ++st.t;
  double bc1 = 1.0 - std::pow(cfg.adam_beta1, st.t);
  double bc2 = 1.0 - std::pow(cfg.adam_beta2, st.t);
  double* theta = params.data();
  for (const TensorSpec& spec : params.specs()) {
    std::size_t begin = spec.offset;
    std::size_t end = begin + static_cast<std::size_t>(spec.rows) *
                                  static_cast<std::size_t>(spec.cols);
    for (std::size_t i = begin; i < end; ++i) {
      double g = grad[i];
      st.m[i] = cfg.adam_beta1 * st.m[i] + (1.0 - cfg.adam_beta1) * g;
      st.v[i] = cfg.adam_beta2 * st.v[i] + (1.0 - cfg.adam_beta2) * g * g;
      double update =
          (st.m[i] / bc1) / (std::sqrt(st.v[i] / bc2) + cfg.adam_eps);
      if (spec.weight_decay) update += cfg.weight_decay * theta[i];
      theta[i] -= cfg.learning_rate * update;
    }
  }
}

nlohmann::json loss_json(const LossBreakdown& l) {
  return nlohmann::json{{"total", l.total},
                        {"gate", l.gate},
                        {"categorical", l.categorical},
                        {"span_start", l.span_start},
                        {"span_stop", l.span_stop},
                        {"requested", l.requested},
                        {"intent", l.intent}};
}

const SlotSchema& slot_of(const std::vector<ServiceSchema>& schemas,
                          const ExampleMeta& meta) {
  const ServiceSchema* service = find_service(schemas, meta.service);
  const SlotSchema* slot =
      service != nullptr ? service->find_slot(meta.slot) : nullptr;
  if (slot == nullptr)
    throw DataError("training example references unknown slot '" + meta.slot +
                    "' of service '" + meta.service + "'");
  return *slot;
}

void add_scaled(std::vector<double>& dst, const std::vector<double>& src,
                double scale) {
  for (size_t i = 0; i < dst.size(); ++i) dst[i] += scale * src[i];
}

}  // namespace

TrainResult train(Model& model, const std::vector<TrainingExample>& train_set,
                  const std::vector<Dialogue>& dev_set,
                  const std::vector<ServiceSchema>& schemas,
                  const TrainConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  if (train_set.empty()) throw DataError("training set is empty");

  std::ofstream log;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    log.open(out_dir + "/train_log.jsonl", std::ios::binary);
    if (!log) throw ConfigError("cannot write file: " + out_dir +
                                "/train_log.jsonl");
  }

  AdamState adam;
  adam.m = model.params.make_buffer();
  adam.v = model.params.make_buffer();
  std::vector<double> group_grad = model.params.make_buffer();
  std::vector<double> batch_grad = model.params.make_buffer();
  int group_batches = 0;

  Rng dropout_rng(derive_seed(cfg.seed, "dropout"));
  TrainResult result;

  auto optimizer_step = [&]() {
    if (group_batches == 0) return;
    // Mean over the accumulated batches, matching one big mean-reduced batch.
    for (double& g : group_grad) g /= group_batches;
    adam_step(model.params, group_grad, adam, cfg);
    std::fill(group_grad.begin(), group_grad.end(), 0.0);
    group_batches = 0;
    ++result.optimizer_steps;
  };

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<Batch> batches = build_batches(
        train_set, cfg, derive_seed(cfg.seed, "epoch_" + std::to_string(epoch)));
    for (size_t b = 0; b < batches.size(); ++b) {
      const Batch& batch = batches[b];
      std::fill(batch_grad.begin(), batch_grad.end(), 0.0);
      LossBreakdown mean;
      for (int idx : batch.examples) {
        const TrainingExample& ex = train_set[static_cast<size_t>(idx)];
        const SlotSchema& slot = slot_of(schemas, ex.meta);
        EncoderTape tape;
        EncoderOutput enc = model.encoder.forward(ex.input, model.params, tape,
                                                  &dropout_rng);
        HeadOutputs outputs =
            model.heads.forward(enc, ex.input, slot, model.params);
        LossBreakdown loss = compute_loss(ex, outputs);
        mean.total += loss.total;
        mean.gate += loss.gate;
        mean.categorical += loss.categorical;
        mean.span_start += loss.span_start;
        mean.span_stop += loss.span_stop;
        mean.requested += loss.requested;
        mean.intent += loss.intent;

        HeadLogitGrads d_logits = loss_logit_grads(ex, outputs);
        Matrix d_tokens = Matrix::Zero(ex.input.seq_len(),
                                       model.encoder_cfg.hidden_size);
        model.heads.backward(enc, ex.input, d_logits, model.params, batch_grad,
                             d_tokens);
        model.encoder.backward(ex.input, model.params, tape, d_tokens,
                               batch_grad);
      }
      double inv = 1.0 / static_cast<double>(batch.examples.size());
      mean.total *= inv;
      mean.gate *= inv;
      mean.categorical *= inv;
      mean.span_start *= inv;
      mean.span_stop *= inv;
      mean.requested *= inv;
      mean.intent *= inv;
      if (!std::isfinite(mean.total)) {
        std::string who;
        for (int idx : batch.examples) {
          const ExampleMeta& m = train_set[static_cast<size_t>(idx)].meta;
          who += " " + m.dialogue_id + ":" + std::to_string(m.turn_index) +
                 ":" + m.slot;
        }
        throw DataError("non-finite loss in batch" + who);
      }
      add_scaled(group_grad, batch_grad, inv);
      ++group_batches;
      result.final_loss = mean;

      if (log.is_open()) {
        nlohmann::json line{{"epoch", epoch},
                            {"batch", static_cast<int>(b)},
                            {"step", result.optimizer_steps},
                            {"batch_type",
                             batch.categorical ? "categorical"
                                               : "non_categorical"},
                            {"size", batch.examples.size()},
                            {"learning_rate", cfg.learning_rate},
                            {"loss", loss_json(mean)}};
        log << line.dump() << '\n';
      }

      if (group_batches == cfg.grad_accum_steps) optimizer_step();
    }
    optimizer_step();  // flush a partial accumulation group at epoch end

    if (!dev_set.empty()) {
      std::vector<TurnPrediction> preds;
      for (const Dialogue& d : dev_set) {
        Dialogue predicted = track_dialogue(d, schemas, model);
        auto one = collect_predictions(d, predicted);
        preds.insert(preds.end(), one.begin(), one.end());
      }
      MetricReport report = build_report(preds, schemas, {});
      result.epoch_dev_joint_ga.push_back(report.joint_goal_accuracy);
      if (log.is_open()) {
        nlohmann::json line{
            {"epoch", epoch},
            {"dev",
             {{"joint_goal_accuracy", report.joint_goal_accuracy},
              {"average_goal_accuracy", report.average_goal_accuracy},
              {"requested_slots_f1", report.requested_slots_f1},
              {"active_intent_accuracy", report.active_intent_accuracy}}}};
        log << line.dump() << '\n';
      }
      if (result.best_epoch < 0 ||
          report.joint_goal_accuracy > result.best_dev_joint_ga) {
        result.best_dev_joint_ga = report.joint_goal_accuracy;
        result.best_epoch = epoch;
        if (!out_dir.empty()) model.save(out_dir + "/best");
      }
    }
  }

  if (!out_dir.empty()) model.save(out_dir + "/final");
  return result;
}

double grad_check(Model& model, const TrainingExample& example,
                  const SlotSchema& slot, double epsilon, int sample_count,
                  std::uint64_t seed, bool heads_only) {
  // Analytic pass, dropout off.
  std::vector<double> grads = model.params.make_buffer();
  {
    EncoderTape tape;
    EncoderOutput enc =
        model.encoder.forward(example.input, model.params, tape, nullptr);
    HeadOutputs outputs =
        model.heads.forward(enc, example.input, slot, model.params);
    HeadLogitGrads d_logits = loss_logit_grads(example, outputs);
    Matrix d_tokens =
        Matrix::Zero(example.input.seq_len(), model.encoder_cfg.hidden_size);
    model.heads.backward(enc, example.input, d_logits, model.params, grads,
                         d_tokens);
    model.encoder.backward(example.input, model.params, tape, d_tokens, grads);
  }

  auto loss_at = [&]() {
    EncoderOutput enc = model.encoder.encode(example.input, model.params);
    HeadOutputs outputs =
        model.heads.forward(enc, example.input, slot, model.params);
    return compute_loss(example, outputs).total;
  };

  std::vector<std::size_t> candidates;
  for (const TensorSpec& spec : model.params.specs()) {
    if (heads_only && spec.name.rfind("heads.", 0) != 0) continue;
    std::size_t end = spec.offset + static_cast<std::size_t>(spec.rows) *
                                        static_cast<std::size_t>(spec.cols);
    for (std::size_t i = spec.offset; i < end; ++i) candidates.push_back(i);
  }
  if (candidates.empty()) throw InternalError("no parameters to check");
  Rng rng(seed);
  rng.shuffle(candidates);
  if (static_cast<int>(candidates.size()) > sample_count)
    candidates.resize(static_cast<size_t>(sample_count));

  double max_rel = 0.0;
  double* theta = model.params.data();
  for (std::size_t i : candidates) {
    double saved = theta[i];
    theta[i] = saved + epsilon;
    double up = loss_at();
    theta[i] = saved - epsilon;
    double down = loss_at();
    theta[i] = saved;
    double fd = (up - down) / (2.0 * epsilon);
    double a = grads[i];
    double denom = std::max({std::abs(a), std::abs(fd), 1e-8});
    double rel = std::abs(a - fd) / denom;
    if (std::abs(a) < 1e-10 && std::abs(fd) < 1e-10) rel = 0.0;
    max_rel = std::max(max_rel, rel);
  }
  return max_rel;
}

}  // namespace golomb

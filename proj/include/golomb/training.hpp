#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "golomb/assembly.hpp"
#include "golomb/heads.hpp"
#include "golomb/model.hpp"
#include "golomb/schema.hpp"

namespace golomb {

struct TrainConfig {
  double learning_rate = 3.5e-5;
  double weight_decay = 0.01;
  int epochs = 5;
  int batch_size = 8;
  int grad_accum_steps = 12;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 42;

  void validate() const;
};

// Summed cross-entropy over the heads a given example supervises.
// Inapplicable terms are exactly 0.
struct LossBreakdown {
  double total = 0.0;
  double gate = 0.0;
  double categorical = 0.0;
  double span_start = 0.0;
  double span_stop = 0.0;
  double requested = 0.0;
  double intent = 0.0;
};

LossBreakdown compute_loss(const TrainingExample& example,
                           const HeadOutputs& outputs);

// d(loss)/d(logits) for every supervised head: softmax output minus the
// one-hot target. Unsupervised heads stay empty.
HeadLogitGrads loss_logit_grads(const TrainingExample& example,
                                const HeadOutputs& outputs);

struct Batch {
  std::vector<int> examples;  // indices into the example list
  bool categorical = false;
};

// Type-pure batches (never mixing categorical and non-categorical
// examples), shuffled within type by the seeded generator and interleaved
// proportionally to the two type counts.
std::vector<Batch> build_batches(const std::vector<TrainingExample>& examples,
                                 const TrainConfig& cfg, std::uint64_t seed);

// Builds the token vocabulary a model needs for this data: utterances,
// descriptions, names, values, and the literal "none"/"dontcare" fillers.
Vocabulary build_vocab_for(const std::vector<ServiceSchema>& schemas,
                           const std::vector<Dialogue>& dialogues,
                           int max_size);

struct TrainResult {
  int optimizer_steps = 0;
  std::vector<double> epoch_dev_joint_ga;  // empty when dev_set is empty
  double best_dev_joint_ga = 0.0;
  int best_epoch = -1;  // 0-based; -1 when no dev evaluation ran
  LossBreakdown final_loss;                // last step's mean loss
};

// Runs the optimization loop: per-batch mean loss, gradients accumulated
// over grad_accum_steps batches, one AdamW step per group (decoupled decay,
// biases and layer norms excluded). When out_dir is non-empty, writes
// train_log.jsonl plus "final" and "best" model directories. A non-finite
// loss aborts with the offending batch's examples named.
TrainResult train(Model& model, const std::vector<TrainingExample>& train_set,
                  const std::vector<Dialogue>& dev_set,
                  const std::vector<ServiceSchema>& schemas,
                  const TrainConfig& cfg, const std::string& out_dir);

// Analytic gradients of compute_loss vs central finite differences on
// sample_count randomly chosen parameters; returns the max relative error.
// Dropout is disabled during the check.
double grad_check(Model& model, const TrainingExample& example,
                  const SlotSchema& slot, double epsilon, int sample_count,
                  std::uint64_t seed, bool heads_only = false);

}  // namespace golomb

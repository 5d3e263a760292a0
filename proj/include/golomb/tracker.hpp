#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "golomb/assembly.hpp"
#include "golomb/heads.hpp"
#include "golomb/model.hpp"
#include "golomb/schema.hpp"

namespace golomb {

// First index holding the maximum; ties resolve to the lowest index.
int argmax(const Vector& v);

struct SlotDecision {
  enum class Action { kSkip, kSetDontcare, kSetValue };

  std::string slot;
  Action action = Action::kSkip;
  std::string value;  // set iff action == kSetValue
};

// Joint start/stop argmax over the history region subject to start <= stop
// and stop - start < max_span_len. Ties prefer the smaller start, then the
// smaller stop. Returns inclusive token positions.
std::pair<int, int> best_span(const Vector& start_dist, const Vector& stop_dist,
                              std::pair<int, int> history_range,
                              int max_span_len);

// Character slice of the history window covered by the best span.
std::string extract_span_value(const Vector& start_dist,
                               const Vector& stop_dist,
                               const EncoderInput& input,
                               const DecodingConfig& cfg);

SlotDecision decode_slot(const HeadOutputs& outputs, const SlotSchema& slot,
                         const EncoderInput& input, const DecodingConfig& cfg,
                         CategoricalHead head_kind);

struct TurnDecision {
  DialogueState state;  // previous state with the decoded update applied
  StateUpdate update;
  std::vector<std::string> requested_slots;
  std::string active_intent;
};

// Combines per-slot decisions into the frame-level state. intent_names must
// list the candidates in input order (NONE first); req_dists maps slot name
// to that slot's requested-gate distribution.
TurnDecision decode_turn(const std::vector<SlotDecision>& decisions,
                         const Vector& intent_dist,
                         const std::map<std::string, Vector>& req_dists,
                         const std::vector<std::string>& intent_names,
                         const DialogueState& prev_state);

struct TrackContext {
  const Dialogue* dialogue = nullptr;
  int turn_index = 0;
  const ServiceSchema* service = nullptr;
};

// Produces head outputs for one assembled (frame, slot) input. The neural
// implementation wraps a Model; the oracle one answers from gold annotations
// and exists to test the decoding path in isolation.
class TurnModel {
 public:
  virtual ~TurnModel() = default;
  virtual HeadOutputs predict(const EncoderInput& input,
                              const SlotSchema& slot,
                              const TrackContext& ctx) const = 0;
};

class NeuralTurnModel : public TurnModel {
 public:
  explicit NeuralTurnModel(const Model& model) : model_(model) {}
  HeadOutputs predict(const EncoderInput& input, const SlotSchema& slot,
                      const TrackContext& ctx) const override;

 private:
  const Model& model_;
};

class OracleTurnModel : public TurnModel {
 public:
  explicit OracleTurnModel(const std::vector<ServiceSchema>& schemas)
      : schemas_(schemas) {}
  HeadOutputs predict(const EncoderInput& input, const SlotSchema& slot,
                      const TrackContext& ctx) const override;

 private:
  const std::vector<ServiceSchema>& schemas_;
};

// Runs the tracker over a dialogue and returns a copy with every user-frame
// state replaced by the predicted one. States accumulate against the
// tracker's own previous predictions, so errors carry forward as they would
// at inference time.
Dialogue track_dialogue(const Dialogue& dialogue,
                        const std::vector<ServiceSchema>& schemas,
                        const TurnModel& turn_model, const AssemblyConfig& acfg,
                        const DecodingConfig& dcfg, const Vocabulary& vocab);

inline Dialogue track_dialogue(const Dialogue& dialogue,
                               const std::vector<ServiceSchema>& schemas,
                               const Model& model) {
  NeuralTurnModel tm(model);
  return track_dialogue(dialogue, schemas, tm, model.assembly_cfg,
                        model.decoding_cfg, model.vocab);
}

}  // namespace golomb

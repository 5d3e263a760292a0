#include "golomb/tracker.hpp"

#include <cmath>
#include <limits>

#include "golomb/errors.hpp"

namespace golomb {

int argmax(const Vector& v) {
  if (v.size() == 0) throw InternalError("argmax of an empty vector");
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i) {
    if (v(i) > v(best)) best = i;
  }
  return best;
}

std::pair<int, int> best_span(const Vector& start_dist, const Vector& stop_dist,
                              std::pair<int, int> history_range,
                              int max_span_len) {
  const auto [begin, end] = history_range;
  if (begin >= end) throw InternalError("best_span over an empty history");
  if (end > start_dist.size() || end > stop_dist.size())
    throw InternalError("span distributions shorter than the history range");

  // log p(i) + log p(j), maximized over i <= j < i + max_span_len. Strict
  // improvement plus ascending iteration yields the smallest (start, stop)
  // among ties.
  std::pair<int, int> best{begin, begin};
  double best_score = -std::numeric_limits<double>::infinity();
  for (int i = begin; i < end; ++i) {
    double ls = std::log(start_dist(i));
    for (int j = i; j < end && j - i < max_span_len; ++j) {
      double score = ls + std::log(stop_dist(j));
      if (score > best_score) {
        best_score = score;
        best = {i, j};
      }
    }
  }
  return best;
}

std::string extract_span_value(const Vector& start_dist,
                               const Vector& stop_dist,
                               const EncoderInput& input,
                               const DecodingConfig& cfg) {
  auto [first, last] =
      best_span(start_dist, stop_dist, input.history_range, cfg.max_span_len);
  int base = input.history_range.first;
  const TokenAlignment& a = input.alignment.at(first - base);
  const TokenAlignment& b = input.alignment.at(last - base);
  if (b.char_end > static_cast<int>(input.history_text.size()))
    throw InternalError("span alignment points past the history text");
  return input.history_text.substr(a.char_start, b.char_end - a.char_start);
}

SlotDecision decode_slot(const HeadOutputs& outputs, const SlotSchema& slot,
                         const EncoderInput& input, const DecodingConfig& cfg,
                         CategoricalHead head_kind) {
  SlotDecision decision;
  decision.slot = slot.name;

  int gate = argmax(outputs.gate_dist);
  if (gate == kGateNone) return decision;
  if (gate == kGateDontcare) {
    decision.action = SlotDecision::Action::kSetDontcare;
    return decision;
  }

  if (!slot.is_categorical) {
    decision.action = SlotDecision::Action::kSetValue;
    decision.value =
        extract_span_value(outputs.start_dist, outputs.stop_dist, input, cfg);
    return decision;
  }

  int k = static_cast<int>(slot.possible_values.size());
  int idx = argmax(outputs.cat_dist);
  int value_index;  // into possible_values, or -1 for NONE
  if (head_kind == CategoricalHead::kPv) {
    value_index = idx - 1;  // NONE occupies index 0
  } else {
    // CLS variant: NONE sits at the final index; masked positions carry zero
    // probability so idx < k whenever a real value wins.
    value_index = (idx == static_cast<int>(outputs.cat_dist.size()) - 1) ? -1
                                                                         : idx;
  }
  if (value_index < 0) return decision;  // NONE under the ptr gate: no update
  if (value_index >= k)
    throw InternalError("categorical distribution longer than the value list "
                        "for slot '" + slot.name + "'");
  decision.action = SlotDecision::Action::kSetValue;
  decision.value = slot.possible_values[value_index];
  return decision;
}

TurnDecision decode_turn(const std::vector<SlotDecision>& decisions,
                         const Vector& intent_dist,
                         const std::map<std::string, Vector>& req_dists,
                         const std::vector<std::string>& intent_names,
                         const DialogueState& prev_state) {
  TurnDecision td;
  for (const SlotDecision& d : decisions) {
    switch (d.action) {
      case SlotDecision::Action::kSkip:
        break;
      case SlotDecision::Action::kSetDontcare:
        td.update.changed[d.slot] = {kDontcare};
        break;
      case SlotDecision::Action::kSetValue:
        td.update.changed[d.slot] = {d.value};
        break;
    }
  }
  td.state.slot_values = apply_state_update(prev_state.slot_values, td.update);

  for (const auto& [slot, dist] : req_dists) {
    if (dist.size() != 2)
      throw InternalError("requested-gate distribution must have two classes");
    if (dist(kReqRequested) > 0.5) {
      td.state.requested_slots.insert(slot);
      td.requested_slots.push_back(slot);
    }
  }

  if (intent_dist.size() == 0) {
    td.active_intent = kNoneIntent;
  } else {
    if (intent_dist.size() != static_cast<Eigen::Index>(intent_names.size()))
      throw InternalError("intent distribution does not match candidate list");
    td.active_intent = intent_names[argmax(intent_dist)];
  }
  td.state.active_intent = td.active_intent;
  return td;
}

HeadOutputs NeuralTurnModel::predict(const EncoderInput& input,
                                     const SlotSchema& slot,
                                     const TrackContext&) const {
  return model_.predict(input, slot);
}

namespace {

Vector one_hot(int size, int index) {
  Vector v = Vector::Zero(size);
  v(index) = 1.0;
  return v;
}

}  // namespace

HeadOutputs OracleTurnModel::predict(const EncoderInput& input,
                                     const SlotSchema& slot,
                                     const TrackContext& ctx) const {
  const Dialogue& d = *ctx.dialogue;
  const Turn& turn = d.turns[ctx.turn_index];
  const ServiceSchema& service = *ctx.service;
  const Frame* frame = turn.find_frame(service.service_name);
  if (frame == nullptr || !frame->state)
    throw InternalError("oracle asked about a frame without gold state");

  DialogueState prev_state;
  for (int t = 0; t < ctx.turn_index; ++t) {
    if (d.turns[t].speaker != Speaker::kUser) continue;
    const Frame* f = d.turns[t].find_frame(service.service_name);
    if (f != nullptr && f->state) prev_state = *f->state;
  }
  const Turn* prev_system =
      (ctx.turn_index > 0 &&
       d.turns[ctx.turn_index - 1].speaker == Speaker::kSystem)
          ? &d.turns[ctx.turn_index - 1]
          : nullptr;

  LabelSet labels = derive_labels(turn, *frame, prev_state, slot, service,
                                  input, prev_system);

  HeadOutputs out;
  out.gate_dist = one_hot(3, static_cast<int>(labels.gate));
  out.req_dist =
      one_hot(2, labels.requested ? kReqRequested : kReqNotRequested);
  if (!input.int_positions.empty())
    out.intent_dist =
        one_hot(static_cast<int>(input.int_positions.size()),
                labels.intent_index);
  if (slot.is_categorical) {
    int cat = labels.categorical_index.value_or(0);
    int k = static_cast<int>(slot.possible_values.size());
    if (!input.pv_positions.empty()) {
      out.cat_dist = one_hot(static_cast<int>(input.pv_positions.size()), cat);
    } else {
      // CLS layout: real values first, NONE last.
      int m = std::max(k, 1);
      out.cat_dist = one_hot(m + 1, cat == 0 ? m : cat - 1);
    }
  } else {
    int seq = input.seq_len();
    std::pair<int, int> span{input.history_range.first,
                             input.history_range.first};
    if (labels.span_supervised && labels.span) span = *labels.span;
    out.start_dist = one_hot(seq, span.first);
    out.stop_dist = one_hot(seq, span.second);
  }
  return out;
}

Dialogue track_dialogue(const Dialogue& dialogue,
                        const std::vector<ServiceSchema>& schemas,
                        const TurnModel& turn_model, const AssemblyConfig& acfg,
                        const DecodingConfig& dcfg, const Vocabulary& vocab) {
  acfg.validate();
  dcfg.validate();
  Dialogue out = dialogue;
  std::map<std::string, DialogueState> prev_pred;

  for (size_t t = 0; t < out.turns.size(); ++t) {
    Turn& turn = out.turns[t];
    if (turn.speaker != Speaker::kUser) continue;
    const Turn* prev_system =
        (t > 0 && out.turns[t - 1].speaker == Speaker::kSystem)
            ? &out.turns[t - 1]
            : nullptr;
    std::vector<HistoryUtterance> history;
    if (prev_system)
      history.push_back({Speaker::kSystem, prev_system->utterance});
    history.push_back({Speaker::kUser, turn.utterance});

    for (Frame& frame : turn.frames) {
      const ServiceSchema* service = find_service(schemas, frame.service);
      if (service == nullptr)
        throw DataError("dialogue " + dialogue.dialogue_id +
                        ": no schema for service '" + frame.service + "'");
      TrackContext ctx{&dialogue, static_cast<int>(t), service};

      std::vector<SlotDecision> decisions;
      std::map<std::string, Vector> req_dists;
      Vector intent_sum;
      int intent_count = 0;
      for (const SlotSchema& slot : service->slots) {
        std::string question = build_question(slot, *service, acfg.use_nld);
        EncoderInput input = assemble_input(question, history,
                                            service->intents, slot, acfg,
                                            vocab);
        HeadOutputs outputs = turn_model.predict(input, slot, ctx);
        decisions.push_back(
            decode_slot(outputs, slot, input, dcfg, acfg.categorical_head));
        req_dists[slot.name] = outputs.req_dist;
        if (outputs.intent_dist.size() > 0) {
          // The intent candidates repeat in every slot input of the frame;
          // averaging the per-input distributions gives one frame-level vote.
          if (intent_count == 0)
            intent_sum = outputs.intent_dist;
          else
            intent_sum += outputs.intent_dist;
          ++intent_count;
        }
      }

      Vector intent_avg;
      std::vector<std::string> intent_names;
      if (intent_count > 0) {
        intent_avg = intent_sum / intent_count;
        intent_names.push_back(kNoneIntent);
        for (const IntentSchema& intent : service->intents)
          intent_names.push_back(intent.name);
      }

      DialogueState prev_state;
      auto ps = prev_pred.find(frame.service);
      if (ps != prev_pred.end()) prev_state = ps->second;

      TurnDecision td = decode_turn(decisions, intent_avg, req_dists,
                                    intent_names, prev_state);
      frame.state = td.state;
      prev_pred[frame.service] = td.state;
    }
  }
  return out;
}

}  // namespace golomb

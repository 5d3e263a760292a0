#include "golomb/assembly.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "golomb/errors.hpp"
#include "golomb/rng.hpp"

namespace golomb {

using json = nlohmann::json;

void AssemblyConfig::validate() const {
  if (max_hist_len < 4)
    throw ConfigError("max_hist_len must be at least 4");
  if (max_intent_len < 2 && use_intents)
    throw ConfigError("max_intent_len must be at least 2 when intents are on");
  int fixed = max_hist_len + (use_intents ? max_intent_len : 0);
  if (fixed > max_seq_len)
    throw ConfigError("max_hist_len + max_intent_len exceeds max_seq_len (" +
                      std::to_string(fixed) + " > " +
                      std::to_string(max_seq_len) + ")");
  if (cat_neg_sampling_prob < 0.0 || cat_neg_sampling_prob > 1.0 ||
      noncat_neg_sampling_prob < 0.0 || noncat_neg_sampling_prob > 1.0)
    throw ConfigError("negative sampling probabilities must lie in [0, 1]");
  if (max_categorical_values < 1)
    throw ConfigError("max_categorical_values must be positive");
  if (max_intents < 1) throw ConfigError("max_intents must be positive");
}

const char* to_string(SlotGate gate) {
  switch (gate) {
    case SlotGate::kNone: return "none";
    case SlotGate::kDontcare: return "dontcare";
    case SlotGate::kPtr: return "ptr";
  }
  return "?";
}

int EncoderInput::active_len() const {
  for (int i = seq_len() - 1; i >= 0; --i)
    if (attention_mask[static_cast<size_t>(i)]) return i + 1;
  return 0;
}

std::string build_question(const SlotSchema& slot, const ServiceSchema& service,
                           bool use_nld, std::vector<std::string>* warnings) {
  auto pick = [&](const std::string& description, const std::string& name,
                  const char* what) -> const std::string& {
    if (!use_nld) return name;
    if (!description.empty()) return description;
    if (warnings)
      warnings->push_back("empty " + std::string(what) + " description for '" +
                          name + "', falling back to the name");
    return name;
  };
  return pick(slot.description, slot.name, "slot") + " " +
         pick(service.description, service.service_name, "service");
}

namespace {

// The literal surface realizing NONE candidates.
constexpr const char* kNoneSurface = "none";

struct RegionWriter {
  EncoderInput& input;
  int pos;

  void put(int token_id, std::uint8_t segment) {
    input.token_ids[static_cast<size_t>(pos)] = token_id;
    input.attention_mask[static_cast<size_t>(pos)] = 1;
    input.segment_ids[static_cast<size_t>(pos)] = segment;
    ++pos;
  }
};

std::string candidate_text(const IntentSchema& intent, bool use_nld) {
  if (use_nld && !intent.description.empty()) return intent.description;
  return intent.name;
}

}  // namespace

EncoderInput assemble_input(const std::string& question,
                            const std::vector<HistoryUtterance>& history,
                            const std::vector<IntentSchema>& intents,
                            const SlotSchema& slot, const AssemblyConfig& cfg,
                            const Vocabulary& vocab) {
  cfg.validate();

  EncoderInput input;
  input.token_ids.assign(static_cast<size_t>(cfg.max_seq_len), Vocabulary::kPad);
  input.attention_mask.assign(static_cast<size_t>(cfg.max_seq_len), 0);
  input.segment_ids.assign(static_cast<size_t>(cfg.max_seq_len), kSegPad);
  input.cls_index = 0;

  // --- first region: [CLS] question [SEP] history [SEP], padded to
  // max_hist_len positions ---
  std::vector<Token> question_tokens = tokenize(question, vocab);
  int q_len = static_cast<int>(question_tokens.size());
  if (q_len + 3 > cfg.max_hist_len)
    throw DataError("question too long: " + std::to_string(q_len) +
                    " tokens plus 3 special tokens exceed max_hist_len=" +
                    std::to_string(cfg.max_hist_len));

  // History rendering: utterances joined by single spaces, offsets global.
  struct HistToken {
    Token token;
    int utterance_index;
  };
  std::vector<HistToken> hist_tokens;
  input.history_utterance_offsets.clear();
  for (size_t u = 0; u < history.size(); ++u) {
    if (u > 0) input.history_text += ' ';
    int base = static_cast<int>(input.history_text.size());
    input.history_utterance_offsets.push_back(base);
    input.history_text += history[u].utterance;
    for (Token tok : tokenize(history[u].utterance, vocab)) {
      tok.char_start += base;
      tok.char_end += base;
      tok.source = Region::kHistory;
      hist_tokens.push_back(HistToken{std::move(tok), static_cast<int>(u)});
    }
  }

  // Oldest tokens are dropped first; the question is never truncated.
  int budget = cfg.max_hist_len - q_len - 3;
  if (static_cast<int>(hist_tokens.size()) > budget)
    hist_tokens.erase(hist_tokens.begin(),
                      hist_tokens.end() - static_cast<std::ptrdiff_t>(budget));

  RegionWriter w{input, 0};
  w.put(Vocabulary::kCls, kSegQuestion);
  for (const Token& tok : question_tokens) w.put(tok.id, kSegQuestion);
  w.put(Vocabulary::kSep, kSegQuestion);
  input.history_range.first = w.pos;
  for (const HistToken& ht : hist_tokens) {
    input.alignment.push_back(TokenAlignment{ht.utterance_index,
                                             ht.token.char_start,
                                             ht.token.char_end});
    w.put(ht.token.id, kSegHistory);
  }
  input.history_range.second = w.pos;
  w.put(Vocabulary::kSep, kSegHistory);
  w.pos = cfg.max_hist_len;  // remaining first-region positions stay [PAD]

  // --- intent region: [int] none, then [int] + description per intent ---
  if (cfg.use_intents) {
    int region_end = cfg.max_hist_len + cfg.max_intent_len;
    auto emit = [&](const std::string& text) {
      std::vector<Token> toks = tokenize(text, vocab);
      if (w.pos + 1 + static_cast<int>(toks.size()) > region_end)
        throw DataError(
            "intent region overflow: candidates do not fit in max_intent_len=" +
            std::to_string(cfg.max_intent_len));
      input.int_positions.push_back(w.pos);
      w.put(Vocabulary::kInt, kSegIntents);
      for (const Token& tok : toks) w.put(tok.id, kSegIntents);
    };
    emit(kNoneSurface);
    for (const IntentSchema& intent : intents)
      emit(candidate_text(intent, cfg.use_nld));
    w.pos = region_end;
  }

  // --- possible-value region: [pv] none, then [pv] + value tokens ---
  if (slot.is_categorical && cfg.categorical_head == CategoricalHead::kPv) {
    auto emit = [&](const std::string& text) {
      std::vector<Token> toks = tokenize(text, vocab);
      if (w.pos + 1 + static_cast<int>(toks.size()) > cfg.max_seq_len)
        throw DataError("pv region overflow: total assembled length exceeds "
                        "max_seq_len=" +
                        std::to_string(cfg.max_seq_len) + " for slot '" +
                        slot.name + "'");
      input.pv_positions.push_back(w.pos);
      w.put(Vocabulary::kPv, kSegValues);
      for (const Token& tok : toks) w.put(tok.id, kSegValues);
    };
    emit(kNoneSurface);
    for (const std::string& value : slot.possible_values) emit(value);
  }

  return input;
}

namespace {

// Token interval of a character span, or nullopt when the span does not lie
// inside the (possibly truncated) history window.
std::optional<std::pair<int, int>> span_to_tokens(const EncoderInput& input,
                                                  int utterance_index,
                                                  int char_start,
                                                  int char_end) {
  int first = -1, last = -1;
  for (size_t i = 0; i < input.alignment.size(); ++i) {
    const TokenAlignment& a = input.alignment[i];
    if (a.utterance_index != utterance_index) continue;
    if (a.char_end <= char_start || a.char_start >= char_end) continue;
    int pos = input.history_range.first + static_cast<int>(i);
    if (first < 0) first = pos;
    last = pos;
  }
  if (first < 0) return std::nullopt;
  return std::make_pair(first, last);
}

}  // namespace

LabelSet derive_labels(const Turn&, const Frame& frame,
                       const DialogueState& prev_state, const SlotSchema& slot,
                       const ServiceSchema& service, const EncoderInput& input,
                       const Turn* prev_system_turn) {
  if (!frame.state)
    throw InternalError("derive_labels requires a user frame with a state");
  const DialogueState& state = *frame.state;

  LabelSet labels;
  labels.requested = state.requested_slots.count(slot.name) > 0;

  labels.intent_index = 0;
  if (state.active_intent != kNoneIntent) {
    for (size_t i = 0; i < service.intents.size(); ++i)
      if (service.intents[i].name == state.active_intent)
        labels.intent_index = static_cast<int>(i) + 1;
    if (labels.intent_index == 0)
      throw DataError("active_intent '" + state.active_intent +
                      "' is not an intent of service " + service.service_name);
  }

  StateUpdate update = compute_state_update(prev_state.slot_values,
                                            state.slot_values);
  auto it = update.changed.find(slot.name);
  if (it == update.changed.end()) {
    labels.gate = SlotGate::kNone;
    return labels;
  }
  const std::vector<std::string>& gold_values = it->second;
  if (std::find(gold_values.begin(), gold_values.end(), kDontcare) !=
      gold_values.end()) {
    labels.gate = SlotGate::kDontcare;
    return labels;
  }

  labels.gate = SlotGate::kPtr;
  if (slot.is_categorical) {
    for (const std::string& v : gold_values) {
      auto pv = std::find(slot.possible_values.begin(),
                          slot.possible_values.end(), v);
      if (pv != slot.possible_values.end()) {
        labels.categorical_index =
            static_cast<int>(pv - slot.possible_values.begin()) + 1;
        break;
      }
    }
    if (!labels.categorical_index)
      throw DataError("categorical value for slot '" + slot.name +
                      "' of service " + service.service_name +
                      " is not among possible_values");
    return labels;
  }

  // Non-categorical: locate a gold span in the history window. Candidate
  // character spans come from the current user frame and, failing that, the
  // preceding system turn's frame for the same service. The user utterance is
  // always the last history utterance.
  int user_utt_index =
      static_cast<int>(input.history_utterance_offsets.size()) - 1;
  auto try_spans = [&](const Frame* f, int utt_index) -> bool {
    if (f == nullptr || utt_index < 0) return false;
    if (utt_index >= static_cast<int>(input.history_utterance_offsets.size()))
      return false;
    int base = input.history_utterance_offsets[static_cast<size_t>(utt_index)];
    for (const SpanAnnotation& span : f->spans) {
      if (span.slot != slot.name) continue;
      auto toks = span_to_tokens(input, utt_index, base + span.start,
                                 base + span.exclusive_end);
      if (toks) {
        labels.span = *toks;
        labels.span_supervised = true;
        return true;
      }
    }
    return false;
  };
  if (!try_spans(&frame, user_utt_index)) {
    const Frame* sys_frame =
        prev_system_turn ? prev_system_turn->find_frame(frame.service) : nullptr;
    try_spans(sys_frame, user_utt_index - 1);
  }
  return labels;
}

std::vector<TrainingExample> make_examples(
    const Dialogue& dialogue, const std::vector<ServiceSchema>& schemas,
    const AssemblyConfig& cfg, const Vocabulary& vocab,
    std::uint64_t rng_seed) {
  cfg.validate();
  // Per-dialogue seed so corpus-level generation is order-independent.
  Rng rng(derive_seed(rng_seed, dialogue.dialogue_id));

  std::vector<TrainingExample> out;
  std::map<std::string, DialogueState> prev_states;

  for (size_t t = 0; t < dialogue.turns.size(); ++t) {
    const Turn& turn = dialogue.turns[t];
    if (turn.speaker != Speaker::kUser) continue;
    const Turn* prev_system =
        (t > 0 && dialogue.turns[t - 1].speaker == Speaker::kSystem)
            ? &dialogue.turns[t - 1]
            : nullptr;

    std::vector<HistoryUtterance> history;
    if (prev_system)
      history.push_back({Speaker::kSystem, prev_system->utterance});
    history.push_back({Speaker::kUser, turn.utterance});

    for (const Frame& frame : turn.frames) {
      const ServiceSchema* service = find_service(schemas, frame.service);
      if (service == nullptr)
        throw DataError("dialogue " + dialogue.dialogue_id +
                        ": no schema for service '" + frame.service + "'");
      if (!frame.state)
        throw DataError("dialogue " + dialogue.dialogue_id + " turn " +
                        std::to_string(t) + ": user frame without state");
      DialogueState prev_state;  // empty at dialogue start
      auto ps = prev_states.find(frame.service);
      if (ps != prev_states.end()) prev_state = ps->second;

      for (const SlotSchema& slot : service->slots) {
        TrainingExample ex;
        ex.meta = ExampleMeta{dialogue.dialogue_id, static_cast<int>(t),
                              service->service_name, slot.name,
                              slot.is_categorical};
        std::string question = build_question(slot, *service, cfg.use_nld);
        try {
          ex.input = assemble_input(question, history, service->intents, slot,
                                    cfg, vocab);
          ex.labels = derive_labels(turn, frame, prev_state, slot, *service,
                                    ex.input, prev_system);
        } catch (const DataError& e) {
          throw DataError("dialogue " + dialogue.dialogue_id + " turn " +
                          std::to_string(t) + " slot '" + slot.name +
                          "': " + e.what());
        }
        if (ex.labels.gate == SlotGate::kNone) {
          // One uniform draw per negative candidate; keeping the draw count
          // independent of the probability makes kept-sets monotone in it.
          double u = rng.uniform();
          double prob = slot.is_categorical ? cfg.cat_neg_sampling_prob
                                            : cfg.noncat_neg_sampling_prob;
          if (u >= prob) continue;
        }
        out.push_back(std::move(ex));
      }
      prev_states[frame.service] = *frame.state;
    }
  }
  return out;
}

std::string example_to_json_line(const TrainingExample& ex) {
  json j;
  j["meta"] = {{"dialogue_id", ex.meta.dialogue_id},
               {"turn_index", ex.meta.turn_index},
               {"service", ex.meta.service},
               {"slot", ex.meta.slot},
               {"is_categorical", ex.meta.is_categorical}};
  j["token_ids"] = ex.input.token_ids;
  json labels;
  labels["gate"] = to_string(ex.labels.gate);
  if (ex.labels.categorical_index)
    labels["categorical_index"] = *ex.labels.categorical_index;
  if (ex.labels.span)
    labels["span"] = {ex.labels.span->first, ex.labels.span->second};
  labels["span_supervised"] = ex.labels.span_supervised;
  labels["requested"] = ex.labels.requested;
  labels["intent_index"] = ex.labels.intent_index;
  j["labels"] = std::move(labels);
  return j.dump();
}

void dump_examples(const std::vector<TrainingExample>& examples,
                   const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write file: " + path);
  for (const auto& ex : examples) out << example_to_json_line(ex) << '\n';
}

}  // namespace golomb

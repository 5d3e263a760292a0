#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "golomb/schema.hpp"
#include "golomb/tokenizer.hpp"

namespace golomb {

enum class CategoricalHead : std::uint8_t { kPv = 0, kCls = 1 };

// Region layout and sampling knobs for per-(frame, slot) encoder inputs.
struct AssemblyConfig {
  int max_hist_len = 250;   // [CLS] + question + [SEP] + history + [SEP] + pad
  int max_intent_len = 50;  // [int]-separated intent candidates + pad
  int max_seq_len = 512;
  bool use_nld = true;      // natural-language descriptions vs raw names
  bool use_intents = true;
  CategoricalHead categorical_head = CategoricalHead::kPv;
  double cat_neg_sampling_prob = 0.1;
  double noncat_neg_sampling_prob = 0.2;
  int max_categorical_values = 16;  // capacity of the CLS-variant filler
  int max_intents = 8;

  void validate() const;
};

// Segment ids per region.
inline constexpr std::uint8_t kSegQuestion = 0;
inline constexpr std::uint8_t kSegHistory = 1;
inline constexpr std::uint8_t kSegIntents = 2;
inline constexpr std::uint8_t kSegValues = 3;
inline constexpr std::uint8_t kSegPad = 0;

// Maps one history token position back to its source character interval.
// Offsets are global into history_text.
struct TokenAlignment {
  int utterance_index = 0;
  int char_start = 0;
  int char_end = 0;
};

struct EncoderInput {
  std::vector<int> token_ids;            // length max_seq_len
  std::vector<std::uint8_t> attention_mask;
  std::vector<std::uint8_t> segment_ids;
  int cls_index = 0;
  std::pair<int, int> history_range{0, 0};  // [begin, end) of history tokens
  std::vector<int> int_positions;           // NONE candidate first
  std::vector<int> pv_positions;            // NONE candidate first
  // alignment[i] describes position history_range.first + i.
  std::vector<TokenAlignment> alignment;

  // Rendering of the history window (utterances joined by single spaces);
  // span values are sliced out of this string.
  std::string history_text;
  std::vector<int> history_utterance_offsets;  // base of each utterance

  int seq_len() const { return static_cast<int>(token_ids.size()); }
  // One past the last attended position; everything after is padding.
  int active_len() const;
};

enum class SlotGate : std::uint8_t { kNone = 0, kDontcare = 1, kPtr = 2 };

const char* to_string(SlotGate gate);

struct LabelSet {
  SlotGate gate = SlotGate::kNone;
  std::optional<int> categorical_index;      // 0 = NONE, 1..k = schema values
  std::optional<std::pair<int, int>> span;   // inclusive token positions
  bool span_supervised = false;
  bool requested = false;
  int intent_index = 0;                      // 0 = NONE
};

struct ExampleMeta {
  std::string dialogue_id;
  int turn_index = 0;
  std::string service;
  std::string slot;
  bool is_categorical = false;
};

struct TrainingExample {
  EncoderInput input;
  LabelSet labels;
  ExampleMeta meta;
};

struct HistoryUtterance {
  Speaker speaker = Speaker::kSystem;
  std::string utterance;
};

// "<slot description> <service description>" with use_nld, names otherwise.
// Empty descriptions fall back to names; a note is appended to *warnings.
std::string build_question(const SlotSchema& slot, const ServiceSchema& service,
                           bool use_nld,
                           std::vector<std::string>* warnings = nullptr);

EncoderInput assemble_input(const std::string& question,
                            const std::vector<HistoryUtterance>& history,
                            const std::vector<IntentSchema>& intents,
                            const SlotSchema& slot, const AssemblyConfig& cfg,
                            const Vocabulary& vocab);

LabelSet derive_labels(const Turn& turn, const Frame& frame,
                       const DialogueState& prev_state, const SlotSchema& slot,
                       const ServiceSchema& service, const EncoderInput& input,
                       const Turn* prev_system_turn = nullptr);

// One candidate example per (user turn, frame, slot of the frame's service).
// Positives always kept; negatives kept with the configured per-kind
// probability. Deterministic: the dialogue id and rng_seed fix the draws.
std::vector<TrainingExample> make_examples(
    const Dialogue& dialogue, const std::vector<ServiceSchema>& schemas,
    const AssemblyConfig& cfg, const Vocabulary& vocab, std::uint64_t rng_seed);

// Line-delimited JSON debug dump, one example per line.
std::string example_to_json_line(const TrainingExample& ex);
void dump_examples(const std::vector<TrainingExample>& examples,
                   const std::string& path);

}  // namespace golomb

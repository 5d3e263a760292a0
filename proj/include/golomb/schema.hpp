#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace golomb {

// ---------------------------------------------------------------------------
// Schema side: machine-readable service interfaces with natural-language
// descriptions. These descriptions are model input, which is what makes
// zero-shot transfer to unseen services possible.
// ---------------------------------------------------------------------------

struct SlotSchema {
  std::string name;
  std::string description;
  bool is_categorical = false;
  std::vector<std::string> possible_values;  // non-empty iff categorical
};

struct IntentSchema {
  std::string name;
  std::string description;
  std::vector<std::string> required_slots;
  std::vector<std::string> optional_slots;
};

struct ServiceSchema {
  std::string service_name;
  std::string description;
  std::vector<SlotSchema> slots;
  std::vector<IntentSchema> intents;

  const SlotSchema* find_slot(const std::string& name) const;
  const IntentSchema* find_intent(const std::string& name) const;
};

// ---------------------------------------------------------------------------
// Dialogue side.
// ---------------------------------------------------------------------------

// Slot name -> list of acceptable gold surface forms (first one is canonical).
using SlotValueMap = std::map<std::string, std::vector<std::string>>;

inline constexpr const char* kNoneIntent = "NONE";
inline constexpr const char* kDontcare = "dontcare";

struct DialogueState {
  std::string active_intent = kNoneIntent;
  std::set<std::string> requested_slots;
  SlotValueMap slot_values;

  bool operator==(const DialogueState&) const = default;
};

// Character span of a non-categorical slot value inside one utterance.
struct SpanAnnotation {
  std::string slot;
  int start = 0;          // inclusive
  int exclusive_end = 0;  // exclusive
};

struct Frame {
  std::string service;
  std::optional<DialogueState> state;  // user turns only
  std::vector<SpanAnnotation> spans;
};

enum class Speaker { kUser, kSystem };

struct Turn {
  Speaker speaker = Speaker::kUser;
  std::string utterance;
  std::vector<Frame> frames;

  const Frame* find_frame(const std::string& service) const;
};

struct Dialogue {
  std::string dialogue_id;
  std::vector<std::string> services;
  std::vector<Turn> turns;
};

// The per-turn prediction target: slots whose value set differs from the
// previous user-turn state of the same service. States only grow or
// overwrite; there is no deletion.
struct StateUpdate {
  SlotValueMap changed;
};

StateUpdate compute_state_update(const SlotValueMap& prev,
                                 const SlotValueMap& cur);

SlotValueMap apply_state_update(const SlotValueMap& state,
                                const StateUpdate& update);

// Consistency check of a dialogue against its schemas. Returns human-readable
// issues instead of throwing; an empty list means the dialogue is clean.
std::vector<std::string> validate_dialogue(
    const Dialogue& d, const std::vector<ServiceSchema>& schemas);

const ServiceSchema* find_service(const std::vector<ServiceSchema>& schemas,
                                  const std::string& name);

}  // namespace golomb

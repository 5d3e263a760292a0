#include "golomb/schema.hpp"

#include <algorithm>
#include <sstream>

namespace golomb {

const SlotSchema* ServiceSchema::find_slot(const std::string& name) const {
  for (const auto& s : slots)
    if (s.name == name) return &s;
  return nullptr;
}

const IntentSchema* ServiceSchema::find_intent(const std::string& name) const {
  for (const auto& i : intents)
    if (i.name == name) return &i;
  return nullptr;
}

const Frame* Turn::find_frame(const std::string& service) const {
  for (const auto& f : frames)
    if (f.service == service) return &f;
  return nullptr;
}

const ServiceSchema* find_service(const std::vector<ServiceSchema>& schemas,
                                  const std::string& name) {
  for (const auto& s : schemas)
    if (s.service_name == name) return &s;
  return nullptr;
}

StateUpdate compute_state_update(const SlotValueMap& prev,
                                 const SlotValueMap& cur) {
  StateUpdate update;
  for (const auto& [slot, values] : cur) {
    auto it = prev.find(slot);
    if (it == prev.end() || it->second != values) update.changed[slot] = values;
  }
  return update;
}

SlotValueMap apply_state_update(const SlotValueMap& state,
                                const StateUpdate& update) {
  SlotValueMap result = state;
  for (const auto& [slot, values] : update.changed) result[slot] = values;
  return result;
}

namespace {

bool is_acceptable_categorical(const SlotSchema& slot,
                               const std::vector<std::string>& values) {
  for (const auto& v : values) {
    if (v == kDontcare) continue;
    if (std::find(slot.possible_values.begin(), slot.possible_values.end(),
                  v) == slot.possible_values.end())
      return false;
  }
  return true;
}

}  // namespace

std::vector<std::string> validate_dialogue(
    const Dialogue& d, const std::vector<ServiceSchema>& schemas) {
  std::vector<std::string> issues;
  auto report = [&](size_t turn_idx, const std::string& msg) {
    std::ostringstream os;
    os << "dialogue " << d.dialogue_id << " turn " << turn_idx << ": " << msg;
    issues.push_back(os.str());
  };

  // Per-service previous user-turn state, used to flag deletions (which never
  // occur in well-formed data).
  std::map<std::string, SlotValueMap> prev_values;

  for (size_t t = 0; t < d.turns.size(); ++t) {
    const Turn& turn = d.turns[t];
    for (const Frame& frame : turn.frames) {
      const ServiceSchema* svc = find_service(schemas, frame.service);
      if (svc == nullptr) {
        report(t, "frame references unknown service '" + frame.service + "'");
        continue;
      }
      for (const SpanAnnotation& span : frame.spans) {
        const SlotSchema* slot = svc->find_slot(span.slot);
        if (slot == nullptr)
          report(t, "span references unknown slot '" + span.slot + "'");
        else if (slot->is_categorical)
          report(t, "span annotation on categorical slot '" + span.slot + "'");
      }
      if (!frame.state) continue;
      const DialogueState& state = *frame.state;
      if (state.active_intent != kNoneIntent &&
          svc->find_intent(state.active_intent) == nullptr)
        report(t, "unknown active_intent '" + state.active_intent + "' for " +
                      frame.service);
      for (const auto& req : state.requested_slots)
        if (svc->find_slot(req) == nullptr)
          report(t, "requested slot '" + req + "' not in schema of " +
                        frame.service);
      for (const auto& [slot_name, values] : state.slot_values) {
        const SlotSchema* slot = svc->find_slot(slot_name);
        if (slot == nullptr) {
          report(t, "state slot '" + slot_name + "' not in schema of " +
                        frame.service);
          continue;
        }
        if (values.empty()) {
          report(t, "state slot '" + slot_name + "' has an empty value list");
          continue;
        }
        if (slot->is_categorical && !is_acceptable_categorical(*slot, values))
          report(t, "categorical slot '" + slot_name +
                        "' assigned a value outside possible_values");
      }
      auto prev = prev_values.find(frame.service);
      if (prev != prev_values.end()) {
        for (const auto& [slot_name, values] : prev->second)
          if (state.slot_values.find(slot_name) == state.slot_values.end())
            report(t, "slot '" + slot_name + "' removed from the state of " +
                          frame.service + " (deletion is unsupported)");
      }
      prev_values[frame.service] = state.slot_values;
    }
  }
  return issues;
}

}  // namespace golomb

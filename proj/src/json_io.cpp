#include "golomb/json_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "golomb/errors.hpp"

namespace golomb {

using json = nlohmann::json;

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open file: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write file: " + path);
  out << content;
}

namespace {

json parse_root_array(const std::string& text, const std::string& origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(origin + ": JSON parse error: " + e.what());
  }
  if (!root.is_array())
    throw DataError(origin + ": expected a top-level JSON array");
  return root;
}

std::vector<std::string> string_list(const json& j, const std::string& ctx) {
  if (!j.is_array()) throw DataError(ctx + ": expected an array of strings");
  std::vector<std::string> out;
  for (const auto& v : j) {
    if (!v.is_string()) throw DataError(ctx + ": expected an array of strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

ServiceSchema parse_service(const json& j, const std::string& origin) {
  if (!j.is_object()) throw DataError(origin + ": schema entry is not an object");
  ServiceSchema svc;
  svc.service_name = j.value("service_name", std::string());
  if (svc.service_name.empty())
    throw DataError(origin + ": schema entry missing service_name");
  const std::string ctx = origin + ": service '" + svc.service_name + "'";
  svc.description = j.value("description", std::string());

  std::set<std::string> slot_names;
  for (const auto& js : j.value("slots", json::array())) {
    SlotSchema slot;
    slot.name = js.value("name", std::string());
    if (slot.name.empty()) throw DataError(ctx + ": slot missing name");
    slot.description = js.value("description", std::string());
    slot.is_categorical = js.value("is_categorical", false);
    if (js.contains("possible_values"))
      slot.possible_values =
          string_list(js["possible_values"], ctx + " slot '" + slot.name + "'");
    if (slot.is_categorical && slot.possible_values.empty())
      throw DataError(ctx + ": categorical slot '" + slot.name +
                      "' has no possible_values");
    if (!slot.is_categorical && !slot.possible_values.empty())
      throw DataError(ctx + ": non-categorical slot '" + slot.name +
                      "' lists possible_values");
    if (!slot_names.insert(slot.name).second)
      throw DataError(ctx + ": duplicate slot name '" + slot.name + "'");
    svc.slots.push_back(std::move(slot));
  }

  std::set<std::string> intent_names;
  for (const auto& ji : j.value("intents", json::array())) {
    IntentSchema intent;
    intent.name = ji.value("name", std::string());
    if (intent.name.empty()) throw DataError(ctx + ": intent missing name");
    intent.description = ji.value("description", std::string());
    if (ji.contains("required_slots"))
      intent.required_slots = string_list(
          ji["required_slots"], ctx + " intent '" + intent.name + "'");
    if (ji.contains("optional_slots"))
      intent.optional_slots = string_list(
          ji["optional_slots"], ctx + " intent '" + intent.name + "'");
    if (!intent_names.insert(intent.name).second)
      throw DataError(ctx + ": duplicate intent name '" + intent.name + "'");
    for (const auto& ref : intent.required_slots)
      if (slot_names.find(ref) == slot_names.end())
        throw DataError(ctx + ": intent '" + intent.name +
                        "' references unknown slot '" + ref + "'");
    for (const auto& ref : intent.optional_slots)
      if (slot_names.find(ref) == slot_names.end())
        throw DataError(ctx + ": intent '" + intent.name +
                        "' references unknown slot '" + ref + "'");
    svc.intents.push_back(std::move(intent));
  }
  return svc;
}

DialogueState parse_state(const json& j, const std::string& ctx) {
  DialogueState state;
  state.active_intent = j.value("active_intent", std::string(kNoneIntent));
  if (j.contains("requested_slots"))
    for (const auto& s : string_list(j["requested_slots"], ctx))
      state.requested_slots.insert(s);
  if (j.contains("slot_values")) {
    const json& sv = j["slot_values"];
    if (!sv.is_object()) throw DataError(ctx + ": slot_values must be an object");
    for (auto it = sv.begin(); it != sv.end(); ++it) {
      auto values = string_list(it.value(), ctx + " slot '" + it.key() + "'");
      if (values.empty())
        throw DataError(ctx + ": slot '" + it.key() + "' has an empty value list");
      state.slot_values[it.key()] = std::move(values);
    }
  }
  return state;
}

Dialogue parse_dialogue(const json& j, const std::string& origin) {
  if (!j.is_object()) throw DataError(origin + ": dialogue entry is not an object");
  Dialogue d;
  d.dialogue_id = j.value("dialogue_id", std::string());
  if (d.dialogue_id.empty())
    throw DataError(origin + ": dialogue entry missing dialogue_id");
  const std::string ctx = origin + ": dialogue " + d.dialogue_id;
  d.services = string_list(j.value("services", json::array()), ctx);

  const json& turns = j.value("turns", json::array());
  for (size_t t = 0; t < turns.size(); ++t) {
    const json& jt = turns[t];
    std::ostringstream tc;
    tc << ctx << " turn " << t;
    const std::string turn_ctx = tc.str();

    Turn turn;
    std::string speaker = jt.value("speaker", std::string());
    if (speaker == "USER")
      turn.speaker = Speaker::kUser;
    else if (speaker == "SYSTEM")
      turn.speaker = Speaker::kSystem;
    else
      throw DataError(turn_ctx + ": speaker must be USER or SYSTEM");
    turn.utterance = jt.value("utterance", std::string());

    if (t > 0 && d.turns.back().speaker == turn.speaker)
      throw DataError(turn_ctx + ": consecutive turns share speaker " + speaker);

    for (const auto& jf : jt.value("frames", json::array())) {
      Frame frame;
      frame.service = jf.value("service", std::string());
      if (frame.service.empty())
        throw DataError(turn_ctx + ": frame missing service");
      if (std::find(d.services.begin(), d.services.end(), frame.service) ==
          d.services.end())
        throw DataError(turn_ctx + ": frame service '" + frame.service +
                        "' not declared in the dialogue services list");
      for (const auto& js : jf.value("slots", json::array())) {
        SpanAnnotation span;
        span.slot = js.value("slot", std::string());
        span.start = js.value("start", 0);
        span.exclusive_end = js.value("exclusive_end", 0);
        if (span.start < 0 || span.start >= span.exclusive_end ||
            span.exclusive_end > static_cast<int>(turn.utterance.size()))
          throw DataError(turn_ctx + ": span for slot '" + span.slot +
                          "' out of bounds [" + std::to_string(span.start) +
                          ", " + std::to_string(span.exclusive_end) +
                          ") in an utterance of length " +
                          std::to_string(turn.utterance.size()));
        frame.spans.push_back(std::move(span));
      }
      if (jf.contains("state")) {
        if (turn.speaker == Speaker::kSystem)
          throw DataError(turn_ctx + ": SYSTEM turn carries a state");
        frame.state = parse_state(jf["state"], turn_ctx);
      } else if (turn.speaker == Speaker::kUser) {
        throw DataError(turn_ctx + ": USER frame for '" + frame.service +
                        "' has no state");
      }
      turn.frames.push_back(std::move(frame));
    }
    d.turns.push_back(std::move(turn));
  }
  return d;
}

json state_to_json(const DialogueState& state) {
  json j;
  j["active_intent"] = state.active_intent;
  j["requested_slots"] = json::array();
  for (const auto& s : state.requested_slots) j["requested_slots"].push_back(s);
  j["slot_values"] = json::object();
  for (const auto& [slot, values] : state.slot_values)
    j["slot_values"][slot] = values;
  return j;
}

}  // namespace

std::vector<ServiceSchema> parse_schemas(const std::string& json_text,
                                         const std::string& origin) {
  json root = parse_root_array(json_text, origin);
  std::vector<ServiceSchema> out;
  std::set<std::string> names;
  for (const auto& entry : root) {
    ServiceSchema svc = parse_service(entry, origin);
    if (!names.insert(svc.service_name).second)
      throw DataError(origin + ": duplicate service_name '" +
                      svc.service_name + "'");
    out.push_back(std::move(svc));
  }
  return out;
}

std::vector<Dialogue> parse_dialogues(const std::string& json_text,
                                      const std::string& origin) {
  json root = parse_root_array(json_text, origin);
  std::vector<Dialogue> out;
  for (const auto& entry : root) out.push_back(parse_dialogue(entry, origin));
  return out;
}

std::vector<ServiceSchema> load_schemas(const std::string& path) {
  return parse_schemas(read_text_file(path), path);
}

std::vector<Dialogue> load_dialogues(const std::string& path) {
  return parse_dialogues(read_text_file(path), path);
}

std::string schemas_to_json(const std::vector<ServiceSchema>& schemas) {
  json root = json::array();
  for (const auto& svc : schemas) {
    json j;
    j["service_name"] = svc.service_name;
    j["description"] = svc.description;
    j["slots"] = json::array();
    for (const auto& slot : svc.slots) {
      json js;
      js["name"] = slot.name;
      js["description"] = slot.description;
      js["is_categorical"] = slot.is_categorical;
      js["possible_values"] = slot.possible_values;
      j["slots"].push_back(std::move(js));
    }
    j["intents"] = json::array();
    for (const auto& intent : svc.intents) {
      json ji;
      ji["name"] = intent.name;
      ji["description"] = intent.description;
      ji["required_slots"] = intent.required_slots;
      ji["optional_slots"] = intent.optional_slots;
      j["intents"].push_back(std::move(ji));
    }
    root.push_back(std::move(j));
  }
  return root.dump(2);
}

std::string dialogues_to_json(const std::vector<Dialogue>& dialogues) {
  json root = json::array();
  for (const auto& d : dialogues) {
    json j;
    j["dialogue_id"] = d.dialogue_id;
    j["services"] = d.services;
    j["turns"] = json::array();
    for (const auto& turn : d.turns) {
      json jt;
      jt["speaker"] = turn.speaker == Speaker::kUser ? "USER" : "SYSTEM";
      jt["utterance"] = turn.utterance;
      jt["frames"] = json::array();
      for (const auto& frame : turn.frames) {
        json jf;
        jf["service"] = frame.service;
        jf["slots"] = json::array();
        for (const auto& span : frame.spans) {
          json js;
          js["slot"] = span.slot;
          js["start"] = span.start;
          js["exclusive_end"] = span.exclusive_end;
          jf["slots"].push_back(std::move(js));
        }
        if (frame.state) jf["state"] = state_to_json(*frame.state);
        jt["frames"].push_back(std::move(jf));
      }
      j["turns"].push_back(std::move(jt));
    }
    root.push_back(std::move(j));
  }
  return root.dump(2);
}

void save_schemas(const std::vector<ServiceSchema>& schemas,
                  const std::string& path) {
  write_text_file(path, schemas_to_json(schemas));
}

void save_dialogues(const std::vector<Dialogue>& dialogues,
                    const std::string& path) {
  write_text_file(path, dialogues_to_json(dialogues));
}

}  // namespace golomb

#include "doctest.h"

#include <cstdio>
#include <string>

#include "golomb/errors.hpp"
#include "golomb/json_io.hpp"

using namespace golomb;

namespace {

const char* kSchemaJson = R"([
  {
    "service_name": "Flights_1",
    "description": "flight booking service",
    "slots": [
      {"name": "origin", "description": "city of departure",
       "is_categorical": false, "possible_values": []},
      {"name": "seating_class", "description": "cabin class",
       "is_categorical": true,
       "possible_values": ["economy", "business", "first"]}
    ],
    "intents": [
      {"name": "SearchFlight", "description": "find a flight",
       "required_slots": ["origin"], "optional_slots": ["seating_class"]}
    ]
  }
])";

const char* kDialogueJson = R"([
  {
    "dialogue_id": "f_0001",
    "services": ["Flights_1"],
    "turns": [
      {"speaker": "SYSTEM", "utterance": "How can I help?",
       "frames": [{"service": "Flights_1", "slots": []}]},
      {"speaker": "USER", "utterance": "A flight from Kyiv please",
       "frames": [{"service": "Flights_1",
                   "slots": [{"slot": "origin", "start": 14, "exclusive_end": 18}],
                   "state": {"active_intent": "SearchFlight",
                             "requested_slots": [],
                             "slot_values": {"origin": ["Kyiv"]}}}]}
    ]
  }
])";

}  // namespace

TEST_CASE("parse_schemas maps fields") {
  auto schemas = parse_schemas(kSchemaJson);
  REQUIRE(schemas.size() == 1);
  const ServiceSchema& s = schemas[0];
  CHECK(s.service_name == "Flights_1");
  REQUIRE(s.slots.size() == 2);
  CHECK_FALSE(s.slots[0].is_categorical);
  CHECK(s.slots[1].is_categorical);
  CHECK(s.slots[1].possible_values.size() == 3);
  REQUIRE(s.intents.size() == 1);
  CHECK(s.intents[0].required_slots == std::vector<std::string>{"origin"});
}

TEST_CASE("parse_schemas rejects invariant violations") {
  SUBCASE("categorical slot with empty possible_values") {
    std::string bad = R"([{"service_name": "S", "description": "d",
      "slots": [{"name": "bad_slot", "description": "x",
                 "is_categorical": true, "possible_values": []}],
      "intents": []}])";
    CHECK_THROWS_WITH_AS(parse_schemas(bad),
                         doctest::Contains("bad_slot"), DataError);
  }
  SUBCASE("duplicate slot name") {
    std::string bad = R"([{"service_name": "S", "description": "d",
      "slots": [
        {"name": "a", "description": "x", "is_categorical": false, "possible_values": []},
        {"name": "a", "description": "y", "is_categorical": false, "possible_values": []}],
      "intents": []}])";
    CHECK_THROWS_AS(parse_schemas(bad), DataError);
  }
  SUBCASE("intent referencing unknown slot") {
    std::string bad = R"([{"service_name": "S", "description": "d",
      "slots": [],
      "intents": [{"name": "I", "description": "x",
                   "required_slots": ["ghost"], "optional_slots": []}]}])";
    CHECK_THROWS_AS(parse_schemas(bad), DataError);
  }
  SUBCASE("malformed json") {
    CHECK_THROWS_AS(parse_schemas("[{"), DataError);
  }
}

TEST_CASE("parse_dialogues maps fields and validates spans") {
  auto dialogues = parse_dialogues(kDialogueJson);
  REQUIRE(dialogues.size() == 1);
  const Dialogue& d = dialogues[0];
  CHECK(d.dialogue_id == "f_0001");
  REQUIRE(d.turns.size() == 2);
  CHECK(d.turns[0].speaker == Speaker::kSystem);
  CHECK_FALSE(d.turns[0].frames[0].state.has_value());
  REQUIRE(d.turns[1].frames[0].state.has_value());
  CHECK(d.turns[1].frames[0].state->active_intent == "SearchFlight");
  REQUIRE(d.turns[1].frames[0].spans.size() == 1);
  CHECK(d.turns[1].utterance.substr(14, 4) == "Kyiv");
}

TEST_CASE("parse_dialogues rejects structural errors") {
  SUBCASE("span beyond utterance length") {
    std::string bad = R"([{"dialogue_id": "bad_span", "services": ["S"],
      "turns": [{"speaker": "USER", "utterance": "hi",
        "frames": [{"service": "S",
          "slots": [{"slot": "x", "start": 0, "exclusive_end": 99}],
          "state": {"active_intent": "NONE", "requested_slots": [],
                    "slot_values": {}}}]}]}])";
    CHECK_THROWS_WITH_AS(parse_dialogues(bad),
                         doctest::Contains("bad_span"), DataError);
  }
  SUBCASE("frame service not declared") {
    std::string bad = R"([{"dialogue_id": "d", "services": ["A"],
      "turns": [{"speaker": "USER", "utterance": "hi",
        "frames": [{"service": "B", "slots": [],
          "state": {"active_intent": "NONE", "requested_slots": [],
                    "slot_values": {}}}]}]}])";
    CHECK_THROWS_AS(parse_dialogues(bad), DataError);
  }
}

TEST_CASE("serialize then reparse is structurally equal") {
  auto schemas = parse_schemas(kSchemaJson);
  auto schemas2 = parse_schemas(schemas_to_json(schemas));
  REQUIRE(schemas2.size() == schemas.size());
  CHECK(schemas2[0].service_name == schemas[0].service_name);
  CHECK(schemas2[0].slots[1].possible_values ==
        schemas[0].slots[1].possible_values);
  CHECK(schemas2[0].intents[0].optional_slots ==
        schemas[0].intents[0].optional_slots);

  auto dialogues = parse_dialogues(kDialogueJson);
  auto dialogues2 = parse_dialogues(dialogues_to_json(dialogues));
  REQUIRE(dialogues2.size() == 1);
  CHECK(dialogues2[0].dialogue_id == dialogues[0].dialogue_id);
  REQUIRE(dialogues2[0].turns.size() == dialogues[0].turns.size());
  CHECK(dialogues2[0].turns[1].utterance == dialogues[0].turns[1].utterance);
  CHECK(*dialogues2[0].turns[1].frames[0].state ==
        *dialogues[0].turns[1].frames[0].state);
  CHECK(dialogues2[0].turns[1].frames[0].spans[0].exclusive_end == 18);
}

TEST_CASE("unknown SGD fields are ignored on load") {
  std::string extra = R"([{"dialogue_id": "d", "services": ["S"],
    "turns": [{"speaker": "USER", "utterance": "hi",
      "frames": [{"service": "S", "slots": [], "actions": [{"act": "INFORM"}],
        "service_call": {"method": "m"},
        "state": {"active_intent": "NONE", "requested_slots": [],
                  "slot_values": {}}}]}]}])";
  auto dialogues = parse_dialogues(extra);
  CHECK(dialogues.size() == 1);
}

TEST_CASE("file round trip") {
  std::string dir = "json_io_test_tmp";
  std::string spath = dir + "_schema.json";
  std::string dpath = dir + "_dialogues.json";
  save_schemas(parse_schemas(kSchemaJson), spath);
  save_dialogues(parse_dialogues(kDialogueJson), dpath);
  CHECK(load_schemas(spath).size() == 1);
  CHECK(load_dialogues(dpath).size() == 1);
  std::remove(spath.c_str());
  std::remove(dpath.c_str());

  CHECK_THROWS_AS(load_schemas("does_not_exist.json"), ConfigError);
}

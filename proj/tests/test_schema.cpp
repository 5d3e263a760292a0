#include "doctest.h"

#include "golomb/schema.hpp"

using namespace golomb;

namespace {

ServiceSchema toy_service() {
  ServiceSchema s;
  s.service_name = "Cabs_1";
  s.description = "ride hailing";
  s.slots.push_back({"city", "destination city", false, {}});
  s.slots.push_back({"ride", "kind of ride", true, {"pool", "regular"}});
  s.intents.push_back({"BookCab", "order a cab", {"city"}, {"ride"}});
  return s;
}

}  // namespace

TEST_CASE("compute_state_update emits only new or changed keys") {
  SlotValueMap prev;
  SlotValueMap cur{{"city", {"SF"}}};
  StateUpdate up = compute_state_update(prev, cur);
  CHECK(up.changed == SlotValueMap{{"city", {"SF"}}});

  prev = {{"city", {"SF"}}};
  cur = {{"city", {"SF"}}, {"time", {"7pm"}}};
  up = compute_state_update(prev, cur);
  CHECK(up.changed == SlotValueMap{{"time", {"7pm"}}});

  prev = {{"city", {"SF"}}};
  cur = {{"city", {"LA"}}};
  up = compute_state_update(prev, cur);
  CHECK(up.changed == SlotValueMap{{"city", {"LA"}}});
}

TEST_CASE("compute_state_update never emits deletions") {
  SlotValueMap prev{{"city", {"SF"}}, {"time", {"7pm"}}};
  SlotValueMap cur{{"city", {"SF"}}};
  StateUpdate up = compute_state_update(prev, cur);
  CHECK(up.changed.empty());
}

TEST_CASE("compute_state_update of a state with itself is empty") {
  SlotValueMap s{{"a", {"1", "one"}}, {"b", {"2"}}};
  CHECK(compute_state_update(s, s).changed.empty());
  CHECK(compute_state_update({}, {}).changed.empty());
}

TEST_CASE("apply_state_update inserts and overwrites") {
  SlotValueMap state;
  CHECK(apply_state_update(state, StateUpdate{{{"a", {"1"}}}}) ==
        SlotValueMap{{"a", {"1"}}});

  state = {{"a", {"1"}}};
  CHECK(apply_state_update(state, StateUpdate{{{"a", {"2"}}}}) ==
        SlotValueMap{{"a", {"2"}}});
  CHECK(apply_state_update(state, StateUpdate{}) == state);
}

TEST_CASE("update round trip reconstructs the current state") {
  SlotValueMap prev{{"city", {"SF"}}, {"ride", {"pool"}}};
  SlotValueMap cur{{"city", {"LA"}}, {"ride", {"pool"}}, {"time", {"7 pm"}}};
  StateUpdate up = compute_state_update(prev, cur);
  CHECK(apply_state_update(prev, up) == cur);
}

TEST_CASE("validate_dialogue flags schema inconsistencies") {
  ServiceSchema svc = toy_service();
  Dialogue d;
  d.dialogue_id = "d1";
  d.services = {"Cabs_1"};

  Turn sys;
  sys.speaker = Speaker::kSystem;
  sys.utterance = "how can I help";
  sys.frames.push_back({"Cabs_1", std::nullopt, {}});

  Turn user;
  user.speaker = Speaker::kUser;
  user.utterance = "a pool ride to Berkeley";
  DialogueState st;
  st.active_intent = "BookCab";
  st.slot_values = {{"ride", {"pool"}}, {"city", {"Berkeley"}}};
  Frame f;
  f.service = "Cabs_1";
  f.state = st;
  f.spans.push_back({"city", 15, 23});
  user.frames.push_back(f);

  d.turns = {sys, user};

  CHECK(validate_dialogue(d, {svc}).empty());

  SUBCASE("unknown slot name") {
    d.turns[1].frames[0].state->slot_values["bogus"] = {"x"};
    auto issues = validate_dialogue(d, {svc});
    REQUIRE(issues.size() == 1);
    CHECK(issues[0].find("bogus") != std::string::npos);
  }
  SUBCASE("categorical value outside possible_values") {
    d.turns[1].frames[0].state->slot_values["ride"] = {"luxury"};
    auto issues = validate_dialogue(d, {svc});
    REQUIRE(issues.size() == 1);
    CHECK(issues[0].find("ride") != std::string::npos);
  }
  SUBCASE("dontcare is always acceptable for categorical slots") {
    d.turns[1].frames[0].state->slot_values["ride"] = {kDontcare};
    CHECK(validate_dialogue(d, {svc}).empty());
  }
  SUBCASE("unknown intent") {
    d.turns[1].frames[0].state->active_intent = "FlyToMars";
    CHECK(validate_dialogue(d, {svc}).size() == 1);
  }
}

TEST_CASE("schema lookup helpers") {
  ServiceSchema svc = toy_service();
  CHECK(svc.find_slot("ride") != nullptr);
  CHECK(svc.find_slot("nope") == nullptr);
  CHECK(svc.find_intent("BookCab") != nullptr);
  CHECK(svc.find_intent("nope") == nullptr);

  std::vector<ServiceSchema> schemas{svc};
  CHECK(find_service(schemas, "Cabs_1") == &schemas[0]);
  CHECK(find_service(schemas, "Cabs_9") == nullptr);
}

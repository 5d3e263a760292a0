#include "doctest.h"

#include <cmath>
#include <string>
#include <vector>

#include "golomb/errors.hpp"
#include "golomb/metrics.hpp"

using namespace golomb;

namespace {

std::vector<ServiceSchema> toy_schemas() {
  ServiceSchema s;
  s.service_name = "Cabs_1";
  s.description = "ride hailing";
  s.slots.push_back({"city", "destination", false, {}});
  s.slots.push_back({"ride", "kind of ride", true, {"pool", "regular"}});
  s.intents.push_back({"BookCab", "order a cab", {}, {}});
  return {s};
}

TurnPrediction mk(const std::string& service, const DialogueState& gold,
                  const DialogueState& pred, int turn = 0) {
  TurnPrediction p;
  p.dialogue_id = "d";
  p.turn_index = turn;
  p.service = service;
  p.gold = gold;
  p.predicted = pred;
  return p;
}

DialogueState state(const SlotValueMap& sv, const std::string& intent = "NONE",
                    const std::set<std::string>& req = {}) {
  DialogueState st;
  st.active_intent = intent;
  st.requested_slots = req;
  st.slot_values = sv;
  return st;
}

}  // namespace

TEST_CASE("fuzzy_score is normalized Levenshtein similarity") {
  CHECK(fuzzy_score("7pm", "7pm") == 1.0);
  CHECK(fuzzy_score("7 pm", "7pm") == 0.75);  // distance 1, max length 4
  CHECK(fuzzy_score("", "x") == 0.0);
  CHECK(fuzzy_score("x", "") == 0.0);
  CHECK(fuzzy_score("", "") == 1.0);
  CHECK(fuzzy_score("abc", "abd") == doctest::Approx(2.0 / 3));

  SUBCASE("case and whitespace runs are normalized away") {
    CHECK(fuzzy_score("San  Francisco", "san francisco") == 1.0);
    CHECK(fuzzy_score("  7pm ", "7pm") == 1.0);
  }
  SUBCASE("symmetry and identity") {
    const char* samples[] = {"a", "ab", "7 pm", "San Francisco", ""};
    for (const char* a : samples) {
      CHECK(fuzzy_score(a, a) == 1.0);
      for (const char* b : samples)
        CHECK(fuzzy_score(a, b) == fuzzy_score(b, a));
    }
  }
}

TEST_CASE("active intent accuracy counts exact string matches") {
  auto schemas = toy_schemas();
  std::vector<TurnPrediction> preds{
      mk("Cabs_1", state({}, "BookCab"), state({}, "BookCab")),
      mk("Cabs_1", state({}, "NONE"), state({}, "BookCab"), 1)};
  CHECK(active_intent_accuracy(preds) == 0.5);

  preds[1].predicted.active_intent = "NONE";
  CHECK(active_intent_accuracy(preds) == 1.0);

  CHECK_THROWS_AS(active_intent_accuracy({}), DataError);
}

TEST_CASE("requested slots F1 is macro averaged with empty-empty = 1") {
  SUBCASE("gold {a,b} vs predicted {a} gives 2/3") {
    std::vector<TurnPrediction> preds{mk(
        "Cabs_1", state({}, "NONE", {"a", "b"}), state({}, "NONE", {"a"}))};
    CHECK(requested_slots_f1(preds) == doctest::Approx(2.0 / 3));
  }
  SUBCASE("both empty scores 1") {
    std::vector<TurnPrediction> preds{mk("Cabs_1", state({}), state({}))};
    CHECK(requested_slots_f1(preds) == 1.0);
  }
  SUBCASE("disjoint non-empty sets score 0") {
    std::vector<TurnPrediction> preds{
        mk("Cabs_1", state({}, "NONE", {"a"}), state({}, "NONE", {"b"}))};
    CHECK(requested_slots_f1(preds) == 0.0);
  }
  SUBCASE("frames average") {
    std::vector<TurnPrediction> preds{
        mk("Cabs_1", state({}, "NONE", {"a"}), state({}, "NONE", {"a"})),
        mk("Cabs_1", state({}, "NONE", {"a"}), state({}, "NONE", {"b"}), 1)};
    CHECK(requested_slots_f1(preds) == 0.5);
  }
}

TEST_CASE("average goal accuracy scores gold-assigned slots") {
  auto schemas = toy_schemas();

  SUBCASE("perfect predictions score 1") {
    DialogueState g = state({{"city", {"Kyiv"}}, {"ride", {"pool"}}});
    std::vector<TurnPrediction> preds{mk("Cabs_1", g, g)};
    CHECK(average_goal_accuracy(preds, schemas) == 1.0);
  }
  SUBCASE("missing prediction scores 0 for that pair") {
    std::vector<TurnPrediction> preds{
        mk("Cabs_1", state({{"city", {"Kyiv"}}}), state({}))};
    CHECK(average_goal_accuracy(preds, schemas) == 0.0);
  }
  SUBCASE("non-categorical slots earn fuzzy credit") {
    std::vector<TurnPrediction> preds{mk("Cabs_1",
                                         state({{"city", {"7 pm"}}}),
                                         state({{"city", {"7pm"}}}))};
    CHECK(average_goal_accuracy(preds, schemas) == doctest::Approx(0.75));
  }
  SUBCASE("fuzzy takes the best over acceptable gold variants") {
    std::vector<TurnPrediction> preds{
        mk("Cabs_1", state({{"city", {"7 pm", "7pm"}}}),
           state({{"city", {"7pm"}}}))};
    CHECK(average_goal_accuracy(preds, schemas) == 1.0);
  }
  SUBCASE("categorical slots match exactly, dontcare only itself") {
    std::vector<TurnPrediction> preds{
        mk("Cabs_1", state({{"ride", {"dontcare"}}}),
           state({{"ride", {"pool"}}}))};
    CHECK(average_goal_accuracy(preds, schemas) == 0.0);
    preds[0].predicted.slot_values["ride"] = {"dontcare"};
    CHECK(average_goal_accuracy(preds, schemas) == 1.0);
  }
  SUBCASE("extra predicted slots do not hurt the average") {
    std::vector<TurnPrediction> preds{
        mk("Cabs_1", state({{"city", {"Kyiv"}}}),
           state({{"city", {"Kyiv"}}, {"ride", {"pool"}}}))};
    CHECK(average_goal_accuracy(preds, schemas) == 1.0);
  }
  SUBCASE("frames with no gold slots score 1 by convention") {
    std::vector<TurnPrediction> preds{mk("Cabs_1", state({}), state({}))};
    CHECK(average_goal_accuracy(preds, schemas) == 1.0);
  }
}

TEST_CASE("joint goal accuracy needs the whole frame right") {
  auto schemas = toy_schemas();
  DialogueState g = state({{"city", {"Kyiv"}}, {"ride", {"pool"}}});

  SUBCASE("all frames exact scores 1") {
    std::vector<TurnPrediction> preds{mk("Cabs_1", g, g)};
    CHECK(joint_goal_accuracy(preds, schemas) == 1.0);
    CHECK(joint_goal_accuracy(preds, schemas, /*strict=*/true) == 1.0);
  }
  SUBCASE("a wrong slot set zeroes the frame") {
    DialogueState wrong = state({{"city", {"Kyiv"}}});
    std::vector<TurnPrediction> preds{mk("Cabs_1", g, g),
                                      mk("Cabs_1", g, wrong, 1)};
    CHECK(joint_goal_accuracy(preds, schemas) == 0.5);
  }
  SUBCASE("fuzzy partial credit multiplies per-slot scores") {
    std::vector<TurnPrediction> preds{mk("Cabs_1",
                                         state({{"city", {"7 pm"}}}),
                                         state({{"city", {"7pm"}}}))};
    CHECK(joint_goal_accuracy(preds, schemas) == doctest::Approx(0.75));
    CHECK(joint_goal_accuracy(preds, schemas, /*strict=*/true) == 0.0);
  }
  SUBCASE("joint GA of 1 implies average GA of 1") {
    std::vector<TurnPrediction> preds{
        mk("Cabs_1", g, g),
        mk("Cabs_1", state({{"ride", {"regular"}}}),
           state({{"ride", {"regular"}}}), 1)};
    REQUIRE(joint_goal_accuracy(preds, schemas) == 1.0);
    CHECK(average_goal_accuracy(preds, schemas) == 1.0);
  }
}

TEST_CASE("domain_of strips the numeric service suffix") {
  CHECK(domain_of("Restaurants_2") == "Restaurants");
  CHECK(domain_of("Flights_11") == "Flights");
  CHECK(domain_of("Banks") == "Banks");
  CHECK(domain_of("My_Service_1") == "My_Service");
}

TEST_CASE("build_report breaks metrics down by service, domain and slot") {
  auto schemas = toy_schemas();
  DialogueState g = state({{"city", {"Kyiv"}}}, "BookCab");

  std::vector<TurnPrediction> preds;
  for (int i = 0; i < 100; ++i) {
    DialogueState pred = g;
    if (i < 12) pred.slot_values["city"] = {"Lviv"};  // wrong value
    preds.push_back(mk("Cabs_1", g, pred, i));
  }

  SUBCASE("single-domain breakdown equals the overall numbers") {
    MetricReport r = build_report(preds, schemas, {"Cabs_1"});
    REQUIRE(r.per_service.size() == 1);
    REQUIRE(r.per_domain.size() == 1);
    CHECK(r.per_domain[0].name == "Cabs");
    CHECK_FALSE(r.per_domain[0].unseen);
    CHECK(r.per_service[0].joint_goal_accuracy ==
          doctest::Approx(r.joint_goal_accuracy));
    CHECK(r.frames == 100);
  }
  SUBCASE("a slot wrong 12 times in 100 has error rate 0.12") {
    MetricReport r = build_report(preds, schemas, {"Cabs_1"});
    REQUIRE(r.slot_error_rates.size() == 1);
    const SlotErrorRate& ser = r.slot_error_rates[0];
    CHECK(ser.slot == "city");
    CHECK(ser.occurrences == 100);
    CHECK(ser.errors == 12);
    CHECK(ser.error_rate == doctest::Approx(0.12));
  }
  SUBCASE("services outside the seen set are flagged unseen") {
    MetricReport r = build_report(preds, schemas, {"SomethingElse_1"});
    CHECK(r.per_service[0].unseen);
    CHECK(r.per_domain[0].unseen);
  }
  SUBCASE("slots sort by descending error rate") {
    auto schemas2 = toy_schemas();
    DialogueState g2 =
        state({{"city", {"Kyiv"}}, {"ride", {"pool"}}}, "BookCab");
    std::vector<TurnPrediction> preds2;
    for (int i = 0; i < 10; ++i) {
      DialogueState pred = g2;
      if (i < 7) pred.slot_values["ride"] = {"regular"};
      if (i < 2) pred.slot_values["city"] = {"Lviv"};
      preds2.push_back(mk("Cabs_1", g2, pred, i));
    }
    MetricReport r = build_report(preds2, schemas2, {"Cabs_1"});
    REQUIRE(r.slot_error_rates.size() == 2);
    CHECK(r.slot_error_rates[0].slot == "ride");
    CHECK(r.slot_error_rates[0].error_rate == doctest::Approx(0.7));
    CHECK(r.slot_error_rates[1].slot == "city");
    CHECK(r.slot_error_rates[1].error_rate == doctest::Approx(0.2));
  }
  SUBCASE("report serializes to json and text") {
    MetricReport r = build_report(preds, schemas, {"Cabs_1"});
    nlohmann::json j = report_to_json(r);
    CHECK(j.contains("joint_goal_accuracy"));
    CHECK(j.contains("per_domain"));
    std::string text = report_to_text(r);
    CHECK(text.find("joint") != std::string::npos);
  }
}

TEST_CASE("collect_predictions pairs gold and predicted frames") {
  Dialogue gold;
  gold.dialogue_id = "d1";
  gold.services = {"Cabs_1"};
  Turn user;
  user.speaker = Speaker::kUser;
  user.utterance = "to Kyiv";
  Frame f;
  f.service = "Cabs_1";
  f.state = state({{"city", {"Kyiv"}}});
  user.frames.push_back(f);
  gold.turns = {user};

  Dialogue predicted = gold;
  predicted.turns[0].frames[0].state = state({{"city", {"Lviv"}}});

  auto preds = collect_predictions(gold, predicted);
  REQUIRE(preds.size() == 1);
  CHECK(preds[0].gold.slot_values.at("city")[0] == "Kyiv");
  CHECK(preds[0].predicted.slot_values.at("city")[0] == "Lviv");
  CHECK(preds[0].service == "Cabs_1");

  SUBCASE("structure mismatches are rejected") {
    Dialogue broken = predicted;
    broken.turns[0].frames.clear();
    CHECK_THROWS_AS(collect_predictions(gold, broken), DataError);
  }
  SUBCASE("the vector overload matches by dialogue id") {
    std::vector<Dialogue> gs{gold};
    std::vector<Dialogue> ps{predicted};
    auto all = collect_predictions(gs, ps);
    CHECK(all.size() == 1);
  }
}

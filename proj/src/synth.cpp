#include "golomb/synth.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

#include "golomb/errors.hpp"
#include "golomb/metrics.hpp"
#include "golomb/rng.hpp"

namespace golomb {
namespace {

// ---------------------------------------------------------------------------
// Closed lexicons. Multi-word values are deliberate: they exercise span
// extraction across token boundaries.
// ---------------------------------------------------------------------------

using Strings = std::vector<std::string>;

const Strings kCities = {"new york", "san jose", "london",  "paris",
                         "tokyo",    "berlin",   "oakland", "madrid",
                         "sydney",   "austin",   "chicago", "boston"};
const Strings kTimes = {"7 pm",         "noon",          "9 am",
                        "half past six", "8 in the evening", "10 am",
                        "midnight",     "5 pm",          "quarter to five"};
const Strings kDates = {"march 3rd",   "next friday",  "tomorrow",
                        "july 14th",   "this weekend", "october 1st",
                        "next monday", "the 2nd of may"};
const Strings kVenueNames = {"blue lotus",  "golden gate grill", "casa verde",
                             "the iron door", "lucky star",     "river house",
                             "sunset palace", "old oak inn"};
const Strings kSmallCounts = {"1", "2", "3", "4", "5", "6"};
const Strings kCuisines = {"mexican", "italian",  "thai",  "indian",
                           "french",  "greek",    "japanese", "ethiopian"};
const Strings kRideTypes = {"standard", "premium", "shared", "luxury"};
const Strings kPriceRanges = {"cheap", "moderate", "expensive",
                              "very expensive"};
const Strings kStarRatings = {"1", "2", "3", "4", "5"};
const Strings kYesNo = {"yes", "no"};
const Strings kAirlines = {"delta",  "united",   "lufthansa",
                           "qantas", "emirates", "klm"};
const Strings kSeatClasses = {"economy", "premium economy", "business",
                              "first"};

// ---------------------------------------------------------------------------
// Domain concepts. Descriptions come in pools of four paraphrases; the seen
// split uses the first half, the unseen split the second half.
// ---------------------------------------------------------------------------

struct SlotConcept {
  std::string name;
  std::string phrase;  // surface form used inside utterances
  const Strings* lexicon;
  Strings descriptions;
};

struct IntentConcept {
  std::string name;
  std::string phrase;  // verb phrase used inside utterances
  Strings descriptions;
};

struct DomainConcept {
  std::string domain;
  Strings descriptions;
  std::vector<SlotConcept> slots;
  std::vector<IntentConcept> intents;
};

const std::vector<DomainConcept>& domain_concepts() {
  static const std::vector<DomainConcept> concepts = {
      {"Restaurants",
       {"restaurant search and table reservation service",
        "find and book restaurants in your city",
        "a service for discovering places to eat and reserving tables",
        "restaurant discovery and table booking provider"},
       {{"city", "city", &kCities,
         {"city to search for restaurants in",
          "which city the restaurant is in",
          "the city where you want to eat",
          "town or city for the restaurant search"}},
        {"cuisine", "cuisine", &kCuisines,
         {"type of cuisine served", "the kind of food or cuisine you prefer",
          "cuisine style of the restaurant", "which cuisine to look for"}},
        {"time", "time", &kTimes,
         {"time for the reservation", "what time to book the table",
          "preferred reservation time", "the time you plan to arrive"}},
        {"party_size", "party size", &kSmallCounts,
         {"number of people in the party", "how many seats to reserve",
          "party size for the booking", "count of guests attending"}},
        {"price_range", "price range", &kPriceRanges,
         {"price range of the restaurant", "how expensive the place is",
          "budget level for the meal", "the price range you can afford"}},
        {"restaurant_name", "restaurant name", &kVenueNames,
         {"name of the restaurant", "which restaurant to book",
          "the restaurant name to reserve at", "name of the place to eat"}}},
       {{"FindRestaurant", "find a restaurant",
         {"search for a restaurant to eat at",
          "look up restaurants matching your taste", "find a place to eat",
          "discover restaurants in a city"}},
        {"ReserveTable", "reserve a table",
         {"book a table at a restaurant", "make a restaurant reservation",
          "reserve seats for a meal", "secure a table for your party"}},
        {"GetRestaurantInfo", "get restaurant details",
         {"get details about a restaurant", "look up restaurant information",
          "ask for facts about a place to eat",
          "retrieve information on a restaurant"}}}},
      {"Hotels",
       {"hotel search and room booking service",
        "find hotels and reserve rooms",
        "a service for locating hotels and booking stays",
        "hotel discovery and reservation provider"},
       {{"city", "city", &kCities,
         {"city to find a hotel in", "which city to stay in",
          "the city for the hotel search", "destination city for the stay"}},
        {"star_rating", "star rating", &kStarRatings,
         {"star rating of the hotel", "how many stars the hotel has",
          "hotel quality in stars", "the star class of the property"}},
        {"check_in", "check in date", &kDates,
         {"date of check in", "when the stay begins",
          "the day you arrive at the hotel", "check in date for the booking"}},
        {"nights", "number of nights", &kSmallCounts,
         {"number of nights to stay", "how many nights to book",
          "length of the stay in nights", "nights count for the reservation"}},
        {"hotel_name", "hotel name", &kVenueNames,
         {"name of the hotel", "which hotel to book",
          "the hotel name to reserve at", "name of the property to stay in"}},
        {"breakfast", "breakfast option", &kYesNo,
         {"whether breakfast is included", "if the rate includes breakfast",
          "breakfast included or not", "does the booking come with breakfast"}}},
       {{"FindHotel", "find a hotel",
         {"search for a hotel to stay at", "look up hotels in a city",
          "find a place to stay", "discover hotels matching your needs"}},
        {"BookRoom", "book a room",
         {"reserve a hotel room", "make a hotel booking",
          "book a stay at a hotel", "secure a room for your trip"}},
        {"GetHotelInfo", "get hotel details",
         {"get details about a hotel", "look up hotel information",
          "ask for facts about a property", "retrieve information on a hotel"}}}},
      {"Rides",
       {"on demand cab and ride hailing service",
        "order taxis and schedule rides",
        "a service for booking cars with a driver",
        "ride hailing and trip scheduling provider"},
       {{"destination", "destination", &kCities,
         {"destination of the ride", "where the ride should go",
          "the place you are heading to", "drop off destination for the trip"}},
        {"pickup_time", "pickup time", &kTimes,
         {"time of the pickup", "when the car should arrive",
          "the pickup time for the ride", "what time to send the driver"}},
        {"ride_type", "ride type", &kRideTypes,
         {"type of ride to order", "the class of car to send",
          "ride category to book", "which kind of ride you want"}},
        {"passengers", "passenger count", &kSmallCounts,
         {"number of passengers", "how many people will ride",
          "passenger count for the trip", "seats needed in the car"}},
        {"pickup_city", "pickup city", &kCities,
         {"city of the pickup", "which city to start the ride in",
          "the city where the trip begins", "pickup location city"}},
        {"driver_name", "driver name", &kVenueNames,
         {"name of the preferred driver", "which driver to request",
          "the driver name to ask for", "preferred driver for the ride"}}},
       {{"OrderRide", "order a cab",
         {"order a cab right away", "request an immediate ride",
          "hail a car now", "get a taxi to your location"}},
        {"ScheduleRide", "schedule a ride",
         {"schedule a ride for later", "book a car in advance",
          "plan a future trip with a driver", "arrange a ride ahead of time"}},
        {"GetRideEstimate", "get a fare estimate",
         {"estimate the fare of a trip", "get the price of a ride",
          "check how much a trip costs", "ask for a ride cost estimate"}}}},
      {"Flights",
       {"flight search and ticket booking service",
        "find flights and buy tickets",
        "a service for comparing airlines and reserving seats",
        "flight discovery and ticketing provider"},
       {{"origin", "origin", &kCities,
         {"city the flight departs from", "where the trip starts",
          "origin city of the flight", "departure city for the journey"}},
        {"destination", "destination", &kCities,
         {"city the flight arrives in", "where the trip ends",
          "destination city of the flight", "arrival city for the journey"}},
        {"airline", "airline", &kAirlines,
         {"airline operating the flight", "which carrier to fly with",
          "the airline you prefer", "carrier for the trip"}},
        {"date", "travel date", &kDates,
         {"date of the flight", "when to fly",
          "the day of departure", "travel date for the trip"}},
        {"seat_class", "seat class", &kSeatClasses,
         {"cabin class of the seat", "which seat class to book",
          "the class of service to fly", "seat category for the ticket"}},
        {"passengers", "passenger count", &kSmallCounts,
         {"number of travelers", "how many tickets to buy",
          "passenger count for the flight", "seats needed on the plane"}}},
       {{"SearchFlights", "search for flights",
         {"search for available flights", "look up flights between cities",
          "find flights for a trip", "compare flights on a route"}},
        {"BookFlight", "book a flight",
         {"buy a ticket for a flight", "reserve seats on a plane",
          "book air travel", "purchase a flight ticket"}},
        {"CheckFlightStatus", "check a flight status",
         {"check whether a flight is on time", "get the status of a flight",
          "look up flight delay information", "see if a plane is delayed"}}}},
  };
  return concepts;
}

const Strings& pool_for(const SynthConfig& cfg, const std::string& key,
                        const Strings& builtin) {
  auto it = cfg.description_paraphrase_pool.find(key);
  if (it != cfg.description_paraphrase_pool.end() && !it->second.empty())
    return it->second;
  return builtin;
}

// Seen services read from the first half of a pool, unseen ones from the
// second; a one-entry pool degenerates to shared descriptions.
const std::string& pick_description(const Strings& pool, bool unseen,
                                    int instance,
                                    std::vector<std::string>* warnings,
                                    const std::string& what) {
  int n = static_cast<int>(pool.size());
  if (n == 1) {
    if (unseen && warnings != nullptr)
      warnings->push_back("paraphrase pool for " + what +
                          " has a single entry; seen and unseen descriptions "
                          "are identical");
    return pool[0];
  }
  int half = n / 2;
  int begin = unseen ? half : 0;
  int len = unseen ? n - half : half;
  return pool[static_cast<size_t>(begin + instance % len)];
}

struct BuiltSlot {
  SlotSchema schema;
  std::string phrase;
  const Strings* lexicon;
};

struct BuiltService {
  ServiceSchema schema;
  std::vector<std::string> phrases;         // per slot
  std::vector<const Strings*> lexicons;     // per slot
  std::vector<std::string> intent_phrases;  // per intent
};

BuiltService build_service(const SynthConfig& cfg, int concept_index,
                           int instance, bool unseen, Rng& rng,
                           std::vector<std::string>* warnings) {
  const DomainConcept& dc =
      domain_concepts()[static_cast<size_t>(concept_index)];
  BuiltService out;
  out.schema.service_name = dc.domain + "_" + std::to_string(instance + 1);
  out.schema.description =
      pick_description(pool_for(cfg, dc.domain, dc.descriptions), unseen,
                       instance, warnings, "service " + dc.domain);

  int n_cat = static_cast<int>(
      std::lround(cfg.categorical_fraction * cfg.slots_per_service));
  for (int i = 0; i < cfg.slots_per_service; ++i) {
    const SlotConcept& sc = dc.slots[static_cast<size_t>(i) % dc.slots.size()];
    SlotSchema slot;
    slot.name = sc.name;
    int repeat = i / static_cast<int>(dc.slots.size());
    if (repeat > 0) slot.name += "_" + std::to_string(repeat + 1);
    slot.description = pick_description(
        pool_for(cfg, dc.domain + "." + sc.name, sc.descriptions), unseen,
        instance, warnings, "slot " + dc.domain + "." + sc.name);
    slot.is_categorical = i < n_cat;
    if (slot.is_categorical) {
      int k = std::min<int>(cfg.values_per_categorical,
                            static_cast<int>(sc.lexicon->size()));
      std::vector<int> order(sc.lexicon->size());
      for (size_t v = 0; v < order.size(); ++v) order[v] = static_cast<int>(v);
      rng.shuffle(order);
      order.resize(static_cast<size_t>(k));
      std::sort(order.begin(), order.end());
      for (int v : order)
        slot.possible_values.push_back((*sc.lexicon)[static_cast<size_t>(v)]);
    }
    out.phrases.push_back(sc.phrase);
    out.lexicons.push_back(sc.lexicon);
    out.schema.slots.push_back(std::move(slot));
  }

  for (int i = 0; i < cfg.intents_per_service; ++i) {
    const IntentConcept& ic =
        dc.intents[static_cast<size_t>(i) % dc.intents.size()];
    IntentSchema intent;
    intent.name = ic.name;
    int repeat = i / static_cast<int>(dc.intents.size());
    if (repeat > 0) intent.name += "_" + std::to_string(repeat + 1);
    intent.description = pick_description(
        pool_for(cfg, dc.domain + ".intent." + ic.name, ic.descriptions),
        unseen, instance, warnings, "intent " + dc.domain + "." + ic.name);
    for (const SlotSchema& s : out.schema.slots)
      intent.optional_slots.push_back(s.name);
    out.intent_phrases.push_back(ic.phrase);
    out.schema.intents.push_back(std::move(intent));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Utterance templates. %S = slot phrase, %V = value, %I = intent phrase.
// ---------------------------------------------------------------------------

const Strings kIntentTmpl = {"i want to %I.", "i need to %I.",
                             "can you help me %I?", "please help me %I."};
const Strings kProvideTmpl = {"the %S should be %V.", "make the %S %V.",
                              "i would like the %S to be %V.",
                              "set the %S to %V."};
const Strings kDontcareTmpl = {"any %S works for me.",
                               "i do not care about the %S.",
                               "the %S does not matter."};
const Strings kRequestTmpl = {"what is the %S?", "can you tell me the %S?",
                              "please tell me the %S."};
const Strings kConfirmTmpl = {"yes that works for the %S.",
                              "sounds good for the %S."};
const Strings kGreetTmpl = {"hello there.", "hi, good day."};
const Strings kAskTmpl = {"what %S would you like?",
                          "please give me the %S."};
const Strings kOfferTmpl = {"how about %V for the %S?",
                            "i suggest %V for the %S."};
const Strings kAckTmpl = {"okay.", "sure thing.", "got it.", "noted."};

const std::string& pick(const Strings& pool, Rng& rng) {
  return pool[static_cast<size_t>(rng.below(static_cast<int>(pool.size())))];
}

// Replaces the first occurrence; when out_start is given it receives the
// character interval of the inserted text.
void subst(std::string& text, const std::string& key, const std::string& value,
           int* out_start = nullptr, int* out_end = nullptr) {
  auto pos = text.find(key);
  if (pos == std::string::npos)
    throw InternalError("template is missing placeholder " + key);
  text.replace(pos, key.size(), value);
  if (out_start != nullptr) *out_start = static_cast<int>(pos);
  if (out_end != nullptr) *out_end = static_cast<int>(pos + value.size());
}

// Builds one utterance out of sentences, tracking span offsets of values.
struct UttBuilder {
  std::string text;
  std::vector<SpanAnnotation> spans;

  // The sentence may contain one %V; record_slot names the slot the span
  // belongs to (empty = no span recorded).
  void add(std::string sentence, const std::string& record_slot = "",
           const std::string& value = "") {
    int vs = -1, ve = -1;
    if (sentence.find("%V") != std::string::npos)
      subst(sentence, "%V", value, &vs, &ve);
    int base = static_cast<int>(text.size());
    if (!text.empty()) {
      text += ' ';
      base += 1;
    }
    text += sentence;
    if (!record_slot.empty()) {
      if (vs < 0) throw InternalError("span requested but no %V in template");
      spans.push_back(SpanAnnotation{record_slot, base + vs, base + ve});
    }
  }
};

struct Provide {
  int slot = 0;
  bool dontcare = false;
  bool via_offer = false;  // value is uttered by the system, user confirms
  std::string value;
};

struct TurnPlan {
  bool greet = false;
  std::optional<int> set_intent;  // index into service intents
  std::vector<Provide> provides;
  std::vector<int> requests;
};

Dialogue gen_dialogue(const std::string& id, const BuiltService& first,
                      const BuiltService* second, const SynthConfig& cfg,
                      std::uint64_t seed) {
  Rng rng(seed);
  Dialogue d;
  d.dialogue_id = id;
  d.services.push_back(first.schema.service_name);
  if (second != nullptr) d.services.push_back(second->schema.service_name);

  int total = cfg.turns_per_dialogue;
  int first_len = second != nullptr ? (total + 1) / 2 : total;

  // Per-service accumulated gold state and which slots are set so far.
  std::map<std::string, DialogueState> states;

  bool greet = total >= 2 && rng.uniform() < 0.2;
  int seg_start = 0;

  for (int u = 0; u < total; ++u) {
    const BuiltService& svc = (u < first_len) ? first : *second;
    if (u == first_len && second != nullptr) seg_start = first_len;
    bool first_of_seg = u == seg_start;
    DialogueState& state = states[svc.schema.service_name];
    const std::vector<SlotSchema>& slots = svc.schema.slots;

    // --- plan the user turn ---
    TurnPlan plan;
    if (u == 0 && greet) {
      plan.greet = true;
    } else {
      if (first_of_seg || (u == 1 && greet && seg_start == 0))
        plan.set_intent =
            rng.below(static_cast<int>(svc.schema.intents.size()));

      std::vector<int> unset, set;
      for (int i = 0; i < static_cast<int>(slots.size()); ++i) {
        if (state.slot_values.count(slots[i].name) > 0)
          set.push_back(i);
        else
          unset.push_back(i);
      }

      int n_provide = 1 + (rng.uniform() < 0.35 ? 1 : 0);
      bool offered = false;  // the system turn voices at most one offer
      for (int p = 0; p < n_provide; ++p) {
        Provide pr;
        bool override_slot =
            !set.empty() && rng.uniform() < 0.2;
        if (override_slot) {
          int pos = rng.below(static_cast<int>(set.size()));
          pr.slot = set[static_cast<size_t>(pos)];
          set.erase(set.begin() + pos);
        } else if (!unset.empty()) {
          int pos = rng.below(static_cast<int>(unset.size()));
          pr.slot = unset[static_cast<size_t>(pos)];
          unset.erase(unset.begin() + pos);
        } else {
          break;
        }
        const SlotSchema& slot = slots[static_cast<size_t>(pr.slot)];
        const std::string* prev_value = nullptr;
        auto pv = state.slot_values.find(slot.name);
        if (pv != state.slot_values.end()) prev_value = &pv->second[0];

        pr.dontcare = prev_value == nullptr && rng.uniform() < 0.15;
        if (!pr.dontcare) {
          const Strings& values =
              slot.is_categorical
                  ? slot.possible_values
                  : *svc.lexicons[static_cast<size_t>(pr.slot)];
          if (prev_value != nullptr && values.size() < 2) continue;
          do {
            pr.value = values[static_cast<size_t>(
                rng.below(static_cast<int>(values.size())))];
          } while (prev_value != nullptr && pr.value == *prev_value);
          pr.via_offer = !offered && !slot.is_categorical && u > 0 &&
                         !first_of_seg && rng.uniform() < 0.25;
          offered |= pr.via_offer;
        }
        plan.provides.push_back(std::move(pr));
      }

      if (rng.uniform() < 0.3) {
        if (!unset.empty())
          plan.requests.push_back(
              unset[static_cast<size_t>(rng.below(static_cast<int>(unset.size())))]);
        else
          plan.requests.push_back(rng.below(static_cast<int>(slots.size())));
      }
    }

    // --- system turn preceding this user turn ---
    if (u > 0) {
      Turn sys;
      sys.speaker = Speaker::kSystem;
      UttBuilder sb;
      const Provide* offer = nullptr;
      for (const Provide& pr : plan.provides)
        if (pr.via_offer) {
          offer = &pr;
          break;
        }
      if (offer != nullptr) {
        const SlotSchema& slot = slots[static_cast<size_t>(offer->slot)];
        std::string sent = pick(kOfferTmpl, rng);
        subst(sent, "%S", svc.phrases[static_cast<size_t>(offer->slot)]);
        sb.add(std::move(sent), slot.name, offer->value);
      } else {
        std::vector<int> unset;
        for (int i = 0; i < static_cast<int>(slots.size()); ++i)
          if (state.slot_values.count(slots[i].name) == 0) unset.push_back(i);
        if (!unset.empty() && rng.uniform() < 0.5) {
          int slot_idx =
              unset[static_cast<size_t>(rng.below(static_cast<int>(unset.size())))];
          std::string sent = pick(kAskTmpl, rng);
          subst(sent, "%S", svc.phrases[static_cast<size_t>(slot_idx)]);
          sb.add(std::move(sent));
        } else {
          sb.add(pick(kAckTmpl, rng));
        }
      }
      sys.utterance = sb.text;
      if (!sb.spans.empty()) {
        Frame f;
        f.service = svc.schema.service_name;
        f.spans = std::move(sb.spans);
        sys.frames.push_back(std::move(f));
      }
      d.turns.push_back(std::move(sys));
    }

    // --- user turn ---
    Turn user;
    user.speaker = Speaker::kUser;
    UttBuilder ub;
    if (plan.greet) {
      ub.add(pick(kGreetTmpl, rng));
      state.active_intent = kNoneIntent;
      state.requested_slots.clear();
    } else {
      if (plan.set_intent) {
        std::string sent = pick(kIntentTmpl, rng);
        subst(sent, "%I",
              svc.intent_phrases[static_cast<size_t>(*plan.set_intent)]);
        ub.add(std::move(sent));
        state.active_intent =
            svc.schema.intents[static_cast<size_t>(*plan.set_intent)].name;
      }
      for (const Provide& pr : plan.provides) {
        const SlotSchema& slot = slots[static_cast<size_t>(pr.slot)];
        const std::string& phrase = svc.phrases[static_cast<size_t>(pr.slot)];
        if (pr.dontcare) {
          std::string sent = pick(kDontcareTmpl, rng);
          subst(sent, "%S", phrase);
          ub.add(std::move(sent));
          state.slot_values[slot.name] = {kDontcare};
        } else if (pr.via_offer) {
          std::string sent = pick(kConfirmTmpl, rng);
          subst(sent, "%S", phrase);
          ub.add(std::move(sent));
          state.slot_values[slot.name] = {pr.value};
        } else {
          std::string sent = pick(kProvideTmpl, rng);
          subst(sent, "%S", phrase);
          // Record the span only where one is required.
          ub.add(std::move(sent), slot.is_categorical ? "" : slot.name,
                 pr.value);
          state.slot_values[slot.name] = {pr.value};
        }
      }
      state.requested_slots.clear();
      for (int r : plan.requests) {
        const std::string& phrase = svc.phrases[static_cast<size_t>(r)];
        std::string sent = pick(kRequestTmpl, rng);
        subst(sent, "%S", phrase);
        ub.add(std::move(sent));
        state.requested_slots.insert(slots[static_cast<size_t>(r)].name);
      }
      if (ub.text.empty()) ub.add(pick(kGreetTmpl, rng));
    }
    user.utterance = ub.text;
    Frame f;
    f.service = svc.schema.service_name;
    f.state = state;
    f.spans = std::move(ub.spans);
    user.frames.push_back(std::move(f));
    d.turns.push_back(std::move(user));
  }
  return d;
}

std::string pad_index(int i) {
  std::ostringstream out;
  out << (i < 10 ? "0" : "") << i;
  return out.str();
}

}  // namespace

void SynthConfig::validate() const {
  if (num_services < 1) throw ConfigError("num_services must be >= 1");
  if (unseen_services < 0) throw ConfigError("unseen_services must be >= 0");
  if (slots_per_service < 1)
    throw ConfigError("slots_per_service must be >= 1");
  if (values_per_categorical < 1)
    throw ConfigError("values_per_categorical must be >= 1");
  if (intents_per_service < 1)
    throw ConfigError("intents_per_service must be >= 1");
  if (dialogues_per_service < 1)
    throw ConfigError("dialogues_per_service must be >= 1");
  if (turns_per_dialogue < 1)
    throw ConfigError("turns_per_dialogue must be >= 1");
  if (categorical_fraction < 0.0 || categorical_fraction > 1.0)
    throw ConfigError("categorical_fraction must lie in [0, 1]");
  if (domain_switch_fraction < 0.0 || domain_switch_fraction > 1.0)
    throw ConfigError("domain_switch_fraction must lie in [0, 1]");
}

SynthSplit synth_schemas(const SynthConfig& cfg) {
  cfg.validate();
  SynthSplit split;
  int n_concepts = static_cast<int>(domain_concepts().size());
  // Instance numbering is global per concept so seen and unseen names never
  // collide. Unseen services cycle over the concepts the seen split used.
  std::vector<int> instances(static_cast<size_t>(n_concepts), 0);

  for (int i = 0; i < cfg.num_services; ++i) {
    int ci = i % n_concepts;
    Rng rng(derive_seed(cfg.seed, "schema_seen_" + std::to_string(i)));
    BuiltService bs = build_service(cfg, ci, instances[static_cast<size_t>(ci)]++,
                                    false, rng, &split.warnings);
    split.train_services.insert(bs.schema.service_name);
    split.schemas.push_back(std::move(bs.schema));
  }
  int concepts_used = std::min(cfg.num_services, n_concepts);
  for (int i = 0; i < cfg.unseen_services; ++i) {
    int ci = i % concepts_used;
    Rng rng(derive_seed(cfg.seed, "schema_unseen_" + std::to_string(i)));
    BuiltService bs = build_service(cfg, ci, instances[static_cast<size_t>(ci)]++,
                                    true, rng, &split.warnings);
    split.eval_services.insert(bs.schema.service_name);
    split.schemas.push_back(std::move(bs.schema));
  }
  return split;
}

std::vector<Dialogue> synth_dialogues(const std::vector<ServiceSchema>& schemas,
                                      const SynthConfig& cfg) {
  cfg.validate();
  // Rebuild the phrase/lexicon side tables for the given schemas by matching
  // them against the concepts they were stamped from.
  std::vector<BuiltService> built;
  for (const ServiceSchema& schema : schemas) {
    std::string domain = domain_of(schema.service_name);
    const DomainConcept* dc = nullptr;
    for (const DomainConcept& c : domain_concepts())
      if (c.domain == domain) dc = &c;
    if (dc == nullptr)
      throw DataError("service " + schema.service_name +
                      " does not come from a known synthetic concept");
    BuiltService bs;
    bs.schema = schema;
    for (size_t i = 0; i < schema.slots.size(); ++i) {
      const SlotConcept& sc = dc->slots[i % dc->slots.size()];
      bs.phrases.push_back(sc.phrase);
      bs.lexicons.push_back(sc.lexicon);
    }
    for (size_t i = 0; i < schema.intents.size(); ++i)
      bs.intent_phrases.push_back(dc->intents[i % dc->intents.size()].phrase);
    built.push_back(std::move(bs));
  }

  std::vector<Dialogue> out;
  for (size_t s = 0; s < built.size(); ++s) {
    for (int k = 0; k < cfg.dialogues_per_service; ++k) {
      std::string id = "synth_" + built[s].schema.service_name + "_" +
                       pad_index(k);
      std::uint64_t seed = derive_seed(cfg.seed, id);
      Rng pick_rng(derive_seed(seed, "switch"));
      const BuiltService* second = nullptr;
      if (built.size() >= 2 && cfg.turns_per_dialogue >= 2 &&
          pick_rng.uniform() < cfg.domain_switch_fraction)
        second = &built[(s + 1) % built.size()];
      out.push_back(gen_dialogue(id, built[s], second, cfg,
                                 derive_seed(seed, "turns")));
    }
  }
  return out;
}

nlohmann::json split_manifest(const SynthSplit& split) {
  nlohmann::json j;
  j["train_services"] = std::vector<std::string>(split.train_services.begin(),
                                                 split.train_services.end());
  j["eval_services"] = std::vector<std::string>(split.eval_services.begin(),
                                                split.eval_services.end());
  if (!split.warnings.empty()) j["warnings"] = split.warnings;
  return j;
}

}  // namespace golomb

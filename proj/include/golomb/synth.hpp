#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "golomb/schema.hpp"

namespace golomb {

// Generator for toy schemas and dialogues in the same JSON formats as the
// real dataset. Services are stamped out of a fixed set of domain concepts
// (restaurants, hotels, rides, flights) whose slot values come from closed
// lexicons, so a small vocabulary covers everything and desk-scale models
// can actually learn the mapping.
struct SynthConfig {
  int num_services = 3;        // training split
  int unseen_services = 1;     // evaluation split, disjoint names
  int slots_per_service = 4;
  double categorical_fraction = 0.5;
  int values_per_categorical = 4;
  int intents_per_service = 2;
  int dialogues_per_service = 50;
  int turns_per_dialogue = 3;  // user turns
  double domain_switch_fraction = 0.0;
  // Optional per-concept overrides of the built-in description paraphrase
  // pools. Keys: "<Domain>", "<Domain>.<slot>", "<Domain>.intent.<intent>".
  std::map<std::string, std::vector<std::string>> description_paraphrase_pool;
  std::uint64_t seed = 13;

  void validate() const;
};

struct SynthSplit {
  std::vector<ServiceSchema> schemas;  // train services first, then unseen
  std::set<std::string> train_services;
  std::set<std::string> eval_services;
  std::vector<std::string> warnings;
};

// Unseen services reuse the training concepts but draw their descriptions
// from the held-out half of each paraphrase pool, so transfer hinges on
// reading the descriptions rather than memorizing service names.
SynthSplit synth_schemas(const SynthConfig& cfg);

// dialogues_per_service dialogues for every schema in the list. Gold states,
// spans, requested slots and intents are consistent by construction; every
// non-categorical value appears verbatim in the two-utterance window that
// the tracker sees.
std::vector<Dialogue> synth_dialogues(const std::vector<ServiceSchema>& schemas,
                                      const SynthConfig& cfg);

nlohmann::json split_manifest(const SynthSplit& split);

}  // namespace golomb

#pragma once

#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "golomb/schema.hpp"

namespace golomb {

// One evaluated frame: the tracker's state next to the annotated one.
struct TurnPrediction {
  std::string dialogue_id;
  int turn_index = 0;
  std::string service;
  DialogueState predicted;
  DialogueState gold;
};

// 1 - levenshtein / max-length over lowercased, whitespace-collapsed strings.
// Both empty -> 1, exactly one empty -> 0.
double fuzzy_score(const std::string& predicted, const std::string& gold);

double active_intent_accuracy(const std::vector<TurnPrediction>& preds);
double requested_slots_f1(const std::vector<TurnPrediction>& preds);
double average_goal_accuracy(const std::vector<TurnPrediction>& preds,
                             const std::vector<ServiceSchema>& schemas);
// strict demands a per-slot score of exactly 1 for a frame to count.
double joint_goal_accuracy(const std::vector<TurnPrediction>& preds,
                           const std::vector<ServiceSchema>& schemas,
                           bool strict = false);

struct GroupMetrics {
  std::string name;  // service or domain
  int frames = 0;
  bool unseen = false;
  double active_intent_accuracy = 0.0;
  double requested_slots_f1 = 0.0;
  double average_goal_accuracy = 0.0;
  double joint_goal_accuracy = 0.0;
  double joint_goal_accuracy_strict = 0.0;
};

struct SlotErrorRate {
  std::string service;
  std::string slot;
  int occurrences = 0;
  int errors = 0;  // gold occurrences scored below 1
  double error_rate = 0.0;
};

struct MetricReport {
  int frames = 0;
  double active_intent_accuracy = 0.0;
  double requested_slots_f1 = 0.0;
  double average_goal_accuracy = 0.0;
  double joint_goal_accuracy = 0.0;
  double joint_goal_accuracy_strict = 0.0;
  std::vector<GroupMetrics> per_service;
  std::vector<GroupMetrics> per_domain;
  // Sorted by descending error rate, then name, mirroring the usual
  // worst-slots-first reading.
  std::vector<SlotErrorRate> slot_error_rates;
};

// "Restaurants_2" -> "Restaurants"; names without a numeric suffix are their
// own domain.
std::string domain_of(const std::string& service_name);

// A domain is flagged unseen when none of its services were trained on.
MetricReport build_report(const std::vector<TurnPrediction>& preds,
                          const std::vector<ServiceSchema>& schemas,
                          const std::set<std::string>& seen_services);

nlohmann::json report_to_json(const MetricReport& report);
std::string report_to_text(const MetricReport& report, bool strict_joint = false);

// Pairs gold and predicted user-frame states; the dialogues must agree in
// structure (same turns, same frames), which track_dialogue guarantees.
std::vector<TurnPrediction> collect_predictions(const Dialogue& gold,
                                                const Dialogue& predicted);
std::vector<TurnPrediction> collect_predictions(
    const std::vector<Dialogue>& gold, const std::vector<Dialogue>& predicted);

}  // namespace golomb

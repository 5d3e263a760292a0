#include "golomb/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <iomanip>
#include <map>
#include <sstream>

#include "golomb/errors.hpp"

namespace golomb {
namespace {

std::string normalize_for_fuzzy(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!out.empty()) pending_space = true;
      continue;
    }
    if (pending_space) {
      out += ' ';
      pending_space = false;
    }
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

int levenshtein(const std::string& a, const std::string& b) {
  const int n = static_cast<int>(a.size());
  const int m = static_cast<int>(b.size());
  std::vector<int> prev(m + 1), cur(m + 1);
  for (int j = 0; j <= m; ++j) prev[j] = j;
  for (int i = 1; i <= n; ++i) {
    cur[0] = i;
    for (int j = 1; j <= m; ++j) {
      int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

// Score of one (gold values, predicted values) pair. dontcare only ever
// matches itself; categorical slots need an exact hit; unknown slots are
// scored exactly too, which only matters for data the validator would flag.
double slot_score(const SlotSchema* slot,
                  const std::vector<std::string>& gold,
                  const std::vector<std::string>& pred) {
  bool fuzzy = slot != nullptr && !slot->is_categorical;
  double best = 0.0;
  for (const std::string& p : pred) {
    for (const std::string& g : gold) {
      double s;
      if (!fuzzy || p == kDontcare || g == kDontcare) {
        s = (p == g) ? 1.0 : 0.0;
      } else {
        s = fuzzy_score(p, g);
      }
      best = std::max(best, s);
    }
  }
  return best;
}

struct FrameEval {
  bool sets_equal = false;
  // Per gold slot: score, 0 when the prediction lacks the slot.
  std::vector<std::pair<std::string, double>> gold_slot_scores;
};

FrameEval eval_frame(const TurnPrediction& p,
                     const std::vector<ServiceSchema>& schemas) {
  const ServiceSchema* service = find_service(schemas, p.service);
  FrameEval fe;
  fe.sets_equal = true;
  for (const auto& [name, gold_values] : p.gold.slot_values) {
    const SlotSchema* slot = service ? service->find_slot(name) : nullptr;
    auto it = p.predicted.slot_values.find(name);
    double score = 0.0;
    if (it == p.predicted.slot_values.end()) {
      fe.sets_equal = false;
    } else {
      score = slot_score(slot, gold_values, it->second);
    }
    fe.gold_slot_scores.emplace_back(name, score);
  }
  for (const auto& [name, values] : p.predicted.slot_values) {
    (void)values;
    if (p.gold.slot_values.find(name) == p.gold.slot_values.end())
      fe.sets_equal = false;
  }
  return fe;
}

double frame_f1(const std::set<std::string>& pred,
                const std::set<std::string>& gold) {
  if (pred.empty() && gold.empty()) return 1.0;
  int hits = 0;
  for (const std::string& s : pred)
    if (gold.count(s) > 0) ++hits;
  if (hits == 0) return 0.0;
  double precision = static_cast<double>(hits) / pred.size();
  double recall = static_cast<double>(hits) / gold.size();
  return 2.0 * precision * recall / (precision + recall);
}

void require_nonempty(const std::vector<TurnPrediction>& preds) {
  if (preds.empty()) throw DataError("no predictions to evaluate");
}

struct CoreMetrics {
  int frames = 0;
  double intent_acc = 0.0;
  double req_f1 = 0.0;
  double avg_ga = 0.0;
  double joint_ga = 0.0;
  double joint_strict = 0.0;
};

CoreMetrics compute_core(const std::vector<TurnPrediction>& preds,
                         const std::vector<ServiceSchema>& schemas) {
  CoreMetrics cm;
  cm.frames = static_cast<int>(preds.size());
  if (preds.empty()) return cm;
  double intent_hits = 0.0, f1_sum = 0.0, joint_sum = 0.0, strict_sum = 0.0;
  double slot_sum = 0.0;
  int slot_pairs = 0;
  for (const TurnPrediction& p : preds) {
    if (p.predicted.active_intent == p.gold.active_intent) intent_hits += 1.0;
    f1_sum += frame_f1(p.predicted.requested_slots, p.gold.requested_slots);
    FrameEval fe = eval_frame(p, schemas);
    double product = 1.0;
    bool all_ones = true;
    for (const auto& [name, score] : fe.gold_slot_scores) {
      (void)name;
      slot_sum += score;
      ++slot_pairs;
      product *= score;
      if (score < 1.0) all_ones = false;
    }
    if (fe.sets_equal) {
      joint_sum += product;
      if (all_ones) strict_sum += 1.0;
    }
  }
  cm.intent_acc = intent_hits / cm.frames;
  cm.req_f1 = f1_sum / cm.frames;
  // No gold assignments anywhere means there was nothing to get wrong.
  cm.avg_ga = slot_pairs == 0 ? 1.0 : slot_sum / slot_pairs;
  cm.joint_ga = joint_sum / cm.frames;
  cm.joint_strict = strict_sum / cm.frames;
  return cm;
}

}  // namespace

double fuzzy_score(const std::string& predicted, const std::string& gold) {
  std::string a = normalize_for_fuzzy(predicted);
  std::string b = normalize_for_fuzzy(gold);
  if (a.empty() && b.empty()) return 1.0;
  if (a.empty() || b.empty()) return 0.0;
  int dist = levenshtein(a, b);
  return 1.0 - static_cast<double>(dist) / std::max(a.size(), b.size());
}

double active_intent_accuracy(const std::vector<TurnPrediction>& preds) {
  require_nonempty(preds);
  return compute_core(preds, {}).intent_acc;
}

double requested_slots_f1(const std::vector<TurnPrediction>& preds) {
  require_nonempty(preds);
  return compute_core(preds, {}).req_f1;
}

double average_goal_accuracy(const std::vector<TurnPrediction>& preds,
                             const std::vector<ServiceSchema>& schemas) {
  require_nonempty(preds);
  return compute_core(preds, schemas).avg_ga;
}

double joint_goal_accuracy(const std::vector<TurnPrediction>& preds,
                           const std::vector<ServiceSchema>& schemas,
                           bool strict) {
  require_nonempty(preds);
  CoreMetrics cm = compute_core(preds, schemas);
  return strict ? cm.joint_strict : cm.joint_ga;
}

std::string domain_of(const std::string& service_name) {
  auto pos = service_name.rfind('_');
  if (pos == std::string::npos || pos + 1 >= service_name.size())
    return service_name;
  for (size_t i = pos + 1; i < service_name.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(service_name[i])))
      return service_name;
  return service_name.substr(0, pos);
}

MetricReport build_report(const std::vector<TurnPrediction>& preds,
                          const std::vector<ServiceSchema>& schemas,
                          const std::set<std::string>& seen_services) {
  MetricReport report;
  CoreMetrics overall = compute_core(preds, schemas);
  report.frames = overall.frames;
  report.active_intent_accuracy = overall.intent_acc;
  report.requested_slots_f1 = overall.req_f1;
  report.average_goal_accuracy = overall.avg_ga;
  report.joint_goal_accuracy = overall.joint_ga;
  report.joint_goal_accuracy_strict = overall.joint_strict;

  std::map<std::string, std::vector<TurnPrediction>> by_service, by_domain;
  for (const TurnPrediction& p : preds) {
    by_service[p.service].push_back(p);
    by_domain[domain_of(p.service)].push_back(p);
  }

  auto group_metrics = [&](const std::string& name,
                           const std::vector<TurnPrediction>& group,
                           bool unseen) {
    CoreMetrics cm = compute_core(group, schemas);
    GroupMetrics gm;
    gm.name = name;
    gm.frames = cm.frames;
    gm.unseen = unseen;
    gm.active_intent_accuracy = cm.intent_acc;
    gm.requested_slots_f1 = cm.req_f1;
    gm.average_goal_accuracy = cm.avg_ga;
    gm.joint_goal_accuracy = cm.joint_ga;
    gm.joint_goal_accuracy_strict = cm.joint_strict;
    return gm;
  };

  for (const auto& [name, group] : by_service) {
    bool unseen = seen_services.count(name) == 0;
    report.per_service.push_back(group_metrics(name, group, unseen));
  }
  for (const auto& [name, group] : by_domain) {
    bool any_seen = false;
    for (const TurnPrediction& p : group)
      if (seen_services.count(p.service) > 0) any_seen = true;
    report.per_domain.push_back(group_metrics(name, group, !any_seen));
  }

  std::map<std::pair<std::string, std::string>, std::pair<int, int>> counts;
  for (const TurnPrediction& p : preds) {
    FrameEval fe = eval_frame(p, schemas);
    for (const auto& [slot, score] : fe.gold_slot_scores) {
      auto& [occ, err] = counts[{p.service, slot}];
      ++occ;
      if (score < 1.0) ++err;
    }
  }
  for (const auto& [key, val] : counts) {
    SlotErrorRate ser;
    ser.service = key.first;
    ser.slot = key.second;
    ser.occurrences = val.first;
    ser.errors = val.second;
    ser.error_rate = static_cast<double>(val.second) / val.first;
    report.slot_error_rates.push_back(ser);
  }
  std::stable_sort(report.slot_error_rates.begin(),
                   report.slot_error_rates.end(),
                   [](const SlotErrorRate& a, const SlotErrorRate& b) {
                     if (a.error_rate != b.error_rate)
                       return a.error_rate > b.error_rate;
                     if (a.service != b.service) return a.service < b.service;
                     return a.slot < b.slot;
                   });
  return report;
}

nlohmann::json report_to_json(const MetricReport& report) {
  auto group_json = [](const GroupMetrics& g) {
    return nlohmann::json{
        {"name", g.name},
        {"frames", g.frames},
        {"unseen", g.unseen},
        {"active_intent_accuracy", g.active_intent_accuracy},
        {"requested_slots_f1", g.requested_slots_f1},
        {"average_goal_accuracy", g.average_goal_accuracy},
        {"joint_goal_accuracy", g.joint_goal_accuracy},
        {"joint_goal_accuracy_strict", g.joint_goal_accuracy_strict},
    };
  };
  nlohmann::json j{
      {"frames", report.frames},
      {"active_intent_accuracy", report.active_intent_accuracy},
      {"requested_slots_f1", report.requested_slots_f1},
      {"average_goal_accuracy", report.average_goal_accuracy},
      {"joint_goal_accuracy", report.joint_goal_accuracy},
      {"joint_goal_accuracy_strict", report.joint_goal_accuracy_strict},
  };
  j["per_service"] = nlohmann::json::array();
  for (const GroupMetrics& g : report.per_service)
    j["per_service"].push_back(group_json(g));
  j["per_domain"] = nlohmann::json::array();
  for (const GroupMetrics& g : report.per_domain)
    j["per_domain"].push_back(group_json(g));
  j["slot_error_rates"] = nlohmann::json::array();
  for (const SlotErrorRate& s : report.slot_error_rates) {
    j["slot_error_rates"].push_back({{"service", s.service},
                                     {"slot", s.slot},
                                     {"occurrences", s.occurrences},
                                     {"errors", s.errors},
                                     {"error_rate", s.error_rate}});
  }
  return j;
}

std::string report_to_text(const MetricReport& report, bool strict_joint) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  double joint = strict_joint ? report.joint_goal_accuracy_strict
                              : report.joint_goal_accuracy;
  out << "frames evaluated        " << report.frames << "\n"
      << "active intent accuracy  " << report.active_intent_accuracy << "\n"
      << "requested slots F1      " << report.requested_slots_f1 << "\n"
      << "average goal accuracy   " << report.average_goal_accuracy << "\n"
      << "joint goal accuracy     " << joint
      << (strict_joint ? "  (strict)" : "") << "\n";
  if (!report.per_domain.empty()) {
    out << "\nper domain (joint / average GA):\n";
    for (const GroupMetrics& g : report.per_domain) {
      double gj = strict_joint ? g.joint_goal_accuracy_strict
                               : g.joint_goal_accuracy;
      out << "  " << g.name << (g.unseen ? "*" : "") << "  " << gj << " / "
          << g.average_goal_accuracy << "  (" << g.frames << " frames)\n";
    }
    out << "  (* = unseen)\n";
  }
  if (!report.slot_error_rates.empty()) {
    out << "\nslot error rates (worst first):\n";
    size_t shown = 0;
    for (const SlotErrorRate& s : report.slot_error_rates) {
      if (++shown > 20) break;
      out << "  " << s.service << "." << s.slot << "  "
          << std::setprecision(0) << s.error_rate * 100.0 << "%"
          << std::setprecision(4) << "  (" << s.errors << "/"
          << s.occurrences << ")\n";
    }
  }
  return out.str();
}

std::vector<TurnPrediction> collect_predictions(const Dialogue& gold,
                                                const Dialogue& predicted) {
  if (gold.turns.size() != predicted.turns.size())
    throw DataError("dialogue " + gold.dialogue_id +
                    ": prediction has a different number of turns");
  std::vector<TurnPrediction> preds;
  for (size_t t = 0; t < gold.turns.size(); ++t) {
    const Turn& gt = gold.turns[t];
    if (gt.speaker != Speaker::kUser) continue;
    for (const Frame& gf : gt.frames) {
      if (!gf.state) continue;
      const Frame* pf = predicted.turns[t].find_frame(gf.service);
      if (pf == nullptr || !pf->state)
        throw DataError("dialogue " + gold.dialogue_id + " turn " +
                        std::to_string(t) + ": prediction lacks a state for "
                        "service '" + gf.service + "'");
      TurnPrediction p;
      p.dialogue_id = gold.dialogue_id;
      p.turn_index = static_cast<int>(t);
      p.service = gf.service;
      p.predicted = *pf->state;
      p.gold = *gf.state;
      preds.push_back(std::move(p));
    }
  }
  return preds;
}

std::vector<TurnPrediction> collect_predictions(
    const std::vector<Dialogue>& gold, const std::vector<Dialogue>& predicted) {
  std::map<std::string, const Dialogue*> by_id;
  for (const Dialogue& d : predicted) by_id[d.dialogue_id] = &d;
  std::vector<TurnPrediction> preds;
  for (const Dialogue& g : gold) {
    auto it = by_id.find(g.dialogue_id);
    if (it == by_id.end())
      throw DataError("no prediction for dialogue " + g.dialogue_id);
    auto one = collect_predictions(g, *it->second);
    preds.insert(preds.end(), one.begin(), one.end());
  }
  return preds;
}

}  // namespace golomb

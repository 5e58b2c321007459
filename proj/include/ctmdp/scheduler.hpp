#ifndef CTMDP_SCHEDULER_HPP
#define CTMDP_SCHEDULER_HPP

#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctmdp/model.hpp"
#include "ctmdp/rational.hpp"

namespace ctmdp {

// Distribution over actions; deterministic decisions carry a single entry
// with weight 1. Weights are exact rationals summing to 1.
using Decision = std::vector<std::pair<int, Rational>>;

inline Decision pure(int action) { return {{action, Rational(1)}}; }

inline bool decision_deterministic(const Decision& d) {
  int support = 0;
  for (const auto& [a, w] : d)
    if (w > 0) ++support;
  return support == 1;
}

// Time-abstract schedulers of the classes P (positional), CD (counting
// deterministic) and CR (counting randomized). A counting scheduler decides
// from preamble[i] at step index i < preamble.size() and from the positional
// tail afterwards; an empty preamble is a plain positional scheduler.
struct Scheduler {
  std::vector<std::vector<Decision>> preamble;  // [step][location]
  std::vector<Decision> tail;                   // [location]

  static Scheduler positional(std::vector<int> choice) {
    Scheduler s;
    s.tail.reserve(choice.size());
    for (int a : choice) s.tail.push_back(pure(a));
    return s;
  }

  std::size_t preamble_depth() const { return preamble.size(); }

  const Decision& decide(std::size_t step, int location) const {
    if (step < preamble.size()) return preamble[step][location];
    return tail[location];
  }

  bool deterministic() const {
    for (const auto& table : preamble)
      for (const auto& d : table)
        if (!d.empty() && !decision_deterministic(d)) return false;
    for (const auto& d : tail)
      if (!d.empty() && !decision_deterministic(d)) return false;
    return true;
  }

  bool positional_only() const { return preamble.empty(); }

  // Number of randomized decision cells, for determinisation accounting.
  std::size_t randomized_decisions() const {
    std::size_t count = 0;
    for (const auto& table : preamble)
      for (const auto& d : table)
        if (!d.empty() && !decision_deterministic(d)) ++count;
    for (const auto& d : tail)
      if (!d.empty() && !decision_deterministic(d)) ++count;
    return count;
  }
};

// Empty result means well-formed: every referenced action is enabled and
// every randomized decision has rational weights summing to exactly 1.
inline std::vector<std::string> check_scheduler(const CtmdpModel& model,
                                                const Scheduler& scheduler) {
  std::vector<std::string> problems;
  auto check_table = [&](const std::vector<Decision>& table, const std::string& where) {
    if (table.size() != model.locations.size()) {
      problems.push_back(where + ": table size does not match location count");
      return;
    }
    for (std::size_t l = 0; l < table.size(); ++l) {
      const auto& d = table[l];
      if (d.empty()) continue;  // location never queried (e.g. goal)
      Rational mass = 0;
      for (const auto& [a, w] : d) {
        if (a < 0 || a >= static_cast<int>(model.actions.size())) {
          problems.push_back(where + ": unknown action at " + model.locations[l].id);
          continue;
        }
        if (w < 0)
          problems.push_back(where + ": negative weight at " + model.locations[l].id);
        if (w > 0 && !model.enabled(static_cast<int>(l), a))
          problems.push_back(where + ": action '" + model.actions[a] +
                             "' not enabled at " + model.locations[l].id);
        mass += w;
      }
      if (mass != 1)
        problems.push_back(where + ": weights at " + model.locations[l].id +
                           " do not sum to 1");
    }
  };
  for (std::size_t i = 0; i < scheduler.preamble.size(); ++i)
    check_table(scheduler.preamble[i], "preamble[" + std::to_string(i) + "]");
  check_table(scheduler.tail, "tail");
  return problems;
}

namespace detail {

inline Decision parse_decision(const CtmdpModel& model, const nlohmann::json& value,
                               const std::string& where) {
  Decision d;
  if (value.is_string()) {
    const int a = model.action_index(value.get<std::string>());
    if (a < 0)
      throw ParseError("unknown action '" + value.get<std::string>() + "' in " + where);
    d = pure(a);
  } else if (value.is_object()) {
    for (const auto& [action, weight] : value.items()) {
      const int a = model.action_index(action);
      if (a < 0) throw ParseError("unknown action '" + action + "' in " + where);
      d.emplace_back(a, json_rational(weight, where));
    }
  } else {
    throw ParseError("expected action or distribution in " + where);
  }
  return d;
}

inline std::vector<Decision> parse_decision_table(const CtmdpModel& model,
                                                  const nlohmann::json& table,
                                                  const std::string& where) {
  std::vector<Decision> result(model.locations.size());
  for (const auto& [id, value] : table.items()) {
    const int l = model.location_index(id);
    if (l < 0) throw ParseError("unknown location '" + id + "' in " + where);
    result[l] = parse_decision(model, value, where);
  }
  return result;
}

inline nlohmann::json decision_to_json(const CtmdpModel& model, const Decision& d) {
  if (decision_deterministic(d)) {
    for (const auto& [a, w] : d)
      if (w > 0) return model.actions[a];
  }
  nlohmann::json obj = nlohmann::json::object();
  for (const auto& [a, w] : d) obj[model.actions[a]] = format_rational(w);
  return obj;
}

inline nlohmann::json table_to_json(const CtmdpModel& model,
                                    const std::vector<Decision>& table) {
  nlohmann::json obj = nlohmann::json::object();
  for (std::size_t l = 0; l < table.size(); ++l)
    if (!table[l].empty()) obj[model.locations[l].id] = decision_to_json(model, table[l]);
  return obj;
}

}  // namespace detail

inline Scheduler parse_scheduler(const CtmdpModel& model, const std::string& document) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(document);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("syntax error: ") + e.what());
  }
  Scheduler s;
  try {
    const std::string type = doc.at("type").get<std::string>();
    if (type == "positional") {
      s.tail = detail::parse_decision_table(model, doc.at("map"), "map");
    } else if (type == "counting" || type == "randomized-counting") {
      for (const auto& table : doc.value("preamble", nlohmann::json::array()))
        s.preamble.push_back(detail::parse_decision_table(model, table, "preamble"));
      s.tail = detail::parse_decision_table(model, doc.at("tail"), "tail");
    } else {
      throw ParseError("unknown scheduler type '" + type + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("syntax error: ") + e.what());
  }
  const auto problems = check_scheduler(model, s);
  if (!problems.empty()) throw ParseError(problems.front());
  return s;
}

inline std::string serialize_scheduler(const CtmdpModel& model, const Scheduler& s) {
  nlohmann::json doc;
  if (s.positional_only() && s.deterministic()) {
    doc["type"] = "positional";
    doc["map"] = detail::table_to_json(model, s.tail);
  } else {
    doc["type"] = s.deterministic() ? "counting" : "randomized-counting";
    doc["preamble"] = nlohmann::json::array();
    for (const auto& table : s.preamble)
      doc["preamble"].push_back(detail::table_to_json(model, table));
    doc["tail"] = detail::table_to_json(model, s.tail);
  }
  return doc.dump(2);
}

}  // namespace ctmdp

#endif  // CTMDP_SCHEDULER_HPP

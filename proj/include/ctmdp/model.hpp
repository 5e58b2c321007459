#ifndef CTMDP_MODEL_HPP
#define CTMDP_MODEL_HPP

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctmdp/rational.hpp"

namespace ctmdp {

enum class Player { Max, Min };

struct Location {
  std::string id;
  Player player = Player::Max;
  bool goal = false;
};

struct Transition {
  int from = -1;
  int action = -1;
  int to = -1;
  Rational rate;
};

// A continuous-time Markov decision process (or two-player game when
// locations carry mixed player kinds). Location and action order in the
// source document is authoritative; it drives all tie-breaking downstream.
struct CtmdpModel {
  std::string name;
  std::vector<Location> locations;
  std::vector<std::string> actions;
  std::vector<Transition> transitions;
  std::vector<std::pair<int, Rational>> initial;  // (location, probability)

  int location_index(const std::string& id) const {
    for (std::size_t i = 0; i < locations.size(); ++i)
      if (locations[i].id == id) return static_cast<int>(i);
    return -1;
  }

  int action_index(const std::string& id) const {
    for (std::size_t i = 0; i < actions.size(); ++i)
      if (actions[i] == id) return static_cast<int>(i);
    return -1;
  }

  Rational exit_rate(int loc, int action) const {
    Rational total = 0;
    for (const auto& tr : transitions)
      if (tr.from == loc && tr.action == action) total += tr.rate;
    return total;
  }

  bool enabled(int loc, int action) const { return exit_rate(loc, action) > 0; }

  std::vector<int> enabled_actions(int loc) const {
    std::vector<Rational> totals(actions.size(), Rational(0));
    for (const auto& tr : transitions)
      if (tr.from == loc) totals[tr.action] += tr.rate;
    std::vector<int> result;
    for (std::size_t a = 0; a < actions.size(); ++a)
      if (totals[a] > 0) result.push_back(static_cast<int>(a));
    return result;
  }

  Rational initial_mass(int loc) const {
    for (const auto& [l, p] : initial)
      if (l == loc) return p;
    return Rational(0);
  }

  // Total initial mass on the goal region, nu(B).
  Rational initial_goal_mass() const {
    Rational mass = 0;
    for (const auto& [l, p] : initial)
      if (locations[l].goal) mass += p;
    return mass;
  }

  bool is_game() const {
    return std::any_of(locations.begin(), locations.end(),
                       [](const Location& l) { return l.player == Player::Min; });
  }

  std::vector<int> goal_locations() const {
    std::vector<int> result;
    for (std::size_t i = 0; i < locations.size(); ++i)
      if (locations[i].goal) result.push_back(static_cast<int>(i));
    return result;
  }
};

struct PathStep {
  int action = -1;
  int to = -1;
};

struct TimeAbstractPath {
  int start = -1;
  std::vector<PathStep> steps;

  std::size_t length() const { return steps.size(); }
  int last() const { return steps.empty() ? start : steps.back().to; }
};

inline bool path_valid(const CtmdpModel& model, const TimeAbstractPath& path) {
  if (path.start < 0 || path.start >= static_cast<int>(model.locations.size()))
    return false;
  int at = path.start;
  for (const auto& step : path.steps) {
    bool found = false;
    for (const auto& tr : model.transitions)
      if (tr.from == at && tr.action == step.action && tr.to == step.to &&
          tr.rate > 0) {
        found = true;
        break;
      }
    if (!found) return false;
    at = step.to;
  }
  return true;
}

// Time-abstract transition probabilities P(l,a,l') = R(l,a,l') / R(l,a,L),
// defined exactly for every enabled (l,a).
struct EmbeddedDtmc {
  using Row = std::vector<std::pair<int, Rational>>;  // (successor, probability)
  // rows[l][a] is empty iff a is not enabled at l.
  std::vector<std::vector<Row>> rows;

  bool enabled(int loc, int action) const { return !rows[loc][action].empty(); }
};

inline EmbeddedDtmc embedded_probabilities(const CtmdpModel& model) {
  const std::size_t nl = model.locations.size();
  const std::size_t na = model.actions.size();
  std::vector<std::vector<Rational>> totals(nl, std::vector<Rational>(na, Rational(0)));
  for (const auto& tr : model.transitions) totals[tr.from][tr.action] += tr.rate;
  EmbeddedDtmc dtmc;
  dtmc.rows.assign(nl, std::vector<EmbeddedDtmc::Row>(na));
  for (const auto& tr : model.transitions) {
    if (tr.rate == 0) continue;
    auto& row = dtmc.rows[tr.from][tr.action];
    const Rational p = tr.rate / totals[tr.from][tr.action];
    auto it = std::find_if(row.begin(), row.end(),
                           [&](const auto& e) { return e.first == tr.to; });
    if (it == row.end())
      row.emplace_back(tr.to, p);
    else
      it->second += p;
  }
  for (auto& per_loc : dtmc.rows)
    for (auto& row : per_loc)
      std::sort(row.begin(), row.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
  return dtmc;
}

inline std::vector<std::string> validate(const CtmdpModel& model) {
  std::vector<std::string> violations;
  const std::size_t nl = model.locations.size();
  if (nl == 0) violations.push_back("model has no locations");

  std::set<std::string> seen_locations;
  for (const auto& loc : model.locations)
    if (!seen_locations.insert(loc.id).second)
      violations.push_back("duplicate location id '" + loc.id + "'");
  std::set<std::string> seen_actions;
  for (const auto& a : model.actions)
    if (!seen_actions.insert(a).second)
      violations.push_back("duplicate action id '" + a + "'");

  std::set<std::tuple<int, int, int>> seen_triples;
  for (const auto& tr : model.transitions) {
    if (tr.from < 0 || tr.from >= static_cast<int>(nl) ||
        tr.to < 0 || tr.to >= static_cast<int>(nl) ||
        tr.action < 0 || tr.action >= static_cast<int>(model.actions.size())) {
      violations.push_back("transition references unknown location or action");
      continue;
    }
    if (tr.rate < 0)
      violations.push_back("negative rate on " + model.locations[tr.from].id +
                           " -" + model.actions[tr.action] + "-> " +
                           model.locations[tr.to].id);
    if (!seen_triples.insert({tr.from, tr.action, tr.to}).second)
      violations.push_back("duplicate transition triple " +
                           model.locations[tr.from].id + " -" +
                           model.actions[tr.action] + "-> " +
                           model.locations[tr.to].id);
  }

  for (std::size_t l = 0; l < nl; ++l)
    if (model.enabled_actions(static_cast<int>(l)).empty())
      violations.push_back("no enabled action at " + model.locations[l].id);

  Rational mass = 0;
  for (const auto& [l, p] : model.initial) {
    if (l < 0 || l >= static_cast<int>(nl)) {
      violations.push_back("initial distribution references unknown location");
      continue;
    }
    if (p < 0)
      violations.push_back("negative initial probability at " +
                           model.locations[l].id);
    mass += p;
  }
  if (mass != 1) violations.push_back("initial mass != 1");

  // Goal region must be absorbing: enabled actions of goal locations may
  // only lead back into goal locations.
  for (const auto& tr : model.transitions) {
    if (tr.from < 0 || tr.from >= static_cast<int>(nl) || tr.to < 0 ||
        tr.to >= static_cast<int>(nl))
      continue;
    if (model.locations[tr.from].goal && tr.rate > 0 &&
        !model.locations[tr.to].goal)
      violations.push_back("goal not absorbing at " + model.locations[tr.from].id);
  }

  return violations;
}

// Replaces every goal location's transitions by a single self-loop on the
// model's first action, with rate equal to the maximal total exit rate.
inline CtmdpModel absorb_goal(const CtmdpModel& model) {
  CtmdpModel result = model;
  if (model.goal_locations().empty()) return result;

  // The self-loop rate is the maximal total exit rate among the rows that
  // survive the transform (non-goal locations); the goal rows being replaced
  // do not contribute. Degenerate all-goal models fall back to rate 1.
  Rational max_exit = 0;
  for (std::size_t l = 0; l < model.locations.size(); ++l) {
    if (model.locations[l].goal) continue;
    for (std::size_t a = 0; a < model.actions.size(); ++a)
      max_exit = std::max(max_exit, model.exit_rate(static_cast<int>(l),
                                                    static_cast<int>(a)));
  }
  if (max_exit == 0) max_exit = 1;

  result.transitions.clear();
  for (const auto& tr : model.transitions)
    if (!model.locations[tr.from].goal) result.transitions.push_back(tr);
  for (int g : model.goal_locations()) {
    Transition loop;
    loop.from = g;
    loop.action = 0;
    loop.to = g;
    loop.rate = max_exit;
    result.transitions.push_back(loop);
  }
  return result;
}

namespace detail {

inline Rational json_rational(const nlohmann::json& value, const std::string& where) {
  if (value.is_string()) return parse_rational(value.get<std::string>());
  if (value.is_number_integer())
    return Rational(Integer(value.get<long long>()));
  throw ParseError("expected rational string at " + where);
}

}  // namespace detail

// Syntactic parse only; reference, duplicate, and sign checks, but no
// semantic validation. parse_model() layers validate() on top.
inline CtmdpModel parse_model_document(const std::string& document) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(document);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("syntax error: ") + e.what());
  }

  CtmdpModel model;
  try {
    model.name = doc.value("name", "");
    if (!doc.contains("locations") || !doc["locations"].is_array())
      throw ParseError("missing 'locations' array");
    for (const auto& entry : doc["locations"]) {
      Location loc;
      loc.id = entry.at("id").get<std::string>();
      loc.goal = entry.value("goal", false);
      model.locations.push_back(loc);
    }
    if (doc.contains("players")) {
      for (const auto& [id, kind] : doc["players"].items()) {
        const int l = model.location_index(id);
        if (l < 0) throw ParseError("unknown location '" + id + "' in players");
        const std::string k = kind.get<std::string>();
        if (k == "min")
          model.locations[l].player = Player::Min;
        else if (k == "max")
          model.locations[l].player = Player::Max;
        else
          throw ParseError("unknown player kind '" + k + "'");
      }
    }
    if (!doc.contains("actions") || !doc["actions"].is_array())
      throw ParseError("missing 'actions' array");
    for (const auto& a : doc["actions"]) model.actions.push_back(a.get<std::string>());

    std::set<std::tuple<int, int, int>> triples;
    for (const auto& entry : doc.value("transitions", nlohmann::json::array())) {
      Transition tr;
      const std::string from = entry.at("from").get<std::string>();
      const std::string action = entry.at("action").get<std::string>();
      const std::string to = entry.at("to").get<std::string>();
      tr.from = model.location_index(from);
      tr.action = model.action_index(action);
      tr.to = model.location_index(to);
      if (tr.from < 0) throw ParseError("unknown location '" + from + "'");
      if (tr.to < 0) throw ParseError("unknown location '" + to + "'");
      if (tr.action < 0) throw ParseError("unknown action '" + action + "'");
      tr.rate = detail::json_rational(entry.at("rate"), "transition rate");
      if (tr.rate < 0)
        throw ParseError("negative rate on " + from + " -" + action + "-> " + to);
      if (!triples.insert({tr.from, tr.action, tr.to}).second)
        throw ParseError("duplicate transition triple " + from + " -" + action +
                         "-> " + to);
      model.transitions.push_back(tr);
    }

    const nlohmann::json initial = doc.value("initial", nlohmann::json::object());
    for (const auto& [id, p] : initial.items()) {
      const int l = model.location_index(id);
      if (l < 0) throw ParseError("unknown location '" + id + "' in initial");
      model.initial.emplace_back(l, detail::json_rational(p, "initial probability"));
    }
    std::sort(model.initial.begin(), model.initial.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("syntax error: ") + e.what());
  }
  return model;
}

inline CtmdpModel parse_model(const std::string& document) {
  CtmdpModel model = parse_model_document(document);
  const auto violations = validate(model);
  if (!violations.empty()) throw ParseError(violations.front());
  return model;
}

inline std::string serialize_model(const CtmdpModel& model) {
  nlohmann::json doc;
  if (!model.name.empty()) doc["name"] = model.name;
  doc["locations"] = nlohmann::json::array();
  for (const auto& loc : model.locations) {
    nlohmann::json entry = {{"id", loc.id}};
    if (loc.goal) entry["goal"] = true;
    doc["locations"].push_back(entry);
  }
  nlohmann::json players = nlohmann::json::object();
  for (const auto& loc : model.locations)
    if (loc.player == Player::Min) players[loc.id] = "min";
  if (!players.empty()) doc["players"] = players;
  doc["actions"] = model.actions;
  doc["transitions"] = nlohmann::json::array();
  for (const auto& tr : model.transitions)
    doc["transitions"].push_back({{"from", model.locations[tr.from].id},
                                  {"action", model.actions[tr.action]},
                                  {"to", model.locations[tr.to].id},
                                  {"rate", format_rational(tr.rate)}});
  nlohmann::json initial = nlohmann::json::object();
  for (const auto& [l, p] : model.initial)
    initial[model.locations[l].id] = format_rational(p);
  doc["initial"] = initial;
  return doc.dump(2);
}

}  // namespace ctmdp

#endif  // CTMDP_MODEL_HPP

#ifndef CTMDP_SYNTHESIS_HPP
#define CTMDP_SYNTHESIS_HPP

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ctmdp/greedy.hpp"
#include "ctmdp/model.hpp"
#include "ctmdp/reachability.hpp"
#include "ctmdp/scheduler.hpp"
#include "ctmdp/uniformise.hpp"

namespace ctmdp {

// Strategies of the two players, restricted to their own locations; the
// combined scheduler resolves every location.
struct StrategyPair {
  Scheduler max_strategy;
  Scheduler min_strategy;
};

enum class SynthesisMethod { Dp, Enumerate };

struct SynthesisResult {
  Scheduler scheduler;  // combined scheduler; tail is the standard greedy one
  std::optional<StrategyPair> pair;  // present for games
  ValueInterval value;
  SynthesisMethod method = SynthesisMethod::Dp;
  std::size_t preamble_depth = 0;
  GreedBound greed_bound_used;
  std::vector<Scheduler> ties;  // enumeration candidates within 2*epsilon
};

// Greedy-tail overlay: the input's decisions for step indices < n, the
// standard greedy positional tail afterwards.
inline Scheduler greedy_tail(const Scheduler& scheduler, std::size_t n,
                             const std::vector<int>& greedy) {
  Scheduler result;
  result.preamble.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Decision> table(greedy.size());
    for (std::size_t l = 0; l < greedy.size(); ++l)
      table[l] = scheduler.decide(i, static_cast<int>(l));
    result.preamble.push_back(std::move(table));
  }
  result.tail.reserve(greedy.size());
  for (int a : greedy) result.tail.push_back(pure(a));
  return result;
}

namespace detail {

inline std::vector<int> projected_standard_greedy(const CtmdpModel& model) {
  // An already-uniform model is its own uniformisation up to unreachable
  // copies, so the analysis runs on it directly.
  if (is_uniform(model)) {
    const GreedyAnalysis ga = greedy_analysis(model);
    return ga.standard_greedy;
  }
  const UniformisationResult u = uniformise(model);
  const GreedyAnalysis ga = greedy_analysis(u.uniform_model);
  std::vector<int> tail(model.locations.size());
  for (std::size_t l = 0; l < model.locations.size(); ++l)
    tail[l] = ga.standard_greedy[l];  // observable indices coincide
  return tail;
}

inline StrategyPair split_by_player(const CtmdpModel& model, const Scheduler& s) {
  StrategyPair pair;
  const auto restrict_table = [&](const std::vector<Decision>& table, Player who) {
    std::vector<Decision> result(table.size());
    for (std::size_t l = 0; l < table.size(); ++l)
      if (model.locations[l].player == who) result[l] = table[l];
    return result;
  };
  for (const auto& table : s.preamble) {
    pair.max_strategy.preamble.push_back(restrict_table(table, Player::Max));
    pair.min_strategy.preamble.push_back(restrict_table(table, Player::Min));
  }
  pair.max_strategy.tail = restrict_table(s.tail, Player::Max);
  pair.min_strategy.tail = restrict_table(s.tail, Player::Min);
  return pair;
}

struct DecisionPoint {
  int location;
  std::size_t step;
  std::vector<int> actions;
};

// Enumeration helper: odometer over per-point action choices, step-major,
// then location order, action index order. This is the canonical candidate
// order; epsilon-ties report the earliest candidate.
class Odometer {
 public:
  explicit Odometer(const std::vector<DecisionPoint>& points) : points_(points) {
    digits_.assign(points.size(), 0);
  }

  std::uint64_t count() const {
    std::uint64_t n = 1;
    for (const auto& p : points_) {
      if (n > (std::uint64_t{1} << 62) / std::max<std::size_t>(1, p.actions.size()))
        return UINT64_MAX;
      n *= p.actions.size();
    }
    return n;
  }

  int choice(std::size_t point) const {
    return points_[point].actions[digits_[point]];
  }

  bool advance() {
    for (std::size_t i = digits_.size(); i-- > 0;) {
      if (++digits_[i] < points_[i].actions.size()) return true;
      digits_[i] = 0;
    }
    return false;
  }

 private:
  const std::vector<DecisionPoint>& points_;
  std::vector<std::size_t> digits_;
};

inline std::vector<DecisionPoint> decision_points(const CtmdpModel& model,
                                                  std::size_t preamble,
                                                  std::optional<Player> owner) {
  std::vector<DecisionPoint> points;
  for (std::size_t step = 0; step < preamble; ++step)
    for (std::size_t l = 0; l < model.locations.size(); ++l) {
      if (model.locations[l].goal) continue;
      if (owner && model.locations[l].player != *owner) continue;
      auto enabled = model.enabled_actions(static_cast<int>(l));
      if (enabled.size() < 2) continue;
      points.push_back({static_cast<int>(l), step, std::move(enabled)});
    }
  return points;
}

// Builds the candidate scheduler: fixed tail everywhere, odometer choices at
// the variable points, forced single actions elsewhere in the preamble.
inline Scheduler candidate_scheduler(const CtmdpModel& model, std::size_t preamble,
                                     const std::vector<int>& tail,
                                     const std::vector<DecisionPoint>& points,
                                     const std::vector<int>& choices) {
  Scheduler s;
  s.preamble.assign(preamble, {});
  for (std::size_t step = 0; step < preamble; ++step) {
    auto& table = s.preamble[step];
    table.resize(model.locations.size());
    for (std::size_t l = 0; l < model.locations.size(); ++l) {
      if (model.locations[l].goal) {
        table[l] = pure(tail[l]);
        continue;
      }
      const auto enabled = model.enabled_actions(static_cast<int>(l));
      table[l] = pure(enabled.front());
    }
  }
  for (std::size_t i = 0; i < points.size(); ++i)
    s.preamble[points[i].step][points[i].location] = pure(choices[i]);
  for (int a : tail) s.tail.push_back(pure(a));
  return s;
}

inline ValueInterval evaluate_candidate(const CtmdpModel& model, const Scheduler& s,
                                        double t, double epsilon, bool uniform,
                                        bool exact_steps) {
  return uniform ? evaluate_uniform(model, s, t, epsilon, exact_steps)
                 : evaluate_general(model, s, t, epsilon, exact_steps);
}

}  // namespace detail

// Backward-induction synthesis for uniform models and games. Decisions at
// step indices past the refined greed bound are fixed to the standard
// greedy scheduler; earlier decisions are the argopt of the tail-weighted
// recursion, ties broken by action order.
inline SynthesisResult synth_uniform_dp(const CtmdpModel& model, const Rational& t,
                                        double epsilon, bool exact_steps = false) {
  if (t < 0) throw DomainError("time bound must be nonnegative");
  const Rational lambda = require_uniform(model);
  const GreedyAnalysis ga = greedy_analysis(model);
  const GreedBound bound = greed_bound(lambda, ga.discriminator, t);

  const double lt = to_double(lambda * t);
  const PoissonWeights pw = poisson_weights(lt, epsilon);
  const std::vector<double> g = poisson_tail_weights(pw, /*upper=*/false);
  const std::size_t n_steps = pw.n_max;  // W(n_steps+1, .) = 0
  const std::size_t depth =
      std::min<std::size_t>(bound.refined, n_steps + 1);

  const EmbeddedDtmc dtmc = embedded_probabilities(model);
  const std::size_t nl = model.locations.size();

  std::vector<double> w_next(nl, 0.0);
  std::vector<std::vector<int>> preamble_choice(depth, std::vector<int>(nl, -1));
  for (std::size_t i = n_steps + 1; i-- > 0;) {
    std::vector<double> w_now(nl, 0.0);
    for (std::size_t l = 0; l < nl; ++l) {
      if (model.locations[l].goal) continue;
      const bool maximise = model.locations[l].player == Player::Max;
      const auto value_of = [&](int a) {
        double v = 0;
        for (const auto& [to, p] : dtmc.rows[l][a])
          v += to_double(p) *
               (model.locations[to].goal ? g[i + 1] : w_next[to]);
        return v;
      };
      int chosen = ga.standard_greedy[l];
      double best = value_of(chosen);
      if (i < depth) {
        chosen = -1;
        best = 0;
        for (int a : model.enabled_actions(static_cast<int>(l))) {
          const double v = value_of(a);
          if (chosen < 0 || (maximise ? v > best : v < best)) {
            chosen = a;
            best = v;
          }
        }
        preamble_choice[i][l] = chosen;
      }
      w_now[l] = best;
    }
    w_next = std::move(w_now);
  }

  SynthesisResult result;
  result.method = SynthesisMethod::Dp;
  result.greed_bound_used = bound;
  result.preamble_depth = depth;
  result.scheduler.preamble.assign(depth, {});
  for (std::size_t i = 0; i < depth; ++i) {
    auto& table = result.scheduler.preamble[i];
    table.resize(nl);
    for (std::size_t l = 0; l < nl; ++l)
      table[l] = pure(model.locations[l].goal ? ga.standard_greedy[l]
                                              : preamble_choice[i][l]);
  }
  for (std::size_t l = 0; l < nl; ++l)
    result.scheduler.tail.push_back(pure(ga.standard_greedy[l]));

  double raw = 0;
  for (const auto& [l, p] : model.initial)
    raw += to_double(p) * (model.locations[l].goal ? 1.0 : w_next[l]);
  const double slack = pw.slack + static_cast<double>(pw.n_max) * 1e-15;
  result.value.slack = slack;
  result.value.lo = std::max(0.0, raw - slack);
  result.value.hi = std::min(1.0, raw + pw.tail_bound + slack);
  if (result.value.hi < result.value.lo) result.value.hi = result.value.lo;

  if (model.is_game()) result.pair = detail::split_by_player(model, result.scheduler);
  return result;
}

constexpr std::uint64_t kEnumerationBudget = 10'000'000;

// Exhaustive search over deterministic preamble tables with a greedy tail.
// For games the result is the pair realizing max over maximiser tables of
// min over minimiser tables.
inline SynthesisResult synth_enumerate(const CtmdpModel& model, const Rational& t,
                                       double epsilon, std::size_t preamble,
                                       bool exact_steps = false) {
  if (t < 0) throw DomainError("time bound must be nonnegative");
  const bool uniform = is_uniform(model).has_value();
  const double td = to_double(t);
  const std::vector<int> tail = detail::projected_standard_greedy(model);

  Rational rate;
  std::optional<Rational> mu;
  if (const auto lambda = is_uniform(model)) {
    rate = *lambda;
    mu = greedy_analysis(model).discriminator;
  } else {
    const UniformisationResult u = uniformise(model);
    rate = u.rate;
    mu = greedy_analysis(u.uniform_model).discriminator;
  }
  const GreedBound bound = greed_bound(rate, mu, t);

  SynthesisResult result;
  result.method = SynthesisMethod::Enumerate;
  result.greed_bound_used = bound;
  result.preamble_depth = preamble;

  if (!model.is_game()) {
    const auto points = detail::decision_points(model, preamble, std::nullopt);
    detail::Odometer odo(points);
    if (odo.count() > kEnumerationBudget)
      throw DomainError("enumeration budget exceeded: " +
                        std::to_string(odo.count()) + " candidates");
    std::optional<double> best_mid;
    std::vector<std::pair<std::vector<int>, double>> seen;
    do {
      std::vector<int> choices(points.size());
      for (std::size_t i = 0; i < points.size(); ++i) choices[i] = odo.choice(i);
      const Scheduler s =
          detail::candidate_scheduler(model, preamble, tail, points, choices);
      const ValueInterval v =
          detail::evaluate_candidate(model, s, td, epsilon, uniform, exact_steps);
      if (seen.size() < 1'000'000) seen.emplace_back(choices, v.mid());
      if (!best_mid || v.mid() > *best_mid) {
        best_mid = v.mid();
        result.scheduler = s;
        result.value = v;
      }
    } while (odo.advance());
    for (const auto& [choices, mid] : seen)
      if (mid >= *best_mid - 2 * epsilon && mid != *best_mid)
        result.ties.push_back(
            detail::candidate_scheduler(model, preamble, tail, points, choices));
    return result;
  }

  // Game: max over Max-tables of min over Min-tables.
  const auto max_points = detail::decision_points(model, preamble, Player::Max);
  const auto min_points = detail::decision_points(model, preamble, Player::Min);
  detail::Odometer max_odo(max_points);
  const std::uint64_t total = max_odo.count() * detail::Odometer(min_points).count();
  if (total > kEnumerationBudget)
    throw DomainError("enumeration budget exceeded: " + std::to_string(total) +
                      " candidates");

  std::optional<double> best_mid;
  do {
    std::vector<int> max_choices(max_points.size());
    for (std::size_t i = 0; i < max_points.size(); ++i)
      max_choices[i] = max_odo.choice(i);

    detail::Odometer min_odo(min_points);
    std::optional<double> worst_mid;
    Scheduler worst_s;
    ValueInterval worst_v;
    do {
      std::vector<int> choices = max_choices;
      std::vector<detail::DecisionPoint> points = max_points;
      for (std::size_t i = 0; i < min_points.size(); ++i) {
        points.push_back(min_points[i]);
        choices.push_back(min_odo.choice(i));
      }
      const Scheduler s =
          detail::candidate_scheduler(model, preamble, tail, points, choices);
      const ValueInterval v =
          detail::evaluate_candidate(model, s, td, epsilon, uniform, exact_steps);
      if (!worst_mid || v.mid() < *worst_mid) {
        worst_mid = v.mid();
        worst_s = s;
        worst_v = v;
      }
    } while (min_odo.advance());

    if (!best_mid || *worst_mid > *best_mid) {
      best_mid = *worst_mid;
      result.scheduler = worst_s;
      result.value = worst_v;
    }
  } while (max_odo.advance());

  result.pair = detail::split_by_player(model, result.scheduler);
  return result;
}

// Replaces randomized decisions one at a time (increasing step index, then
// location order, tail last) by the pure action that is best for the owning
// player under evaluate_general.
inline Scheduler determinise(const CtmdpModel& model, const Scheduler& scheduler,
                             const Rational& t, double epsilon,
                             bool exact_steps = false) {
  const double td = to_double(t);
  Scheduler result = scheduler;
  const std::size_t tables = result.preamble.size() + 1;
  for (std::size_t step = 0; step < tables; ++step) {
    auto& table = step < result.preamble.size() ? result.preamble[step] : result.tail;
    for (std::size_t l = 0; l < table.size(); ++l) {
      if (table[l].empty() || decision_deterministic(table[l])) continue;
      const bool maximise = model.locations[l].player == Player::Max;
      std::optional<double> best;
      Decision chosen;
      for (const auto& [a, w] : table[l]) {
        if (w == 0) continue;
        Scheduler candidate = result;
        auto& cell = step < candidate.preamble.size()
                         ? candidate.preamble[step][l]
                         : candidate.tail[l];
        cell = pure(a);
        const double v =
            evaluate_general(model, candidate, td, epsilon, exact_steps).mid();
        if (!best || (maximise ? v > *best : v < *best)) {
          best = v;
          chosen = pure(a);
        }
      }
      table[l] = chosen;
    }
  }
  return result;
}

struct SaddleReport {
  ValueInterval sup_inf;
  ValueInterval inf_sup;
};

// Both optimization orders over greedy-tailed preamble tables, as a
// saddle point check.
inline SaddleReport check_saddle(const CtmdpModel& game, const Rational& t,
                                 std::size_t preamble, double epsilon,
                                 bool exact_steps = false) {
  const bool uniform = is_uniform(game).has_value();
  const double td = to_double(t);
  const std::vector<int> tail = detail::projected_standard_greedy(game);
  const auto max_points = detail::decision_points(game, preamble, Player::Max);
  const auto min_points = detail::decision_points(game, preamble, Player::Min);

  const std::uint64_t total =
      detail::Odometer(max_points).count() * detail::Odometer(min_points).count();
  if (total > kEnumerationBudget)
    throw DomainError("enumeration budget exceeded: " + std::to_string(total) +
                      " candidates");

  const auto inner_opt = [&](const std::vector<detail::DecisionPoint>& outer_points,
                             const std::vector<int>& outer_choices,
                             const std::vector<detail::DecisionPoint>& inner_points,
                             bool inner_max) {
    detail::Odometer odo(inner_points);
    std::optional<double> best;
    ValueInterval best_v;
    do {
      std::vector<int> choices = outer_choices;
      std::vector<detail::DecisionPoint> points = outer_points;
      for (std::size_t i = 0; i < inner_points.size(); ++i) {
        points.push_back(inner_points[i]);
        choices.push_back(odo.choice(i));
      }
      const Scheduler s =
          detail::candidate_scheduler(game, preamble, tail, points, choices);
      const ValueInterval v =
          detail::evaluate_candidate(game, s, td, epsilon, uniform, exact_steps);
      if (!best || (inner_max ? v.mid() > *best : v.mid() < *best)) {
        best = v.mid();
        best_v = v;
      }
    } while (odo.advance());
    return best_v;
  };

  const auto outer_opt = [&](const std::vector<detail::DecisionPoint>& outer_points,
                             const std::vector<detail::DecisionPoint>& inner_points,
                             bool outer_max) {
    detail::Odometer odo(outer_points);
    std::optional<double> best;
    ValueInterval best_v;
    do {
      std::vector<int> choices(outer_points.size());
      for (std::size_t i = 0; i < outer_points.size(); ++i) choices[i] = odo.choice(i);
      const ValueInterval v =
          inner_opt(outer_points, choices, inner_points, !outer_max);
      if (!best || (outer_max ? v.mid() > *best : v.mid() < *best)) {
        best = v.mid();
        best_v = v;
      }
    } while (odo.advance());
    return best_v;
  };

  SaddleReport report;
  report.sup_inf = outer_opt(max_points, min_points, /*outer_max=*/true);
  report.inf_sup = outer_opt(min_points, max_points, /*outer_max=*/false);
  return report;
}

}  // namespace ctmdp

#endif  // CTMDP_SYNTHESIS_HPP

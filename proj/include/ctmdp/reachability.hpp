#ifndef CTMDP_REACHABILITY_HPP
#define CTMDP_REACHABILITY_HPP

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <tuple>
#include <string>
#include <utility>
#include <vector>

#include "ctmdp/model.hpp"
#include "ctmdp/poisson.hpp"
#include "ctmdp/scheduler.hpp"
#include "ctmdp/uniformise.hpp"

namespace ctmdp {

// Certified enclosure of a time-bounded reachability probability. The true
// value lies in [lo, hi]: the Poisson truncation tail is charged to hi and
// floating-point slack is rounded outward on both ends.
struct ValueInterval {
  double lo = 0;
  double hi = 0;
  double slack = 0;  // rounding slack already folded into lo/hi

  double width() const { return hi - lo; }
  double mid() const { return 0.5 * (lo + hi); }
};

// Adapts a counting scheduler to the history interface used by the
// simulator and by path probabilities.
struct CountingDecider {
  const Scheduler* scheduler;
  Decision decide(const TimeAbstractPath& history) const {
    return scheduler->decide(history.length(), history.last());
  }
};

namespace detail {

template <typename Scalar>
using SparseRow = std::vector<std::pair<int, Scalar>>;
template <typename Scalar>
using SparseMat = std::vector<SparseRow<Scalar>>;

inline double scalar_to_double(double v) { return v; }
inline double scalar_to_double(const Rational& v) { return to_double(v); }

// One synchronous sweep of the forward recursion; goal states carry
// identity rows so accumulated goal mass is preserved (absorbing goals).
template <typename Scalar>
std::vector<Scalar> sweep(const std::vector<Scalar>& dist,
                          const SparseMat<Scalar>& matrix) {
  std::vector<Scalar> next(dist.size(), Scalar(0));
  for (std::size_t s = 0; s < dist.size(); ++s) {
    if (dist[s] == Scalar(0)) continue;
    for (const auto& [to, p] : matrix[s]) next[to] += dist[s] * p;
  }
  return next;
}

template <typename Scalar>
Scalar goal_mass(const std::vector<Scalar>& dist, const std::vector<char>& goal) {
  Scalar mass(0);
  for (std::size_t s = 0; s < dist.size(); ++s)
    if (goal[s]) mass += dist[s];
  return mass;
}

// d_nu[0..n_steps] for a step-indexed chain: matrix_at(i) is applied at
// sweep i. Returned as doubles regardless of the working scalar.
template <typename Scalar, typename MatrixAt>
std::vector<double> goal_mass_sequence(std::vector<Scalar> dist,
                                       const std::vector<char>& goal,
                                       std::size_t n_steps, MatrixAt&& matrix_at) {
  std::vector<double> d(n_steps + 1, 0.0);
  d[0] = scalar_to_double(goal_mass(dist, goal));
  for (std::size_t i = 0; i < n_steps; ++i) {
    dist = sweep(dist, matrix_at(i));
    d[i + 1] = scalar_to_double(goal_mass(dist, goal));
  }
  return d;
}

// Embedded one-step matrix under the decision table of one step index.
template <typename Scalar>
SparseMat<Scalar> step_matrix(const CtmdpModel& model, const EmbeddedDtmc& dtmc,
                              const Scheduler& scheduler, std::size_t step) {
  const std::size_t nl = model.locations.size();
  SparseMat<Scalar> matrix(nl);
  for (std::size_t l = 0; l < nl; ++l) {
    if (model.locations[l].goal) {
      matrix[l] = {{static_cast<int>(l), Scalar(1)}};
      continue;
    }
    std::map<int, Rational> row;
    for (const auto& [a, w] : scheduler.decide(step, static_cast<int>(l))) {
      if (w == 0) continue;
      if (!dtmc.enabled(static_cast<int>(l), a))
        throw DomainError("scheduler selects non-enabled action '" +
                          model.actions[a] + "' at " + model.locations[l].id);
      for (const auto& [to, p] : dtmc.rows[l][a]) row[to] += w * p;
    }
    if (row.empty())
      throw DomainError("scheduler has no decision at " + model.locations[l].id);
    for (const auto& [to, p] : row)
      matrix[l].emplace_back(to, Scalar(detail::scalar_to_double(p)));
  }
  return matrix;
}

template <>
inline SparseMat<Rational> step_matrix<Rational>(const CtmdpModel& model,
                                                 const EmbeddedDtmc& dtmc,
                                                 const Scheduler& scheduler,
                                                 std::size_t step) {
  const std::size_t nl = model.locations.size();
  SparseMat<Rational> matrix(nl);
  for (std::size_t l = 0; l < nl; ++l) {
    if (model.locations[l].goal) {
      matrix[l] = {{static_cast<int>(l), Rational(1)}};
      continue;
    }
    std::map<int, Rational> row;
    for (const auto& [a, w] : scheduler.decide(step, static_cast<int>(l))) {
      if (w == 0) continue;
      if (!dtmc.enabled(static_cast<int>(l), a))
        throw DomainError("scheduler selects non-enabled action '" +
                          model.actions[a] + "' at " + model.locations[l].id);
      for (const auto& [to, p] : dtmc.rows[l][a]) row[to] += w * p;
    }
    if (row.empty())
      throw DomainError("scheduler has no decision at " + model.locations[l].id);
    for (const auto& [to, p] : row) matrix[l].emplace_back(to, p);
  }
  return matrix;
}

// Pairs d_nu with the Poisson weights and rounds outward.
inline ValueInterval assemble_interval(const std::vector<double>& d,
                                       const PoissonWeights& pw) {
  if (d[0] == 1.0) return ValueInterval{1.0, 1.0, 0.0};  // goal-initial
  double lo = 0;
  for (std::size_t i = 0; i <= pw.n_max; ++i) lo += d[i] * pw.weights[i];
  const double slack = pw.slack + static_cast<double>(pw.n_max) * 1e-16;
  ValueInterval result;
  result.slack = slack;
  result.lo = std::max(0.0, lo - slack);
  result.hi = std::min(1.0, lo + pw.tail_bound + slack);
  if (result.hi < result.lo) result.hi = result.lo;
  return result;
}

template <typename Scalar>
std::vector<double> uniform_goal_masses(const CtmdpModel& model,
                                        const Scheduler& scheduler,
                                        std::size_t n_steps,
                                        std::size_t cap_at = SIZE_MAX) {
  const EmbeddedDtmc dtmc = embedded_probabilities(model);
  const std::size_t distinct = std::min(scheduler.preamble_depth(), n_steps);
  std::vector<SparseMat<Scalar>> matrices;
  matrices.reserve(distinct + 1);
  for (std::size_t i = 0; i < distinct; ++i)
    matrices.push_back(step_matrix<Scalar>(model, dtmc, scheduler, i));
  matrices.push_back(
      step_matrix<Scalar>(model, dtmc, scheduler, scheduler.preamble_depth()));

  std::vector<Scalar> dist(model.locations.size(), Scalar(0));
  for (const auto& [l, p] : model.initial) dist[l] += Scalar(scalar_to_double(p));
  std::vector<char> goal(model.locations.size(), 0);
  for (std::size_t l = 0; l < model.locations.size(); ++l)
    goal[l] = model.locations[l].goal;

  const std::size_t sweeps = std::min(n_steps, cap_at);
  auto d = goal_mass_sequence(std::move(dist), goal, sweeps, [&](std::size_t i) ->
                              const SparseMat<Scalar>& {
    return matrices[std::min(i, distinct)];
  });
  d.resize(n_steps + 1, d.back());
  return d;
}

template <>
inline std::vector<double> uniform_goal_masses<Rational>(const CtmdpModel& model,
                                                         const Scheduler& scheduler,
                                                         std::size_t n_steps,
                                                         std::size_t cap_at) {
  const EmbeddedDtmc dtmc = embedded_probabilities(model);
  const std::size_t distinct = std::min(scheduler.preamble_depth(), n_steps);
  std::vector<SparseMat<Rational>> matrices;
  matrices.reserve(distinct + 1);
  for (std::size_t i = 0; i < distinct; ++i)
    matrices.push_back(step_matrix<Rational>(model, dtmc, scheduler, i));
  matrices.push_back(
      step_matrix<Rational>(model, dtmc, scheduler, scheduler.preamble_depth()));

  std::vector<Rational> dist(model.locations.size(), Rational(0));
  for (const auto& [l, p] : model.initial) dist[l] += p;
  std::vector<char> goal(model.locations.size(), 0);
  for (std::size_t l = 0; l < model.locations.size(); ++l)
    goal[l] = model.locations[l].goal;

  const std::size_t sweeps = std::min(n_steps, cap_at);
  auto d = goal_mass_sequence(std::move(dist), goal, sweeps, [&](std::size_t i) ->
                              const SparseMat<Rational>& {
    return matrices[std::min(i, distinct)];
  });
  d.resize(n_steps + 1, d.back());
  return d;
}

}  // namespace detail

inline Rational require_uniform(const CtmdpModel& model) {
  const auto lambda = is_uniform(model);
  if (!lambda) throw DomainError("model is not uniform");
  return *lambda;
}

// Poisson-weighted evaluation for a uniform model under a counting scheduler:
// lo = sum_{i<=n_max} d_nu[i] * p_{lt}(i), hi adds the truncated tail.
inline ValueInterval evaluate_uniform(const CtmdpModel& model,
                                      const Scheduler& scheduler, double t,
                                      double epsilon, bool exact_steps = false) {
  if (t < 0) throw DomainError("time bound must be nonnegative");
  const Rational lambda = require_uniform(model);
  const auto problems = check_scheduler(model, scheduler);
  if (!problems.empty()) throw DomainError(problems.front());
  const PoissonWeights pw = poisson_weights(to_double(lambda) * t, epsilon);
  const auto d =
      exact_steps
          ? detail::uniform_goal_masses<Rational>(model, scheduler, pw.n_max)
          : detail::uniform_goal_masses<double>(model, scheduler, pw.n_max);
  return detail::assemble_interval(d, pw);
}

// The same sum with the step count capped at k:
// sum_n p_{lt}(n) * d_nu[min(n,k)].
inline ValueInterval step_bounded(const CtmdpModel& model, const Scheduler& scheduler,
                                  double t, std::size_t k, double epsilon,
                                  bool exact_steps = false) {
  if (t < 0) throw DomainError("time bound must be nonnegative");
  const Rational lambda = require_uniform(model);
  if (k == 0) {
    // No discrete step allowed: the value is the initial goal mass exactly.
    const double v = to_double(model.initial_goal_mass());
    return {v, v, 0.0};
  }
  const PoissonWeights pw = poisson_weights(to_double(lambda) * t, epsilon);
  auto d = exact_steps
               ? detail::uniform_goal_masses<Rational>(model, scheduler, pw.n_max, k)
               : detail::uniform_goal_masses<double>(model, scheduler, pw.n_max, k);
  for (std::size_t i = std::min(k, pw.n_max) + 1; i <= pw.n_max; ++i)
    d[i] = d[std::min(i, k)];
  return detail::assemble_interval(d, pw);
}

// Evaluation of a lifted (visible-counting) scheduler over a uniformisation:
// the forward recursion runs on the product of U-locations with the number
// of visible steps, capped at the preamble depth.
inline ValueInterval evaluate_uniform(const UniformisationResult& u,
                                      const LiftedScheduler& lifted, double t,
                                      double epsilon, bool exact_steps = false) {
  if (t < 0) throw DomainError("time bound must be nonnegative");
  const Scheduler& base = *lifted.base;
  const CtmdpModel& um = u.uniform_model;
  const std::size_t cap = base.preamble_depth();
  const std::size_t nl = um.locations.size();
  const std::size_t n_states = nl * (cap + 1);
  const auto state = [&](int loc, std::size_t v) {
    return static_cast<int>(static_cast<std::size_t>(loc) * (cap + 1) + v);
  };

  const PoissonWeights pw =
      poisson_weights(to_double(require_uniform(um)) * t, epsilon);
  const EmbeddedDtmc dtmc = embedded_probabilities(um);

  // Product step matrices, one per visible count (the matrix depends on the
  // count only, never on the total step index).
  std::vector<detail::SparseMat<Rational>> matrices(cap + 1,
                                                    detail::SparseMat<Rational>(n_states));
  for (std::size_t v = 0; v <= cap; ++v)
    for (std::size_t l = 0; l < nl; ++l) {
      auto& row = matrices[v][state(static_cast<int>(l), v)];
      if (um.locations[l].goal) {
        row = {{state(static_cast<int>(l), v), Rational(1)}};
        continue;
      }
      for (const auto& [a, w] : base.decide(v, u.base_of(static_cast<int>(l)))) {
        if (w == 0) continue;
        if (!dtmc.enabled(static_cast<int>(l), a))
          throw DomainError("lifted scheduler selects non-enabled action at " +
                            um.locations[l].id);
        for (const auto& [to, p] : dtmc.rows[l][a]) {
          const std::size_t v2 = u.observable(to) ? std::min(v + 1, cap) : v;
          bool merged = false;
          for (auto& [s2, q] : row)
            if (s2 == state(to, v2)) {
              q += w * p;
              merged = true;
              break;
            }
          if (!merged) row.emplace_back(state(to, v2), w * p);
        }
      }
    }

  std::vector<char> goal(n_states, 0);
  for (std::size_t l = 0; l < nl; ++l)
    if (um.locations[l].goal)
      for (std::size_t v = 0; v <= cap; ++v) goal[state(static_cast<int>(l), v)] = 1;

  // Each product state's row lives at exactly one visible count, so the
  // per-count matrices merge into a single step-independent matrix.
  std::vector<double> d;
  detail::SparseMat<Rational> merged(n_states);
  for (std::size_t v = 0; v <= cap; ++v)
    for (std::size_t s = 0; s < n_states; ++s)
      if (!matrices[v][s].empty() && s % (cap + 1) == v) merged[s] = matrices[v][s];

  if (exact_steps) {
    std::vector<Rational> dist(n_states, Rational(0));
    for (const auto& [l, p] : um.initial) dist[state(l, 0)] += p;
    d = detail::goal_mass_sequence(std::move(dist), goal, pw.n_max,
                                   [&](std::size_t) -> const detail::SparseMat<Rational>& {
                                     return merged;
                                   });
  } else {
    detail::SparseMat<double> merged_d(n_states);
    for (std::size_t s = 0; s < n_states; ++s)
      for (const auto& [to, p] : merged[s])
        merged_d[s].emplace_back(to, to_double(p));
    std::vector<double> dist(n_states, 0.0);
    for (const auto& [l, p] : um.initial) dist[state(l, 0)] += to_double(p);
    d = detail::goal_mass_sequence(std::move(dist), goal, pw.n_max,
                                   [&](std::size_t) -> const detail::SparseMat<double>& {
                                     return merged_d;
                                   });
  }
  return detail::assemble_interval(d, pw);
}

// Evaluation for general (not necessarily uniform) models: the scheduler
// induces a finite continuous-time Markov chain on (location, chosen
// action, capped step count) states, which is uniformised and evaluated
// with the uniform machinery.
inline ValueInterval evaluate_general(const CtmdpModel& model,
                                      const Scheduler& scheduler, double t,
                                      double epsilon, bool exact_steps = false) {
  if (t < 0) throw DomainError("time bound must be nonnegative");
  const auto problems = check_scheduler(model, scheduler);
  if (!problems.empty()) throw DomainError(problems.front());
  const std::size_t cap = scheduler.preamble_depth();

  // State keys: (location, action, count) for non-goal states, (location,
  // -1, 0) for goal states (collapsed; the goal region is absorbing).
  using Key = std::tuple<int, int, std::size_t>;
  std::map<Key, int> index;
  std::vector<Key> keys;
  const auto intern = [&](const Key& key) {
    auto it = index.find(key);
    if (it != index.end()) return it->second;
    const int id = static_cast<int>(keys.size());
    index.emplace(key, id);
    keys.push_back(key);
    return id;
  };

  CtmdpModel chain;
  chain.name = "induced";
  chain.actions = {"step"};

  Rational max_exit = 1;
  for (std::size_t l = 0; l < model.locations.size(); ++l)
    for (std::size_t a = 0; a < model.actions.size(); ++a)
      max_exit = std::max(max_exit, model.exit_rate(static_cast<int>(l),
                                                    static_cast<int>(a)));

  const auto enter = [&](int loc, std::size_t count,
                         std::vector<std::pair<int, Rational>>& out,
                         const Rational& mass) {
    if (model.locations[loc].goal) {
      out.emplace_back(intern({loc, -1, 0}), mass);
      return;
    }
    for (const auto& [a, w] : scheduler.decide(count, loc)) {
      if (w == 0) continue;
      if (!model.enabled(loc, a))
        throw DomainError("scheduler selects non-enabled action '" +
                          model.actions[a] + "' at " + model.locations[loc].id);
      out.emplace_back(intern({loc, a, count}), mass * w);
    }
  };

  std::vector<std::pair<int, Rational>> initial;
  for (const auto& [l, p] : model.initial)
    if (p > 0) enter(l, 0, initial, p);

  for (std::size_t s = 0; s < keys.size(); ++s) {  // keys grows during the scan
    const auto [loc, action, count] = keys[s];
    std::vector<std::pair<int, Rational>> successors;
    if (action < 0) {
      successors.emplace_back(static_cast<int>(s), max_exit);  // absorbing loop
    } else {
      const std::size_t next_count = std::min(count + 1, cap);
      for (const auto& tr : model.transitions) {
        if (tr.from != loc || tr.action != action || tr.rate == 0) continue;
        enter(tr.to, next_count, successors, tr.rate);
      }
    }
    for (const auto& [to, rate] : successors) {
      Transition tr;
      tr.from = static_cast<int>(s);
      tr.action = 0;
      tr.to = to;
      tr.rate = rate;
      // merge parallel edges produced by randomized decisions
      bool merged = false;
      for (auto& existing : chain.transitions)
        if (existing.from == tr.from && existing.to == tr.to) {
          existing.rate += tr.rate;
          merged = true;
          break;
        }
      if (!merged) chain.transitions.push_back(tr);
    }
  }

  chain.locations.resize(keys.size());
  for (std::size_t s = 0; s < keys.size(); ++s) {
    const auto [loc, action, count] = keys[s];
    chain.locations[s].id = "s" + std::to_string(s);
    chain.locations[s].goal = action < 0;
  }
  std::map<int, Rational> init_mass;
  for (const auto& [s, p] : initial) init_mass[s] += p;
  for (const auto& [s, p] : init_mass) chain.initial.emplace_back(s, p);

  const UniformisationResult u = uniformise(chain);
  Scheduler trivial;
  trivial.tail.assign(u.uniform_model.locations.size(), pure(0));
  return evaluate_uniform(u.uniform_model, trivial, t, epsilon, exact_steps);
}

// Probability of traversing a time-abstract path within time t on a uniform
// model, conditional on starting at path.start.
template <typename Decider>
double path_probability(const CtmdpModel& model, const Decider& decider,
                        const TimeAbstractPath& path, double t) {
  if (!path_valid(model, path)) throw DomainError("path invalid in model");
  const Rational lambda = require_uniform(model);
  const EmbeddedDtmc dtmc = embedded_probabilities(model);

  Rational product = 1;
  TimeAbstractPath prefix;
  prefix.start = path.start;
  for (const auto& step : path.steps) {
    const int at = prefix.last();
    const Decision choice = decider.decide(prefix);
    Rational weight = 0;
    for (const auto& [a, w] : choice)
      if (a == step.action) weight += w;
    Rational p = 0;
    for (const auto& [to, q] : dtmc.rows[at][step.action])
      if (to == step.to) p = q;
    product *= weight * p;
    prefix.steps.push_back(step);
    if (product == 0) return 0;
  }

  const double lt = to_double(lambda) * t;
  const PoissonWeights pw = poisson_weights(lt, 1e-14);
  double below = 0;
  for (std::size_t i = 0; i < path.length() && i <= pw.n_max; ++i)
    below += pw.weights[i];
  const double at_least = std::clamp(1.0 - below, 0.0, 1.0);
  return to_double(product) * at_least;
}

inline double path_probability(const CtmdpModel& model, const Scheduler& scheduler,
                               const TimeAbstractPath& path, double t) {
  return path_probability(model, CountingDecider{&scheduler}, path, t);
}

}  // namespace ctmdp

#endif  // CTMDP_REACHABILITY_HPP

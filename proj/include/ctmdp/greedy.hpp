#ifndef CTMDP_GREEDY_HPP
#define CTMDP_GREEDY_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "ctmdp/model.hpp"
#include "ctmdp/scheduler.hpp"

namespace ctmdp {

// Step probability vector: entry i is the probability of reaching the goal
// region within i discrete steps, ignoring time. Entry 0 is the goal
// indicator; entries are nondecreasing. Worked one-step examples list vectors
// from the one-step entry, so comparisons against printed prefixes use
// entries 1..n.
using StepVector = std::vector<Rational>;

inline StepVector shift(const StepVector& v) {
  if (v.size() < 2) throw DomainError("shift requires a vector of length >= 2");
  return StepVector(v.begin() + 1, v.end());
}

// d_{l,S} for a positional (possibly randomized) scheduler, exact, with
// entries 0..depth.
inline std::vector<StepVector> step_vector(const CtmdpModel& model,
                                           const Scheduler& scheduler,
                                           std::size_t depth) {
  const std::size_t nl = model.locations.size();
  const EmbeddedDtmc dtmc = embedded_probabilities(model);

  std::vector<StepVector> d(nl, StepVector(depth + 1, Rational(0)));
  for (std::size_t l = 0; l < nl; ++l)
    if (model.locations[l].goal)
      for (std::size_t i = 0; i <= depth; ++i) d[l][i] = 1;

  for (std::size_t i = 1; i <= depth; ++i)
    for (std::size_t l = 0; l < nl; ++l) {
      if (model.locations[l].goal) continue;
      Rational value = 0;
      const Decision& choice = scheduler.decide(0, static_cast<int>(l));
      for (const auto& [a, w] : choice) {
        if (w == 0) continue;
        if (!dtmc.enabled(static_cast<int>(l), a))
          throw DomainError("scheduler selects non-enabled action '" +
                            model.actions[a] + "' at " + model.locations[l].id);
        for (const auto& [succ, p] : dtmc.rows[l][a]) value += w * p * d[succ][i - 1];
      }
      d[l][i] = value;
    }
  return d;
}

// Lexicographic suprema d_l = sup_S d_{l,S}, entries 0..depth. Computed by
// value iteration with candidate restriction: an action that falls strictly
// behind the lexicographic optimum at some index can never catch up, so it
// is removed from the candidate set of its location. opt is max at
// player-Max and min at player-Min locations.
inline std::vector<StepVector> sup_step_vectors(const CtmdpModel& model,
                                                std::size_t depth) {
  const std::size_t nl = model.locations.size();
  const EmbeddedDtmc dtmc = embedded_probabilities(model);

  std::vector<StepVector> d(nl, StepVector(depth + 1, Rational(0)));
  std::vector<std::vector<int>> candidates(nl);
  for (std::size_t l = 0; l < nl; ++l) {
    if (model.locations[l].goal)
      for (std::size_t i = 0; i <= depth; ++i) d[l][i] = 1;
    candidates[l] = model.enabled_actions(static_cast<int>(l));
  }

  for (std::size_t i = 1; i <= depth; ++i)
    for (std::size_t l = 0; l < nl; ++l) {
      if (model.locations[l].goal) continue;
      const bool maximise = model.locations[l].player == Player::Max;
      std::optional<Rational> best;
      std::vector<Rational> values(candidates[l].size());
      for (std::size_t c = 0; c < candidates[l].size(); ++c) {
        Rational value = 0;
        for (const auto& [succ, p] : dtmc.rows[l][candidates[l][c]])
          value += p * d[succ][i - 1];
        values[c] = value;
        if (!best || (maximise ? value > *best : value < *best)) best = value;
      }
      d[l][i] = *best;
      std::vector<int> survivors;
      for (std::size_t c = 0; c < candidates[l].size(); ++c)
        if (values[c] == *best) survivors.push_back(candidates[l][c]);
      candidates[l] = std::move(survivors);
    }
  return d;
}

struct GreedyAnalysis {
  std::size_t depth = 1;
  std::vector<StepVector> sup_vectors;                    // entries 0..depth+1
  std::vector<std::vector<StepVector>> action_vectors;    // [l][a], next-step indexing
  std::vector<std::vector<int>> greedy_actions;           // per location
  std::vector<int> standard_greedy;                       // per location
  std::optional<Rational> discriminator;
  bool depth_escalated = false;
};

namespace detail {

// Lexicographic comparison; returns -1, 0, +1.
inline int lex_compare(const StepVector& a, const StepVector& b) {
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i] < b[i]) return -1;
    if (a[i] > b[i]) return 1;
  }
  return 0;
}

inline GreedyAnalysis greedy_analysis_at_depth(const CtmdpModel& model,
                                               std::size_t depth) {
  const std::size_t nl = model.locations.size();
  const EmbeddedDtmc dtmc = embedded_probabilities(model);

  GreedyAnalysis ga;
  ga.depth = depth;
  ga.sup_vectors = sup_step_vectors(model, depth + 1);

  ga.action_vectors.assign(nl, {});
  ga.greedy_actions.assign(nl, {});
  ga.standard_greedy.assign(nl, -1);
  for (std::size_t l = 0; l < nl; ++l) {
    const auto enabled = model.enabled_actions(static_cast<int>(l));
    ga.action_vectors[l].assign(model.actions.size(), StepVector{});
    for (int a : enabled) {
      StepVector v(depth + 1, Rational(0));
      for (std::size_t i = 0; i <= depth; ++i)
        for (const auto& [succ, p] : dtmc.rows[l][a])
          v[i] += p * ga.sup_vectors[succ][i];
      ga.action_vectors[l][a] = std::move(v);
    }

    if (model.locations[l].goal) {
      ga.greedy_actions[l] = enabled;
      ga.standard_greedy[l] = enabled.front();
      continue;
    }
    const bool maximise = model.locations[l].player == Player::Max;
    const StepVector* best = nullptr;
    for (int a : enabled) {
      const StepVector& v = ga.action_vectors[l][a];
      if (!best) {
        best = &v;
        continue;
      }
      const int cmp = lex_compare(v, *best);
      if (maximise ? cmp > 0 : cmp < 0) best = &v;
    }
    for (int a : enabled)
      if (lex_compare(ga.action_vectors[l][a], *best) == 0)
        ga.greedy_actions[l].push_back(a);
    ga.standard_greedy[l] = ga.greedy_actions[l].front();
  }

  // Discriminator: minimal first-index advantage of a greedy decision over
  // any non-greedy one, on the aligned pair (shift(d_l), d_{l,a}).
  std::optional<Rational> mu;
  for (std::size_t l = 0; l < nl; ++l) {
    if (model.locations[l].goal) continue;
    const StepVector shifted = shift(ga.sup_vectors[l]);
    const bool maximise = model.locations[l].player == Player::Max;
    for (int a : model.enabled_actions(static_cast<int>(l))) {
      if (std::find(ga.greedy_actions[l].begin(), ga.greedy_actions[l].end(), a) !=
          ga.greedy_actions[l].end())
        continue;
      const StepVector& va = ga.action_vectors[l][a];
      for (std::size_t i = 0; i <= depth; ++i) {
        const Rational diff = maximise ? shifted[i] - va[i] : va[i] - shifted[i];
        if (diff != 0) {
          if (!mu || diff < *mu) mu = diff;
          break;
        }
      }
    }
  }
  ga.discriminator = mu;
  return ga;
}

}  // namespace detail

// Greedy analysis at comparison depth max(1, |L|-2). The depth bound is
// cross-checked at 3|L|; if the action sets ever differ, the deeper
// analysis wins and the escalation is flagged.
inline GreedyAnalysis greedy_analysis(const CtmdpModel& model) {
  const std::size_t nl = model.locations.size();
  const std::size_t depth = std::max<std::size_t>(1, nl >= 2 ? nl - 2 : 1);
  GreedyAnalysis ga = detail::greedy_analysis_at_depth(model, depth);
  GreedyAnalysis deep = detail::greedy_analysis_at_depth(model, 3 * nl);
  if (deep.greedy_actions != ga.greedy_actions) {
    deep.depth_escalated = true;
    return deep;
  }
  return ga;
}

struct GreedBound {
  std::uint64_t coarse = 0;
  std::uint64_t refined = 0;
};

// Greed bound n_M: coarse 2*lambda*t/mu; the refined variant
// lambda*t*(1+mu)/mu already satisfies the tail inequality
// mu * p_{lt}(n) >= sum_{i>=1} p_{lt}(n+i) because the Poisson
// tail-to-mass ratio is decreasing in n and bounded by r/(1-r) for
// r = lambda*t/(n+1) <= mu/(1+mu).
inline GreedBound greed_bound(const Rational& lambda,
                              const std::optional<Rational>& mu,
                              const Rational& t) {
  if (lambda <= 0) throw DomainError("greed bound requires lambda > 0");
  if (t < 0) throw DomainError("greed bound requires t >= 0");
  if (!mu) return GreedBound{0, 0};  // every action greedy, no deviation exists
  if (*mu <= 0 || *mu > 1) throw DomainError("discriminator must lie in (0, 1]");
  GreedBound b;
  b.coarse = ceil_to_u64(2 * lambda * t / *mu);
  b.refined = ceil_to_u64(lambda * t * (1 + *mu) / *mu);
  return b;
}

// Checks the tail inequality mu * p_{lt}(n) >= sum_{i>=1} p_{lt}(n+i), evaluated
// as the tail-to-mass ratio sum_{i>=1} prod_{j<=i} lt/(n+j) with an outward
// geometric bound for terms beyond the horizon. The ratio terms decrease in
// n, so a pass at n extends to all m >= n.
inline bool check_greed_bound(const Rational& lambda_t, const Rational& mu,
                              std::uint64_t n, std::uint64_t horizon) {
  if (mu <= 0 || mu > 1) throw DomainError("discriminator must lie in (0, 1]");
  const double lt = to_double(lambda_t);
  if (lt == 0) return true;

  double ratio_sum = 0;
  double term = 1;
  const std::uint64_t steps = horizon > n ? horizon - n : 0;
  std::uint64_t i = 0;  // index of the last computed ratio term
  while (i < steps) {
    ++i;
    term *= lt / static_cast<double>(n + i);
    ratio_sum += term;
    if (term < 1e-18 * (ratio_sum + 1)) break;
  }
  const double r = lt / static_cast<double>(n + i + 1);  // first omitted term
  if (r >= 1) return false;  // geometric bound unavailable, cannot certify
  const double beyond = term * r / (1 - r);
  const double rhs_upper = (ratio_sum + beyond) * (1 + 1e-12);
  const double lhs_lower = to_double(mu) * (1 - 1e-12);
  return lhs_lower >= rhs_upper;
}

}  // namespace ctmdp

#endif  // CTMDP_GREEDY_HPP

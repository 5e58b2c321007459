#ifndef CTMDP_UNIFORMISE_HPP
#define CTMDP_UNIFORMISE_HPP

#include <optional>
#include <string>
#include <vector>

#include "ctmdp/model.hpp"
#include "ctmdp/scheduler.hpp"

namespace ctmdp {

// The uniformisation U of a model M. Observable locations keep their
// indices from M; the unobservable copy of location i sits at index
// n_observable + i and carries the reserved id suffix "__u".
struct UniformisationResult {
  CtmdpModel uniform_model;
  Rational rate;                 // uniform total exit rate lambda
  std::vector<int> counterpart;  // observable index -> copy index
  int n_observable = 0;

  bool observable(int location) const { return location < n_observable; }
  int base_of(int location) const {
    return observable(location) ? location : location - n_observable;
  }
};

// Returns lambda iff every enabled (l,a) has total exit rate lambda.
inline std::optional<Rational> is_uniform(const CtmdpModel& model) {
  std::optional<Rational> lambda;
  for (std::size_t l = 0; l < model.locations.size(); ++l)
    for (int a : model.enabled_actions(static_cast<int>(l))) {
      const Rational rate = model.exit_rate(static_cast<int>(l), a);
      if (!lambda)
        lambda = rate;
      else if (*lambda != rate)
        return std::nullopt;
    }
  return lambda;
}

inline UniformisationResult uniformise(const CtmdpModel& model) {
  UniformisationResult result;
  result.n_observable = static_cast<int>(model.locations.size());

  Rational lambda = 0;
  for (std::size_t l = 0; l < model.locations.size(); ++l)
    for (std::size_t a = 0; a < model.actions.size(); ++a)
      lambda = std::max(lambda, model.exit_rate(static_cast<int>(l),
                                                static_cast<int>(a)));
  result.rate = lambda;

  CtmdpModel u;
  u.name = model.name.empty() ? "" : model.name + "__uniform";
  u.actions = model.actions;
  u.locations = model.locations;
  for (const auto& loc : model.locations) {
    Location copy = loc;
    copy.id = loc.id + "__u";
    if (model.location_index(copy.id) >= 0)
      throw DomainError("location id '" + copy.id + "' collides with reserved copy id");
    u.locations.push_back(copy);
  }
  result.counterpart.resize(result.n_observable);
  for (int i = 0; i < result.n_observable; ++i)
    result.counterpart[i] = result.n_observable + i;

  // Filler transitions l -a-> l__u with rate lambda - R(l,a,L), then the
  // copies inherit the observable locations' outgoing transitions.
  std::vector<Transition> base = model.transitions;
  for (int l = 0; l < result.n_observable; ++l)
    for (int a : model.enabled_actions(l)) {
      const Rational gap = lambda - model.exit_rate(l, a);
      if (gap == 0) continue;
      Transition filler;
      filler.from = l;
      filler.action = a;
      filler.to = result.counterpart[l];
      filler.rate = gap;
      base.push_back(filler);
    }
  u.transitions = base;
  for (const auto& tr : base) {
    Transition copy = tr;
    copy.from = result.counterpart[tr.from];
    u.transitions.push_back(copy);
  }

  u.initial = model.initial;
  result.uniform_model = std::move(u);
  return result;
}

// vis: deletes unobservable locations and their directly preceding
// transitions; the result is a path of the source model.
inline TimeAbstractPath vis_project(const TimeAbstractPath& path,
                                    const UniformisationResult& u) {
  if (!u.observable(path.start))
    throw DomainError("path starts at an unobservable location");
  TimeAbstractPath visible;
  visible.start = path.start;
  for (const auto& step : path.steps)
    if (u.observable(step.to)) visible.steps.push_back(step);
  return visible;
}

// A scheduler over M lifted to a visible scheduler over U: it decides on a
// U-history what the base scheduler decides on its vis-projection, with
// coinciding decisions on l and l__u. Histories are projected on the fly;
// the counting index is the number of visible steps.
struct LiftedScheduler {
  const Scheduler* base = nullptr;
  const UniformisationResult* u = nullptr;

  Decision decide(const TimeAbstractPath& history) const {
    std::size_t visible_steps = 0;
    for (const auto& step : history.steps)
      if (u->observable(step.to)) ++visible_steps;
    return base->decide(visible_steps, u->base_of(history.last()));
  }
};

inline LiftedScheduler lift_scheduler(const Scheduler& scheduler,
                                      const UniformisationResult& u) {
  return LiftedScheduler{&scheduler, &u};
}

}  // namespace ctmdp

#endif  // CTMDP_UNIFORMISE_HPP

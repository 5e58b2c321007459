#ifndef CTMDP_SIMULATE_HPP
#define CTMDP_SIMULATE_HPP

#include <cmath>
#include <cstdint>
#include <thread>
#include <vector>

#include "ctmdp/model.hpp"
#include "ctmdp/reachability.hpp"
#include "ctmdp/scheduler.hpp"

namespace ctmdp {

// Counter-based splittable generator: sample i draws from a SplitMix64
// stream keyed by (seed, i), so results do not depend on how samples are
// partitioned across workers.
class SampleRng {
 public:
  SampleRng(std::uint64_t seed, std::uint64_t sample_index)
      : state_(mix(seed ^ mix(sample_index + 0x9e3779b97f4a7c15ull))) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    return mix(state_);
  }

  // Uniform draw in [0, 1) with 53 random bits.
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Inverse-transform exponential sample with the given rate.
  double next_exponential(double rate) {
    return -std::log1p(-next_unit()) / rate;
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

struct Estimate {
  double mean = 0;
  double half_width = 0;
  double confidence = 0;
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;

  double lo() const { return std::max(0.0, mean - half_width); }
  double hi() const { return std::min(1.0, mean + half_width); }
};

namespace detail {

// z with Phi(z) = 1 - (1-confidence)/2, by bisection on erf.
inline double normal_quantile_two_sided(double confidence) {
  const double target = confidence;  // P(|Z| <= z) = erf(z/sqrt(2))
  double lo = 0, hi = 16;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (std::erf(mid / std::sqrt(2.0)) < target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

template <typename Decider>
bool run_once(const CtmdpModel& model, const EmbeddedDtmc& dtmc,
              const std::vector<std::vector<Rational>>& exit_rates,
              const Decider& decider, double t, SampleRng& rng) {
  // Initial location from nu.
  double u = rng.next_unit();
  int at = model.initial.empty() ? 0 : model.initial.front().first;
  double acc = 0;
  for (const auto& [l, p] : model.initial) {
    acc += to_double(p);
    at = l;
    if (u < acc) break;
  }
  if (model.locations[at].goal) return true;
  if (t <= 0) return false;

  TimeAbstractPath history;
  history.start = at;
  double clock = 0;
  while (true) {
    const Decision choice = decider.decide(history);
    // Action draw (deterministic decisions still consume no draw).
    int action = -1;
    if (decision_deterministic(choice)) {
      for (const auto& [a, w] : choice)
        if (w > 0) action = a;
    } else {
      double v = rng.next_unit();
      double mass = 0;
      for (const auto& [a, w] : choice) {
        mass += to_double(w);
        action = a;
        if (v < mass) break;
      }
    }
    const double rate = to_double(exit_rates[at][action]);
    clock += rng.next_exponential(rate);
    if (clock > t) return false;

    double v = rng.next_unit();
    double mass = 0;
    int to = dtmc.rows[at][action].front().first;
    for (const auto& [succ, p] : dtmc.rows[at][action]) {
      mass += to_double(p);
      to = succ;
      if (v < mass) break;
    }
    history.steps.push_back({action, to});
    at = to;
    if (model.locations[at].goal) return true;
  }
}

}  // namespace detail

// One timed run; hit iff a goal location is entered (or started in) within
// accumulated time t. Fully determined by the rng stream.
template <typename Decider>
bool sample_run(const CtmdpModel& model, const Decider& decider, double t,
                SampleRng& rng) {
  const EmbeddedDtmc dtmc = embedded_probabilities(model);
  std::vector<std::vector<Rational>> exit_rates(
      model.locations.size(), std::vector<Rational>(model.actions.size(), Rational(0)));
  for (const auto& tr : model.transitions) exit_rates[tr.from][tr.action] += tr.rate;
  return detail::run_once(model, dtmc, exit_rates, decider, t, rng);
}

inline bool sample_run(const CtmdpModel& model, const Scheduler& scheduler, double t,
                       SampleRng& rng) {
  return sample_run(model, CountingDecider{&scheduler}, t, rng);
}

// workers = 0 picks a hardware-based default; any positive count yields the
// same Estimate because sample i derives its generator from (seed, i) alone.
template <typename Decider>
Estimate estimate(const CtmdpModel& model, const Decider& decider, double t,
                  std::uint64_t samples, std::uint64_t seed,
                  double confidence = 0.99, unsigned workers_hint = 0) {
  if (samples == 0) throw DomainError("estimate requires samples >= 1");
  if (confidence <= 0 || confidence >= 1)
    throw DomainError("confidence must lie in (0, 1)");

  const EmbeddedDtmc dtmc = embedded_probabilities(model);
  std::vector<std::vector<Rational>> exit_rates(
      model.locations.size(), std::vector<Rational>(model.actions.size(), Rational(0)));
  for (const auto& tr : model.transitions) exit_rates[tr.from][tr.action] += tr.rate;

  const unsigned workers =
      workers_hint > 0
          ? workers_hint
          : std::max(1u, std::min(std::thread::hardware_concurrency(),
                                  static_cast<unsigned>(samples / 1024 + 1)));
  std::vector<std::uint64_t> hits(workers, 0);
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      std::uint64_t local = 0;
      for (std::uint64_t i = w; i < samples; i += workers) {
        SampleRng rng(seed, i);
        if (detail::run_once(model, dtmc, exit_rates, decider, t, rng)) ++local;
      }
      hits[w] = local;
    });
  for (auto& th : pool) th.join();
  std::uint64_t total_hits = 0;
  for (std::uint64_t h : hits) total_hits += h;

  Estimate e;
  e.samples = samples;
  e.seed = seed;
  e.confidence = confidence;
  e.mean = static_cast<double>(total_hits) / static_cast<double>(samples);
  const double z = detail::normal_quantile_two_sided(confidence);
  e.half_width = z * std::sqrt(e.mean * (1.0 - e.mean) /
                               static_cast<double>(samples));
  return e;
}

inline Estimate estimate(const CtmdpModel& model, const Scheduler& scheduler,
                         double t, std::uint64_t samples, std::uint64_t seed,
                         double confidence = 0.99, unsigned workers_hint = 0) {
  return estimate(model, CountingDecider{&scheduler}, t, samples, seed, confidence,
                  workers_hint);
}

}  // namespace ctmdp

#endif  // CTMDP_SIMULATE_HPP

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <functional>

#include "ctmdp/poisson.hpp"
#include "ctmdp/reachability.hpp"
#include "ctmdp/simulate.hpp"
#include "ctmdp/uniformise.hpp"
#include "model_gen.hpp"

using ctmdp::Rational;

namespace {

ctmdp::Scheduler fixture_s3() { return ctmdp::Scheduler::positional({1, 0, 0}); }

// Sum of exact first-hit path probabilities up to the given length: a sound
// lower bound on the time-bounded reachability value of a uniform model.
double first_hit_mass(const ctmdp::CtmdpModel& m, const ctmdp::Scheduler& s,
                      double t, int max_len) {
  const ctmdp::EmbeddedDtmc dtmc = ctmdp::embedded_probabilities(m);
  double total = 0;
  std::function<void(ctmdp::TimeAbstractPath&)> walk =
      [&](ctmdp::TimeAbstractPath& prefix) {
        const int at = prefix.last();
        if (m.locations[at].goal) {
          total += ctmdp::path_probability(m, s, prefix, t);
          return;
        }
        if (static_cast<int>(prefix.length()) == max_len) return;
        const ctmdp::Decision d =
            s.decide(prefix.length(), at);
        for (const auto& [a, w] : d) {
          if (w == 0) continue;
          for (const auto& [to, p] : dtmc.rows[at][a]) {
            prefix.steps.push_back({a, to});
            walk(prefix);
            prefix.steps.pop_back();
          }
        }
      };
  double start_mass = 0;
  for (const auto& [l, p] : m.initial) {
    ctmdp::TimeAbstractPath path;
    path.start = l;
    const double weight = ctmdp::to_double(p);
    double saved = total;
    walk(path);
    total = saved + weight * (total - saved);
    (void)start_mass;
  }
  return total;
}

}  // namespace

TEST_CASE("poisson weights") {
  SECTION("zero rate takes zero steps") {
    const auto pw = ctmdp::poisson_weights(0.0, 1e-9);
    REQUIRE(pw.weights.size() == 1);
    CHECK(pw.weights[0] == 1.0);
    CHECK(pw.tail_bound == 0.0);
    CHECK(pw.slack == 0.0);
  }
  SECTION("closed form at lambda_t = 1") {
    const auto pw = ctmdp::poisson_weights(1.0, 1e-10);
    CHECK_THAT(pw.weights[0],
               Catch::Matchers::WithinRel(std::exp(-1.0), 1e-12));
    CHECK_THAT(pw.weights[1],
               Catch::Matchers::WithinRel(std::exp(-1.0), 1e-12));
    CHECK_THAT(pw.weights[3],
               Catch::Matchers::WithinRel(std::exp(-1.0) / 6.0, 1e-12));
  }
  SECTION("normalization and truncation") {
    for (double lt : {0.5, 1.0, 6.0, 42.0, 250.0}) {
      const auto pw = ctmdp::poisson_weights(lt, 1e-9);
      double sum = 0;
      for (double w : pw.weights) sum += w;
      CHECK(sum >= 1.0 - 1e-9);
      CHECK(sum <= 1.0 + pw.slack);
      CHECK(pw.tail_bound < 1e-9);
      CHECK(pw.tail_bound >= 0.0);
      // Mode-centered recursion w_{n+1} (n+1) = w_n lambda_t.
      for (std::size_t n = 0; n < pw.n_max; ++n)
        if (pw.weights[n] > 1e-300)
          CHECK_THAT(pw.weights[n + 1] * static_cast<double>(n + 1),
                     Catch::Matchers::WithinRel(pw.weights[n] * lt, 1e-11));
    }
  }
  SECTION("n_max is minimal") {
    const auto pw = ctmdp::poisson_weights(6.0, 1e-9);
    // Dropping the last kept weight must push the tail over epsilon.
    CHECK(pw.tail_bound + pw.weights[pw.n_max] >= 1e-9);
  }
  CHECK_THROWS_AS(ctmdp::poisson_weights(1.0, 0.0), ctmdp::DomainError);
}

TEST_CASE("uniform evaluation degenerate cases are exact") {
  const auto u = ctmdp::uniformise(gen::fixture());
  const auto& m = u.uniform_model;
  const auto s3 = fixture_s3();
  ctmdp::Scheduler s3u = ctmdp::Scheduler::positional({1, 0, 0, 1, 0, 0});

  const auto v0 = ctmdp::evaluate_uniform(m, s3u, 0.0, 1e-9);
  CHECK(v0.lo == 0.0);
  CHECK(v0.hi == 0.0);

  ctmdp::CtmdpModel goal_first = m;
  goal_first.initial = {{2, Rational(1)}};
  const auto v1 = ctmdp::evaluate_uniform(goal_first, s3u, 1.0, 1e-9);
  CHECK(v1.lo == 1.0);
  CHECK(v1.hi == 1.0);
  (void)s3;
}

TEST_CASE("uniform evaluation agrees with the sampling oracle") {
  const auto u = ctmdp::uniformise(gen::fixture());
  ctmdp::Scheduler s3u = ctmdp::Scheduler::positional({1, 0, 0, 1, 0, 0});
  const auto v = ctmdp::evaluate_uniform(u.uniform_model, s3u, 1.0, 1e-9);
  CHECK(v.hi - v.lo <= 2e-9);
  const auto est =
      ctmdp::estimate(u.uniform_model, s3u, 1.0, 1000000, 20260826, 0.99);
  CHECK(v.mid() >= est.lo());
  CHECK(v.mid() <= est.hi());
}

TEST_CASE("exact-rational step recursion matches the double path") {
  const auto u = ctmdp::uniformise(gen::fixture());
  ctmdp::Scheduler s3u = ctmdp::Scheduler::positional({1, 0, 0, 1, 0, 0});
  const auto vd = ctmdp::evaluate_uniform(u.uniform_model, s3u, 1.0, 1e-9, false);
  const auto vr = ctmdp::evaluate_uniform(u.uniform_model, s3u, 1.0, 1e-9, true);
  CHECK(std::abs(vd.mid() - vr.mid()) <= 4e-9);
  CHECK(vr.hi - vr.lo <= 2e-9);
}

TEST_CASE("general evaluation") {
  const ctmdp::CtmdpModel m = gen::fixture();
  const auto s3 = fixture_s3();

  SECTION("no time, no goal mass") {
    const auto v = ctmdp::evaluate_general(m, s3, 0.0, 1e-9);
    CHECK(v.lo == 0.0);
    CHECK(v.hi == 0.0);
  }
  SECTION("dual-path evaluation through the uniformisation") {
    const auto u = ctmdp::uniformise(m);
    for (double t : {0.5, 1.0}) {
      const auto direct = ctmdp::evaluate_general(m, s3, t, 1e-9);
      const auto lifted = ctmdp::evaluate_uniform(
          u, ctmdp::lift_scheduler(s3, u), t, 1e-9);
      CHECK(std::abs(direct.mid() - lifted.mid()) <= 2e-9);
    }
  }
  SECTION("non-goal trap stays near zero") {
    const ctmdp::CtmdpModel trap = ctmdp::parse_model(
        R"({"locations":[{"id":"s0"},{"id":"g","goal":true}],"actions":["a"],
            "transitions":[{"from":"s0","action":"a","to":"s0","rate":"2"},
                           {"from":"g","action":"a","to":"g","rate":"2"}],
            "initial":{"s0":"1"}})");
    const auto only = ctmdp::Scheduler::positional({0, 0});
    const auto v = ctmdp::evaluate_general(trap, only, 1.0, 1e-9);
    CHECK(v.lo == 0.0);
    CHECK(v.hi <= 1e-9 + v.slack);
    // A scheduler picking a non-enabled action is rejected.
    CHECK_THROWS_AS(ctmdp::evaluate_general(trap, fixture_s3(), 1.0, 1e-9),
                    ctmdp::DomainError);
  }
  SECTION("uniform models evaluate identically through both entry points") {
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
      const auto um = gen::random_uniform_model(seed, 4, 2);
      std::mt19937_64 rng(seed);
      const auto s = gen::random_counting(um, rng, 2);
      const auto a = ctmdp::evaluate_uniform(um, s, 0.8, 1e-9);
      const auto b = ctmdp::evaluate_general(um, s, 0.8, 1e-9);
      CHECK(std::abs(a.mid() - b.mid()) <= 2e-9);
    }
  }
  SECTION("randomized schedulers on non-uniform models match simulation") {
    std::mt19937_64 rng(99);
    const auto s = gen::random_randomized_counting(m, rng, 2);
    const auto v = ctmdp::evaluate_general(m, s, 1.0, 1e-9);
    const auto est = ctmdp::estimate(m, s, 1.0, 400000, 77, 0.99);
    CHECK(v.mid() >= est.lo());
    CHECK(v.mid() <= est.hi());
  }
}

TEST_CASE("step-bounded evaluation") {
  const auto u = ctmdp::uniformise(gen::fixture());
  const auto& m = u.uniform_model;
  ctmdp::Scheduler s3u = ctmdp::Scheduler::positional({1, 0, 0, 1, 0, 0});

  const auto k0 = ctmdp::step_bounded(m, s3u, 1.0, 0, 1e-9);
  CHECK(k0.lo == 0.0);
  CHECK(k0.hi == 0.0);

  const auto full = ctmdp::evaluate_uniform(m, s3u, 1.0, 1e-9);
  double prev = 0;
  for (std::size_t k = 1; k <= 8; ++k) {
    const auto v = ctmdp::step_bounded(m, s3u, 1.0, k, 1e-9);
    CHECK(v.lo >= prev - 1e-12);
    CHECK(v.lo <= full.lo + 1e-12);
    prev = v.lo;
  }
  const auto big = ctmdp::step_bounded(m, s3u, 1.0, 10000, 1e-9);
  CHECK(big.lo == full.lo);
  CHECK(big.hi == full.hi);
}

TEST_CASE("path probabilities") {
  const auto u = ctmdp::uniformise(gen::fixture());
  const auto& m = u.uniform_model;
  ctmdp::Scheduler s3u = ctmdp::Scheduler::positional({1, 0, 0, 1, 0, 0});

  const ctmdp::TimeAbstractPath empty{0, {}};
  CHECK(ctmdp::path_probability(m, s3u, empty, 1.0) == 1.0);

  const ctmdp::TimeAbstractPath hop{0, {{1, 2}}};  // l0 -b-> l2
  CHECK_THAT(ctmdp::path_probability(m, s3u, hop, 1.0),
             Catch::Matchers::WithinRel(0.5 * (1.0 - std::exp(-6.0)), 1e-9));

  const ctmdp::TimeAbstractPath off{0, {{0, 2}}};  // action a, weight 0 under S3
  CHECK(ctmdp::path_probability(m, s3u, off, 1.0) == 0.0);

  CHECK_THROWS_AS(
      ctmdp::path_probability(m, s3u, ctmdp::TimeAbstractPath{0, {{0, 1}}}, 1.0),
      ctmdp::DomainError);
}

TEST_CASE("interval soundness against explicit path enumeration") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const auto m = gen::random_uniform_model(seed, 3, 2);
    std::mt19937_64 rng(seed * 13);
    const auto s = gen::random_counting(m, rng, 1);
    for (double t : {0.4, 1.0}) {
      const auto v = ctmdp::evaluate_uniform(m, s, t, 1e-9);
      const double brute_lo = first_hit_mass(m, s, t, 4);
      // First-hit mass up to length 4 is a lower bound on the true value ...
      CHECK(brute_lo <= v.hi + 1e-9);
      // ... and misses at most the probability of needing five or more steps.
      const double lt = ctmdp::to_double(*ctmdp::is_uniform(m)) * t;
      const double tail5 =
          ctmdp::poisson_upper_tail(ctmdp::poisson_weights(lt, 1e-12), 5);
      CHECK(v.lo <= brute_lo + tail5 + 1e-9);
    }
  }
}

TEST_CASE("values are monotone in the horizon") {
  const ctmdp::CtmdpModel m = gen::fixture();
  const auto s3 = fixture_s3();
  double prev_lo = 0, prev_hi = 0;
  for (double t : {0.0, 0.25, 0.5, 1.0, 2.0, 4.0}) {
    const auto v = ctmdp::evaluate_general(m, s3, t, 1e-9);
    CHECK(prev_lo <= v.lo + 2e-9);
    CHECK(prev_hi <= v.hi + 2e-9);
    prev_lo = v.lo;
    prev_hi = v.hi;
  }
}

TEST_CASE("identical weights for identical parameters") {
  const auto a = ctmdp::poisson_weights(6.0, 1e-9);
  const auto b = ctmdp::poisson_weights(6.0, 1e-9);
  CHECK(a.weights == b.weights);
  CHECK(a.n_max == b.n_max);
  CHECK(a.tail_bound == b.tail_bound);
}

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

#include "ctmdp/model.hpp"
#include "model_gen.hpp"

using ctmdp::Rational;

namespace {

bool has_violation(const std::vector<std::string>& violations,
                   const std::string& needle) {
  return std::any_of(violations.begin(), violations.end(),
                     [&](const std::string& v) {
                       return v.find(needle) != std::string::npos;
                     });
}

Rational embedded(const ctmdp::EmbeddedDtmc& dtmc, int l, int a, int to) {
  for (const auto& [target, p] : dtmc.rows[l][a])
    if (target == to) return p;
  return Rational(0);
}

}  // namespace

TEST_CASE("rational parsing is exact") {
  CHECK(ctmdp::parse_rational("1/3") == Rational(1) / 3);
  CHECK(ctmdp::parse_rational("0.25") == Rational(1) / 4);
  CHECK(ctmdp::parse_rational("2") == Rational(2));
  CHECK(ctmdp::parse_rational("-3/7") == Rational(-3) / 7);
  CHECK(ctmdp::format_rational(Rational(7) / 12) == "7/12");
  CHECK_THROWS_AS(ctmdp::parse_rational("1/0"), ctmdp::ParseError);
  CHECK_THROWS_AS(ctmdp::parse_rational("abc"), ctmdp::ParseError);
  CHECK_THROWS_AS(ctmdp::parse_rational(""), ctmdp::ParseError);
}

TEST_CASE("bundled model parses to the expected shape") {
  const ctmdp::CtmdpModel m = gen::fixture();
  REQUIRE(m.locations.size() == 3);
  REQUIRE(m.actions.size() == 2);
  REQUIRE(m.transitions.size() == 7);
  CHECK(m.locations[2].goal);
  CHECK_FALSE(m.locations[0].goal);
  CHECK_FALSE(m.locations[1].goal);
  CHECK(ctmdp::validate(m).empty());
  CHECK_FALSE(m.is_game());
}

TEST_CASE("serialize then parse is the identity") {
  auto roundtrip = [](const ctmdp::CtmdpModel& m) {
    const ctmdp::CtmdpModel back = ctmdp::parse_model(ctmdp::serialize_model(m));
    REQUIRE(back.locations.size() == m.locations.size());
    for (std::size_t l = 0; l < m.locations.size(); ++l) {
      CHECK(back.locations[l].id == m.locations[l].id);
      CHECK(back.locations[l].goal == m.locations[l].goal);
      CHECK(back.locations[l].player == m.locations[l].player);
    }
    CHECK(back.actions == m.actions);
    REQUIRE(back.transitions.size() == m.transitions.size());
    for (std::size_t i = 0; i < m.transitions.size(); ++i) {
      CHECK(back.transitions[i].from == m.transitions[i].from);
      CHECK(back.transitions[i].action == m.transitions[i].action);
      CHECK(back.transitions[i].to == m.transitions[i].to);
      CHECK(back.transitions[i].rate == m.transitions[i].rate);
    }
    CHECK(back.initial == m.initial);
  };
  roundtrip(gen::fixture());
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    roundtrip(gen::random_general_model(seed));
    roundtrip(gen::random_game(seed));
  }
}

TEST_CASE("validator reports each violated invariant") {
  ctmdp::CtmdpModel m = gen::fixture();

  SECTION("initial mass below one") {
    m.initial = {{0, Rational(9) / 10}};
    CHECK(has_violation(ctmdp::validate(m), "initial mass != 1"));
    CHECK_THROWS_AS(ctmdp::parse_model(ctmdp::serialize_model(m)),
                    ctmdp::ParseError);
  }
  SECTION("empty initial distribution") {
    m.initial.clear();
    CHECK(has_violation(ctmdp::validate(m), "initial mass != 1"));
  }
  SECTION("location with no enabled action") {
    m.locations.push_back({"dead", ctmdp::Player::Max, false});
    CHECK(has_violation(ctmdp::validate(m), "no enabled action"));
  }
  SECTION("non-absorbing goal") {
    m.transitions.push_back({2, 0, 0, Rational(1)});
    CHECK(has_violation(ctmdp::validate(m), "goal not absorbing at l2"));
  }
  SECTION("negative rate") {
    m.transitions[0].rate = Rational(-1);
    CHECK(has_violation(ctmdp::validate(m), "negative rate"));
  }
  SECTION("duplicate transition triple rejected by the parser") {
    ctmdp::CtmdpModel dup = m;
    dup.transitions.push_back(dup.transitions.front());
    CHECK_THROWS_AS(ctmdp::parse_model(ctmdp::serialize_model(dup)),
                    ctmdp::ParseError);
  }
}

TEST_CASE("embedded transition probabilities") {
  const ctmdp::CtmdpModel m = gen::fixture();
  const ctmdp::EmbeddedDtmc dtmc = ctmdp::embedded_probabilities(m);

  // (l0, b): rates 3 and 3 normalize to one half each.
  CHECK(embedded(dtmc, 0, 1, 2) == Rational(1) / 2);
  CHECK(embedded(dtmc, 0, 1, 1) == Rational(1) / 2);
  // (l1, a): rates 1 and 5 over total 6.
  CHECK(embedded(dtmc, 1, 0, 2) == Rational(1) / 6);
  CHECK(embedded(dtmc, 1, 0, 1) == Rational(5) / 6);
  // (l1, b): a single outgoing rate.
  CHECK(embedded(dtmc, 1, 1, 0) == Rational(1));
  // (l2, b) is not enabled and must be absent.
  CHECK(dtmc.rows[2][1].empty());
}

TEST_CASE("embedded rows sum to exactly one") {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    const ctmdp::CtmdpModel m = gen::random_general_model(seed);
    const ctmdp::EmbeddedDtmc dtmc = ctmdp::embedded_probabilities(m);
    for (std::size_t l = 0; l < m.locations.size(); ++l)
      for (std::size_t a = 0; a < m.actions.size(); ++a) {
        if (!m.enabled(static_cast<int>(l), static_cast<int>(a))) {
          CHECK(dtmc.rows[l][a].empty());
          continue;
        }
        Rational sum = 0;
        for (const auto& [to, p] : dtmc.rows[l][a]) {
          CHECK(p >= 0);
          sum += p;
        }
        CHECK(sum == 1);
      }
  }
}

TEST_CASE("goal absorption") {
  const ctmdp::CtmdpModel m = gen::fixture();

  SECTION("already-absorbing model is unchanged") {
    const ctmdp::CtmdpModel a = ctmdp::absorb_goal(m);
    CHECK(ctmdp::serialize_model(a) == ctmdp::serialize_model(m));
  }
  SECTION("escaping goal transition is replaced by a max-rate self-loop") {
    ctmdp::CtmdpModel bad = m;
    bad.transitions.push_back({2, 0, 0, Rational(1)});
    const ctmdp::CtmdpModel fixed = ctmdp::absorb_goal(bad);
    CHECK(ctmdp::validate(fixed).empty());
    int loops = 0;
    for (const auto& tr : fixed.transitions)
      if (tr.from == 2) {
        ++loops;
        CHECK(tr.to == 2);
        CHECK(tr.action == 0);
        CHECK(tr.rate == Rational(6));
      }
    CHECK(loops == 1);
    // Idempotence.
    CHECK(ctmdp::serialize_model(ctmdp::absorb_goal(fixed)) ==
          ctmdp::serialize_model(fixed));
  }
  SECTION("model without goal locations is unchanged") {
    ctmdp::CtmdpModel nogoal = m;
    nogoal.locations[2].goal = false;
    const ctmdp::CtmdpModel a = ctmdp::absorb_goal(nogoal);
    CHECK(ctmdp::serialize_model(a) == ctmdp::serialize_model(nogoal));
  }
}

TEST_CASE("path validity checks positive-rate triples") {
  const ctmdp::CtmdpModel m = gen::fixture();
  CHECK(ctmdp::path_valid(m, {0, {{1, 2}}}));          // l0 -b-> l2
  CHECK(ctmdp::path_valid(m, {0, {{1, 1}, {0, 1}}}));  // l0 -b-> l1 -a-> l1
  CHECK_FALSE(ctmdp::path_valid(m, {0, {{0, 1}}}));    // no a-transition l0 -> l1
  CHECK_FALSE(ctmdp::path_valid(m, {2, {{1, 0}}}));    // b not enabled at l2
}

TEST_CASE("players parse from the document") {
  ctmdp::CtmdpModel game = ctmdp::parse_model(
      R"({"name":"g",
          "locations":[{"id":"l0"},{"id":"l1"},{"id":"l2","goal":true}],
          "players":{"l1":"min"},
          "actions":["a","b"],
          "transitions":[
            {"from":"l0","action":"a","to":"l2","rate":"2"},
            {"from":"l1","action":"a","to":"l2","rate":"1"},
            {"from":"l1","action":"b","to":"l0","rate":"6"},
            {"from":"l2","action":"a","to":"l2","rate":"6"}],
          "initial":{"l0":"1"}})");
  CHECK(game.is_game());
  CHECK(game.locations[0].player == ctmdp::Player::Max);
  CHECK(game.locations[1].player == ctmdp::Player::Min);
}

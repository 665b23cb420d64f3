#include <doctest.h>

#include <cmath>
#include <random>

#include "nestcheck/checker.hpp"
#include "nestcheck/error.hpp"
#include "oracles.hpp"

using namespace nestcheck;

namespace {

mpq_class to_mpq(const oracle::Rational& r) {
  return mpq_class(boost::multiprecision::numerator(r).str() + "/" +
                   boost::multiprecision::denominator(r).str());
}

std::uint64_t check(const std::string& text, const std::string& prop, std::uint64_t scale = 1000) {
  CheckOptions opts;
  opts.scale = scale;
  return mc(parse_model(text), parse_property(prop), opts).value;
}

CheckOptions exact_only() {
  CheckOptions o;
  o.exact_threshold = 1'000'000;
  return o;
}

CheckOptions iterative_only() {
  CheckOptions o;
  o.exact_threshold = 0;
  return o;
}

}  // namespace

TEST_CASE("property strings") {
  CHECK(parse_property("reach goal") == Property{Property::Kind::Reach, "goal"});
  CHECK(parse_property("  reachmax   g4 ") == Property{Property::Kind::ReachMax, "g4"});
  CHECK(parse_property("reachmin g") == Property{Property::Kind::ReachMin, "g"});
  CHECK(parse_property("deadlockfree") == Property{Property::Kind::DeadlockFree, ""});
  CHECK(to_string(parse_property("reachmin  x")) == "reachmin x");
  CHECK_THROWS_AS(parse_property("reach"), Error);
  CHECK_THROWS_AS(parse_property("reach a b"), Error);
  CHECK_THROWS_AS(parse_property("eventually g"), Error);
  CHECK_THROWS_AS(parse_property("deadlockfree g"), Error);
}

TEST_CASE("mc examples") {
  CHECK(check("kind dtmc\ninit s0\nlabel g s1\ntrans s0 s1 1\ntrans s0 s2 1\n", "reach g") == 500);
  CHECK(check("kind lts\ninit s0\nlabel g s2\ntrans s0 s1\n", "reach g") == 0);
  CHECK(check("kind lts\ninit s0\ntrans s0 s1\n", "deadlockfree") == 0);
  CHECK(check("kind lts\ninit s0\nlabel g s1\ntrans s0 s1\n", "reach g") == 1);
  CHECK(check("kind dtmc\ninit s\nlabel g a\ntrans s a 1\ntrans s b 2\n", "reach g") == 333);
  CHECK(check("kind dtmc\ninit s\nlabel g a\ntrans s a 2\ntrans s b 1\n", "reach g") == 667);
  CHECK(check("kind dtmc\ninit s\nlabel g a\ntrans s a 1\ntrans s b 1\ntrans s c 1\n", "reach g",
              1'000'000) == 333'333);
}

TEST_CASE("mc errors") {
  const auto dtmc = parse_model("kind dtmc\ninit s\nlabel g s\ntrans s s 1\n");
  const auto mdp = parse_model("kind mdp\ninit s\nlabel g s\ntrans s a s 1\n");
  CHECK_THROWS_AS(mc(dtmc, parse_property("reach nope")), CheckError);
  CHECK_THROWS_AS(mc(dtmc, parse_property("reachmax g")), CheckError);
  CHECK_THROWS_AS(mc(mdp, parse_property("reach g")), CheckError);
  CHECK(mc(mdp, parse_property("deadlockfree")).value == 1);
}

TEST_CASE("boolean checks") {
  CHECK(check_reach_bool(parse_model("kind lts\ninit a\nlabel g c\ntrans a x b\ntrans b y c\n"), "g") ==
        1);
  CHECK(check_reach_bool(parse_model("kind lts\ninit a\nlabel g c\ntrans a b\ntrans c a\n"), "g") == 0);
  CHECK(check_reach_bool(parse_model("kind lts\ninit a\nlabel g a\n"), "g") == 1);
  CHECK(check_deadlock_free(parse_model("kind lts\ninit a\ntrans a b\ntrans b a\n")) == 1);
  CHECK(check_deadlock_free(parse_model("kind dtmc\ninit a\ntrans a b 1\ntrans b b 0\n")) == 0);
  CHECK(check_deadlock_free(parse_model("kind lts\ninit a\ntrans a a\ntrans z y\n")) == 1);
}

TEST_CASE("dtmc reachability examples") {
  SUBCASE("init labelled") {
    auto r = dtmc_reach_prob(parse_model("kind dtmc\ninit s\nlabel g s\ntrans s t 1\n"), "g");
    REQUIRE(r.exact);
    CHECK(*r.exact == 1);
  }
  SUBCASE("goal unreachable from a loop") {
    auto r = dtmc_reach_prob(
        parse_model("kind dtmc\ninit s0\nlabel g x\ntrans s0 s1 1\ntrans s1 s0 1\n"), "g");
    REQUIRE(r.exact);
    CHECK(*r.exact == 0);
  }
  SUBCASE("self-loop geometric retry reaches with certainty") {
    auto r = dtmc_reach_prob(
        parse_model("kind dtmc\ninit s0\nlabel g goal\ntrans s0 goal 1\ntrans s0 s0 2\n"), "g");
    REQUIRE(r.exact);
    CHECK(*r.exact == 1);
  }
  SUBCASE("gambler's ruin") {
    // Fair walk on 0..4 from 1: P(hit 4) = 1/4.
    auto r = dtmc_reach_prob(parse_model("kind dtmc\ninit s1\nlabel g s4\n"
                                         "trans s1 s0 1\ntrans s1 s2 1\n"
                                         "trans s2 s1 1\ntrans s2 s3 1\n"
                                         "trans s3 s2 1\ntrans s3 s4 1\n"),
                             "g");
    REQUIRE(r.exact);
    CHECK(*r.exact == mpq_class(1, 4));
  }
}

TEST_CASE("mdp reachability examples") {
  auto value = [](const std::string& text, Optimize mode) {
    auto r = mdp_reach_prob(parse_model(text), "g", mode);
    REQUIRE(r.exact);
    return mpq_class(*r.exact);
  };
  const std::string all_goal = "kind mdp\ninit s\nlabel g x\ntrans s a x 1\ntrans s b x 5\n";
  CHECK(value(all_goal, Optimize::Min) == 1);
  CHECK(value(all_goal, Optimize::Max) == 1);

  const std::string split = "kind mdp\ninit s\nlabel g x\ntrans s a x 1\ntrans s b sink 1\n";
  CHECK(value(split, Optimize::Max) == 1);
  CHECK(value(split, Optimize::Min) == 0);

  const std::string two = "kind mdp\ninit s\nlabel g x\ntrans s a x 1\ntrans s a sink 1\n"
                          "trans s b x 1\ntrans s b sink 2\n";
  CHECK(value(two, Optimize::Max) == mpq_class(1, 2));
  CHECK(value(two, Optimize::Min) == mpq_class(1, 3));

  // End components: looping forever avoids the goal under min.
  const std::string loop = "kind mdp\ninit s\nlabel g x\ntrans s wait s 1\ntrans s go x 1\n";
  CHECK(value(loop, Optimize::Min) == 0);
  CHECK(value(loop, Optimize::Max) == 1);
}

TEST_CASE("rounding is half up") {
  CHECK(round_to_scale(mpq_class(1, 2000), 1000) == 1);
  CHECK(round_to_scale(mpq_class(1, 2001), 1000) == 0);
  CHECK(round_to_scale(mpq_class(2, 3), 1000) == 667);
  CHECK(round_to_scale(mpq_class(1), 1000) == 1000);
  CHECK(round_to_scale(mpq_class(0), 7) == 0);
  CHECK(round_to_scale(0.0005, 1000) == 1);
  CHECK(round_to_scale(1.0, 1000) == 1000);
  CHECK(round_to_scale(1.0 + 1e-12, 1000) == 1000);
}

TEST_CASE("exact solve agrees with dense rational elimination") {
  std::mt19937_64 rng(2024);
  oracle::ChainShape shape;
  shape.max_states = 30;
  for (int i = 0; i < 60; ++i) {
    const auto chain = oracle::random_chain(rng, shape, false);
    const auto m = parse_model(oracle::to_sm(chain));
    const auto r = dtmc_reach_prob(m, "g", exact_only());
    REQUIRE(r.exact);
    CHECK(*r.exact == to_mpq(oracle::dtmc_reach(chain)));
  }
}

TEST_CASE("acyclic chains match path enumeration exactly") {
  std::mt19937_64 rng(99);
  oracle::ChainShape shape;
  shape.acyclic = true;
  shape.max_states = 12;
  for (int i = 0; i < 40; ++i) {
    const auto chain = oracle::random_chain(rng, shape, false);
    const auto m = parse_model(oracle::to_sm(chain));
    const auto r = dtmc_reach_prob(m, "g");
    REQUIRE(r.exact);
    CHECK(*r.exact == to_mpq(oracle::path_enumeration(chain)));
    CHECK(mc(m, parse_property("reach g"), {}).value ==
          oracle::round_half_up(oracle::path_enumeration(chain), 1000));
  }
}

TEST_CASE("value iteration agrees with exact solve within 2 epsilon") {
  std::mt19937_64 rng(5);
  oracle::ChainShape shape;
  shape.max_states = 40;
  shape.goal_density = 0.1;
  int iterated = 0;
  for (int i = 0; i < 120; ++i) {
    const bool mdp = i % 2 == 1;
    shape.max_actions = mdp ? 3 : 1;
    const auto chain = oracle::random_chain(rng, shape, mdp);
    const auto m = parse_model(oracle::to_sm(chain));
    for (auto mode : {Optimize::Min, Optimize::Max}) {
      const auto exact = mdp ? mdp_reach_prob(m, "g", mode, exact_only())
                             : dtmc_reach_prob(m, "g", exact_only());
      const auto approx = mdp ? mdp_reach_prob(m, "g", mode, iterative_only())
                              : dtmc_reach_prob(m, "g", iterative_only());
      REQUIRE(exact.exact);
      // Values fixed by the graph precomputation are exact on either path.
      if (approx.exact) CHECK(*approx.exact == *exact.exact);
      else ++iterated;
      CHECK(std::abs(exact.exact->get_d() - approx.approx) <= 2e-10);
      if (!mdp) break;
    }
  }
  CHECK(iterated >= 40);
}

TEST_CASE("mdp values match scheduler enumeration") {
  std::mt19937_64 rng(31);
  oracle::ChainShape shape;
  shape.max_states = 7;
  shape.max_actions = 3;
  for (int i = 0; i < 60; ++i) {
    const auto chain = oracle::random_chain(rng, shape, true);
    const auto m = parse_model(oracle::to_sm(chain));
    const auto [lo, hi] = oracle::mdp_min_max(chain);
    const auto min = mdp_reach_prob(m, "g", Optimize::Min);
    const auto max = mdp_reach_prob(m, "g", Optimize::Max);
    REQUIRE(min.exact);
    REQUIRE(max.exact);
    CHECK(*min.exact == to_mpq(lo));
    CHECK(*max.exact == to_mpq(hi));
    CHECK(*max.exact >= *min.exact);
  }
}

TEST_CASE("single-action mdp equals the dtmc") {
  std::mt19937_64 rng(77);
  oracle::ChainShape shape;
  shape.max_states = 20;
  for (int i = 0; i < 20; ++i) {
    auto chain = oracle::random_chain(rng, shape, false);
    const auto dtmc = parse_model(oracle::to_sm(chain));
    chain.mdp = true;
    const auto mdp = parse_model(oracle::to_sm(chain));
    const auto d = dtmc_reach_prob(dtmc, "g");
    const auto lo = mdp_reach_prob(mdp, "g", Optimize::Min);
    const auto hi = mdp_reach_prob(mdp, "g", Optimize::Max);
    REQUIRE(d.exact);
    REQUIRE(lo.exact);
    REQUIRE(hi.exact);
    CHECK(*lo.exact == *d.exact);
    CHECK(*hi.exact == *d.exact);
  }
}

TEST_CASE("unreachable states never change results") {
  std::mt19937_64 rng(123);
  oracle::ChainShape shape;
  shape.max_states = 15;
  shape.max_actions = 2;
  for (int i = 0; i < 20; ++i) {
    const bool mdp = i % 2 == 0;
    const auto chain = oracle::random_chain(rng, shape, mdp);
    const auto text = oracle::to_sm(chain);
    // A disconnected island, including a goal state and a deadlock.
    const std::string island = mdp ? "trans z0 a z1 3\ntrans z1 a z0 1\ntrans z1 b z2 1\nlabel g z1\n"
                                   : "trans z0 z1 3\ntrans z1 z0 1\ntrans z1 z2 1\nlabel g z1\n";
    const auto a = parse_model(text);
    const auto b = parse_model(text + island);
    for (const char* prop : {"deadlockfree", "reach g", "reachmin g", "reachmax g"}) {
      const auto p = parse_property(prop);
      const bool valid = p.kind == Property::Kind::DeadlockFree ||
                         (mdp == (p.kind != Property::Kind::Reach));
      if (!valid) continue;
      CHECK(mc(a, p).value == mc(b, p).value);
    }
  }
}

TEST_CASE("monte carlo simulation stays within four sigma") {
  std::mt19937_64 rng(4242);
  oracle::ChainShape shape;
  shape.max_states = 10;
  for (int i = 0; i < 3; ++i) {
    const auto chain = oracle::random_chain(rng, shape, false);
    const auto m = parse_model(oracle::to_sm(chain));
    const auto r = dtmc_reach_prob(m, "g");
    REQUIRE(r.exact);
    const double p = r.exact->get_d();
    const std::uint64_t trials = 200'000;
    const double freq = oracle::monte_carlo(chain, trials, 1000 + i);
    const double sigma = std::sqrt(p * (1 - p) / static_cast<double>(trials));
    CHECK(std::abs(freq - p) <= 4 * sigma + 1e-12);
  }
}

TEST_CASE("large chains switch to value iteration") {
  // A 3000-state ladder: above the exact threshold.
  std::string text = "kind dtmc\ninit s0\nlabel g done\n";
  for (int i = 0; i < 3000; ++i) {
    const auto next = i + 1 == 3000 ? std::string("done") : "s" + std::to_string(i + 1);
    text += "trans s" + std::to_string(i) + " " + next + " 999\n";
    text += "trans s" + std::to_string(i) + " fail 1\n";
  }
  const auto m = parse_model(text);
  const auto r = dtmc_reach_prob(m, "g");
  CHECK_FALSE(r.exact);
  CHECK(r.approx == doctest::Approx(std::pow(0.999, 3000)).epsilon(1e-9));
  const auto res = mc(m, parse_property("reach g"), {});
  CHECK_FALSE(res.exact);
  CHECK(res.value == 50);  // 0.999^3000 = 0.0497...
}

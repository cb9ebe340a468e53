#include <doctest.h>

#include <cmath>

#include "rbdo/benchmarks.hpp"
#include "rbdo/ga.hpp"

using rbdo::Bounds;
using rbdo::DesignVector;
using rbdo::GAConfig;
using rbdo::Vec;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

// box problem with a constraint that never fails
rbdo::RBDOProblem unconstrained(rbdo::ScalarFunction cost, const Bounds& b) {
  std::vector<rbdo::ScalarFunction> gs;
  gs.emplace_back("safe", b.dim(), [](const Vec&) { return 1.0; });
  std::vector<rbdo::RandomVarSpec> rv;
  for (int i = 0; i < b.dim(); ++i) rv.push_back(rbdo::RandomVarSpec::linked(i, 0.01));
  return rbdo::RBDOProblem("test", std::move(cost), std::move(gs), b, std::move(rv), 0.9);
}

}  // namespace

TEST_SUITE("ga") {

TEST_CASE("fitness of a feasible individual is its cost") {
  const Bounds b(Vec::Zero(2), Vec::Ones(2));
  const auto p = unconstrained(rbdo::ScalarFunction("c", 2, [](const Vec& d) { return d.sum(); }), b);
  GAConfig cfg;
  cfg.mc.sample_count = 500;
  const double f =
      rbdo::fitness(p, rbdo::TruePredictors{&p}, DesignVector(v2(0.3, 0.4), b), cfg);
  CHECK(f == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("fitness at the reference comparison optimum") {
  const auto p = rbdo::case1();
  GAConfig cfg;
  cfg.mc.sample_count = 100000;
  cfg.mc.seed = 3;
  const DesignVector d(v2(3.12, 3.58), p.bounds());
  const auto ev = rbdo::evaluate_design(p, rbdo::TruePredictors{&p}, d, cfg.mc, cfg.penalty_weight);
  CHECK(ev.cost == doctest::Approx(6.70).epsilon(1e-3));
  CHECK(std::abs(ev.reliabilities[0] - 0.9787) <= 0.01);
  CHECK(std::abs(ev.reliabilities[1] - 1.0) <= 0.01);
  CHECK(std::abs(ev.reliabilities[2] - 1.0) <= 0.01);
  CHECK(rbdo::ga_fitness(ev) == doctest::Approx(ev.cost + ev.penalty));
}

TEST_CASE("penalty dominates the fitness of deeply infeasible points") {
  const auto p = rbdo::case1();
  GAConfig cfg;
  cfg.mc.sample_count = 2000;
  cfg.mc.seed = 1;
  const double f =
      rbdo::fitness(p, rbdo::TruePredictors{&p}, DesignVector(v2(0.5, 0.5), p.bounds()), cfg);
  CHECK(f > 1.0 + 100.0);  // cost is 1, the rest is penalty
}

TEST_CASE("sphere sanity: the optimum corner of the box is found") {
  const Bounds b(Vec::Zero(2), Vec::Ones(2));
  const auto p = unconstrained(
      rbdo::ScalarFunction("sphere", 2,
                           [](const Vec& d) {
                             return (d[0] - 0.3) * (d[0] - 0.3) + (d[1] - 0.7) * (d[1] - 0.7);
                           }),
      b);
  GAConfig cfg;
  cfg.mc.sample_count = 100;
  const auto rec = rbdo::sega_run(p, cfg, 1, rbdo::EvalMode::TrueFn);
  REQUIRE(rec.best.has_value());
  CHECK(rec.best->cost <= 1e-2);
  CHECK(rec.termination_reason == "max-generations");
}

TEST_CASE("constant cost leaves the best fitness flat") {
  const Bounds b(Vec::Zero(2), Vec::Ones(2));
  const auto p = unconstrained(rbdo::ScalarFunction("flat", 2, [](const Vec&) { return 5.0; }), b);
  GAConfig cfg;
  cfg.mc.sample_count = 100;
  cfg.population = 10;
  cfg.max_generations = 8;
  const auto rec = rbdo::sega_run(p, cfg, 2, rbdo::EvalMode::TrueFn);
  for (const auto& e : rec.entries) CHECK(rbdo::ga_fitness(e.selected) == 5.0);
}

TEST_CASE("elitism keeps the generation best non-increasing") {
  const auto p = rbdo::case1();
  GAConfig cfg;
  cfg.population = 20;
  cfg.max_generations = 12;
  cfg.mc.sample_count = 1000;
  cfg.mc.seed = 9;
  for (std::uint64_t seed : {1ULL, 5ULL, 9ULL}) {
    const auto rec = rbdo::sega_run(p, cfg, seed, rbdo::EvalMode::TrueFn);
    REQUIRE(rec.entries.size() == 12);
    double last = std::numeric_limits<double>::infinity();
    for (const auto& e : rec.entries) {
      const double f = rbdo::ga_fitness(e.selected);
      CHECK(f <= last);
      last = f;
      CHECK(p.bounds().contains(e.selected.design.values()));
    }
  }
}

TEST_CASE("fixed seeds reproduce the trace bit for bit") {
  const auto p = rbdo::case1();
  GAConfig cfg;
  cfg.population = 14;
  cfg.max_generations = 6;
  cfg.mc.sample_count = 500;
  cfg.mc.seed = 4;
  const auto a = rbdo::sega_run(p, cfg, 33, rbdo::EvalMode::TrueFn);
  const auto b = rbdo::sega_run(p, cfg, 33, rbdo::EvalMode::TrueFn);
  REQUIRE(a.entries.size() == b.entries.size());
  for (size_t i = 0; i < a.entries.size(); ++i) {
    CHECK(a.entries[i].selected.design.values() == b.entries[i].selected.design.values());
    CHECK(rbdo::ga_fitness(a.entries[i].selected) == rbdo::ga_fitness(b.entries[i].selected));
  }
}

TEST_CASE("operators never leave the box") {
  const Bounds b(v2(-1, 2), v2(1, 3));
  rbdo::RngStream rng(6, 0);
  for (int t = 0; t < 500; ++t) {
    Vec a = v2(rng.uniform(-1, 1), rng.uniform(2, 3));
    Vec c = v2(rng.uniform(-1, 1), rng.uniform(2, 3));
    rbdo::detail::sbx_crossover(a, c, b, 15.0, 0.9, rng);
    rbdo::detail::polynomial_mutation(a, b, 20.0, 0.5, rng);
    rbdo::detail::polynomial_mutation(c, b, 20.0, 0.5, rng);
    CHECK(b.contains(a));
    CHECK(b.contains(c));
  }
}

TEST_CASE("configuration is validated") {
  GAConfig cfg;
  cfg.population = 1;
  CHECK_THROWS_AS(cfg.validate(), rbdo::ConfigError);
  cfg.population = 10;
  cfg.elite = 10;
  CHECK_THROWS_AS(cfg.validate(), rbdo::ConfigError);
}

}  // TEST_SUITE

#include <doctest.h>

#include "rbdo/benchmarks.hpp"
#include "rbdo/problem.hpp"
#include "rbdo/sampling.hpp"

using rbdo::Bounds;
using rbdo::DesignVector;
using rbdo::Vec;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

}  // namespace

TEST_SUITE("problem") {

TEST_CASE("bounds reject degenerate or non-finite boxes") {
  CHECK_THROWS_AS(Bounds(v2(0, 0), v2(1, 0)), std::invalid_argument);
  CHECK_THROWS_AS(Bounds(v2(0, 5), v2(1, 5)), std::invalid_argument);  // zero width
  CHECK_THROWS_AS(Bounds(v2(0, 0), v2(1, std::numeric_limits<double>::infinity())),
                  std::invalid_argument);
  CHECK_THROWS_AS(Bounds(Vec(2), Vec(3)), std::invalid_argument);
}

TEST_CASE("design vectors are validated against closed bounds") {
  const Bounds b(v2(0, 0), v2(10, 10));
  CHECK_NOTHROW(DesignVector(v2(0, 0), b));    // both endpoints feasible
  CHECK_NOTHROW(DesignVector(v2(10, 10), b));
  CHECK_THROWS_AS(DesignVector(v2(-1e-9, 5), b), std::invalid_argument);
  CHECK_THROWS_AS(DesignVector(v2(5, 10.0001), b), std::invalid_argument);
  CHECK_THROWS_AS(DesignVector(Vec::Zero(3), b), std::invalid_argument);
}

TEST_CASE("cost evaluation on the two-variable case") {
  const auto p = rbdo::case1();
  CHECK(rbdo::eval_cost(p, DesignVector(v2(3.38, 3.04), p.bounds())) ==
        doctest::Approx(6.42).epsilon(1e-12));
  CHECK(rbdo::eval_cost(p, DesignVector(v2(0, 0), p.bounds())) == 0.0);
}

TEST_CASE("constraint evaluation matches direct arithmetic") {
  const auto p = rbdo::case1();
  const double g1 = rbdo::eval_constraint(p, 0, v2(3.38, 3.04));
  CHECK(g1 == doctest::Approx(3.38 * 3.38 * 3.04 / 20.0 - 1.0));
  CHECK(g1 == doctest::Approx(0.7365).epsilon(2e-4));

  CHECK(rbdo::eval_constraint(p, 2, v2(5, 5)) ==
        doctest::Approx(80.0 / (25.0 + 40.0 - 5.0) - 1.0));
  CHECK(rbdo::eval_constraint(p, 2, v2(5, 5)) == doctest::Approx(0.3333).epsilon(1e-3));

  // limit-state boundary by construction
  CHECK(rbdo::eval_constraint(p, 0, v2(std::sqrt(20.0), 1.0)) ==
        doctest::Approx(0.0).scale(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(rbdo::eval_constraint(p, 3, v2(1, 1)), std::invalid_argument);
  CHECK_THROWS_AS(rbdo::eval_constraint(p, -1, v2(1, 1)), std::invalid_argument);
  CHECK_THROWS_AS(rbdo::eval_constraint(p, 0, Vec::Zero(3)), std::invalid_argument);
}

TEST_CASE("evaluations are pure") {
  const auto p = rbdo::case1();
  const DesignVector d(v2(4.4, 2.2), p.bounds());
  const double c1 = rbdo::eval_cost(p, d);
  const double c2 = rbdo::eval_cost(p, d);
  CHECK(c1 == c2);
  const double g1 = rbdo::eval_constraint(p, 1, d.values());
  const double g2 = rbdo::eval_constraint(p, 1, d.values());
  CHECK(g1 == g2);
}

TEST_CASE("clamp or reject") {
  const Bounds b(v2(0, 0), v2(10, 10));
  CHECK_FALSE(rbdo::clamp_or_reject(v2(11, 5), b, rbdo::OutOfBoundsPolicy::Reject).has_value());
  const auto clamped = rbdo::clamp_or_reject(v2(11, 5), b, rbdo::OutOfBoundsPolicy::Clamp);
  REQUIRE(clamped.has_value());
  CHECK(clamped->values() == v2(10, 5));
  for (auto mode : {rbdo::OutOfBoundsPolicy::Reject, rbdo::OutOfBoundsPolicy::Clamp}) {
    const auto kept = rbdo::clamp_or_reject(v2(3, 4), b, mode);
    REQUIRE(kept.has_value());
    CHECK(kept->values() == v2(3, 4));
  }
}

TEST_CASE("reject mode accepts exactly the closed box") {
  const Bounds b(v2(-1, 2), v2(3, 8));
  rbdo::RngStream rng(99, 0);
  for (int trial = 0; trial < 500; ++trial) {
    const Vec x = v2(rng.uniform(-3, 5), rng.uniform(0, 10));
    const bool inside = x[0] >= -1 && x[0] <= 3 && x[1] >= 2 && x[1] <= 8;
    CHECK(rbdo::clamp_or_reject(x, b, rbdo::OutOfBoundsPolicy::Reject).has_value() == inside);
  }
  // boundary is inclusive
  CHECK(rbdo::clamp_or_reject(v2(-1, 8), b, rbdo::OutOfBoundsPolicy::Reject).has_value());
}

TEST_CASE("first limit state is monotone in both coordinates") {
  const auto p = rbdo::case1();
  rbdo::RngStream rng(7, 0);
  for (int trial = 0; trial < 500; ++trial) {
    const Vec x = v2(rng.uniform(0, 10), rng.uniform(0, 10));
    const Vec y = v2(x[0] + rng.uniform(0, 10 - x[0]), x[1] + rng.uniform(0, 10 - x[1]));
    CHECK(rbdo::eval_constraint(p, 0, y) >= rbdo::eval_constraint(p, 0, x));
  }
}

TEST_CASE("random variable specs are validated") {
  CHECK_THROWS_AS(rbdo::RandomVarSpec::linked(0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(rbdo::RandomVarSpec::linked(0, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(rbdo::RandomVarSpec::fixed(0.0, 0.0), std::invalid_argument);

  const auto spec = rbdo::RandomVarSpec::linked(1, 0.5);
  CHECK(spec.mean_for(v2(3, 4)) == 4.0);
  CHECK(rbdo::RandomVarSpec::fixed(-2.5, 1.0).mean_for(v2(3, 4)) == -2.5);
}

TEST_CASE("problem construction enforces the uncertainty model") {
  rbdo::ScalarFunction cost("c", 2, [](const Vec& d) { return d.sum(); });
  std::vector<rbdo::ScalarFunction> gs;
  gs.emplace_back("g", 2, [](const Vec& x) { return x[0]; });
  const Bounds b(v2(0, 0), v2(1, 1));

  // duplicate design-linked index
  CHECK_THROWS_AS(rbdo::RBDOProblem("p", cost, gs, b,
                                    {rbdo::RandomVarSpec::linked(0, 1), rbdo::RandomVarSpec::linked(0, 1)},
                                    0.9),
                  std::invalid_argument);
  // linked index out of range
  CHECK_THROWS_AS(rbdo::RBDOProblem("p", cost, gs, b, {rbdo::RandomVarSpec::linked(5, 1)}, 0.9),
                  std::invalid_argument);
  // no constraints
  CHECK_THROWS_AS(rbdo::RBDOProblem("p", cost, {}, b, {rbdo::RandomVarSpec::linked(0, 1)}, 0.9),
                  std::invalid_argument);
  // target reliability outside (0,1)
  CHECK_THROWS_AS(rbdo::RBDOProblem("p", cost, gs, b,
                                    {rbdo::RandomVarSpec::linked(0, 1), rbdo::RandomVarSpec::linked(1, 1)},
                                    1.0),
                  std::invalid_argument);
}

TEST_CASE("mean vector mixes design-linked and fixed variables") {
  rbdo::ScalarFunction cost("c", 2, [](const Vec& d) { return d.sum(); });
  std::vector<rbdo::ScalarFunction> gs;
  gs.emplace_back("g", 3, [](const Vec& x) { return x.sum(); });
  const rbdo::RBDOProblem p("p", cost, gs, Bounds(v2(0, 0), v2(1, 1)),
                            {rbdo::RandomVarSpec::linked(0, 0.1), rbdo::RandomVarSpec::linked(1, 0.1),
                             rbdo::RandomVarSpec::fixed(7.0, 2.0)},
                            0.9);
  const Vec m = p.mean_vector(v2(0.25, 0.75));
  CHECK(m.size() == 3);
  CHECK(m[0] == 0.25);
  CHECK(m[1] == 0.75);
  CHECK(m[2] == 7.0);

  const Bounds tb = rbdo::surrogate_training_bounds(p);
  CHECK(tb.lower()[0] == 0.0);
  CHECK(tb.upper()[1] == 1.0);
  CHECK(tb.lower()[2] == doctest::Approx(1.0));   // 7 - 3*2
  CHECK(tb.upper()[2] == doctest::Approx(13.0));  // 7 + 3*2
}

TEST_CASE("registry instantiates problems by name") {
  CHECK_NOTHROW(rbdo::make_problem("case1"));
  CHECK(rbdo::make_problem("case1").nc() == 3);
  CHECK_THROWS_AS(rbdo::make_problem("no-such-problem"), rbdo::ConfigError);
}

}  // TEST_SUITE

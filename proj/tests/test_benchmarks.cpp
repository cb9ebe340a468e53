#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "rbdo/benchmarks.hpp"
#include "rbdo/sampling.hpp"

using rbdo::Vec;

namespace {

const std::string kCase2Coeffs = std::string(RBDO_SOURCE_DIR) + "/data/case2_constraints.poly";

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

}  // namespace

TEST_SUITE("benchmarks") {

TEST_CASE("two-variable case metadata") {
  const auto p = rbdo::case1();
  CHECK(p.nd() == 2);
  CHECK(p.nr() == 2);
  CHECK(p.nc() == 3);
  CHECK(p.target_reliability() == 0.98);
  CHECK(p.bounds().lower() == Vec::Zero(2));
  CHECK(p.bounds().upper() == Vec::Constant(2, 10.0));
  for (const auto& rv : p.random_vars()) CHECK(rv.std_dev == 0.3464);
}

TEST_CASE("two-variable case limit states") {
  const auto p = rbdo::case1();
  // second limit state at [5, 0]: 0 + 49/120 - 1
  CHECK(rbdo::eval_constraint(p, 1, v2(5, 0)) == doctest::Approx(49.0 / 120.0 - 1.0));
  CHECK(rbdo::eval_constraint(p, 1, v2(5, 0)) == doctest::Approx(-0.5917).epsilon(1e-4));
  // singular denominator is guarded: x1^2 + 8 x2 = 5
  const double guarded = rbdo::eval_constraint(p, 2, v2(1.0, 0.5));
  CHECK(std::isfinite(guarded));
  CHECK(guarded < -1e6);
}

TEST_CASE("construction is pure and stable across calls") {
  const auto a = rbdo::case1();
  const auto b = rbdo::case1();
  rbdo::RngStream rng(3, 0);
  for (int t = 0; t < 50; ++t) {
    const Vec x = v2(rng.uniform(0, 10), rng.uniform(0, 10));
    for (int i = 0; i < 3; ++i)
      CHECK(rbdo::eval_constraint(a, i, x) == rbdo::eval_constraint(b, i, x));
  }
}

TEST_CASE("side-impact case anchors") {
  const auto spec = rbdo::load_polynomials(kCase2Coeffs);
  const auto p = rbdo::case2(spec);
  CHECK(p.nd() == 9);
  CHECK(p.nr() == 11);
  CHECK(p.nc() == 10);
  CHECK(p.target_reliability() == 0.9);

  Vec d(9);
  d << 0.5, 1.31, 0.5, 1.24, 0.64, 1.5, 0.5, 0.346, 0.192;
  CHECK(p.cost()(d) == doctest::Approx(24.14).epsilon(5e-4));
  // direct arithmetic for the same row
  CHECK(p.cost()(d) ==
        doctest::Approx(1.98 + 4.90 * 0.5 + 6.67 * 1.31 + 6.98 * 0.5 + 4.01 * 1.24 +
                        1.78 * 0.64 + 2.73 * 0.5));

  Vec corner(9);
  corner << 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.192, 0.192;
  CHECK(p.cost()(corner) == doctest::Approx(1.98 + (4.90 + 6.67 + 6.98 + 4.01 + 1.78 + 2.73) * 0.5));
  CHECK(p.cost()(corner) == doctest::Approx(15.515));
}

TEST_CASE("side-impact case distribution table round-trips") {
  const auto p = rbdo::case2(rbdo::load_polynomials(kCase2Coeffs));
  for (int i = 0; i < 7; ++i) {
    CHECK(p.bounds().lower()[i] == 0.5);
    CHECK(p.bounds().upper()[i] == 1.5);
    CHECK(p.random_vars()[static_cast<size_t>(i)].std_dev == 0.030);
    CHECK(p.random_vars()[static_cast<size_t>(i)].design_index == i);
  }
  for (int i = 7; i < 9; ++i) {
    CHECK(p.bounds().lower()[i] == 0.192);
    CHECK(p.bounds().upper()[i] == 0.345);
    CHECK(p.random_vars()[static_cast<size_t>(i)].std_dev == 0.006);
  }
  for (int i = 9; i < 11; ++i) {
    CHECK_FALSE(p.random_vars()[static_cast<size_t>(i)].design_index.has_value());
    CHECK(p.random_vars()[static_cast<size_t>(i)].fixed_mean == 0.0);
    CHECK(p.random_vars()[static_cast<size_t>(i)].std_dev == 10.0);
  }
}

TEST_CASE("single-term polynomial file") {
  std::istringstream f("1.0 1\n");
  const auto spec = rbdo::load_polynomials(f);
  CHECK(spec.variable_count == 1);
  CHECK(spec.constraint_count() == 1);
  CHECK(spec.eval(0, Vec::Constant(1, 2.0)) == 2.0);
}

TEST_CASE("polynomial encoding of the first limit state cross-evaluates") {
  std::istringstream f("# x1^2 x2 / 20 - 1\n0.05 2 1\n-1 0 0\n");
  const auto spec = rbdo::load_polynomials(f);
  const auto p = rbdo::case1();
  rbdo::RngStream rng(13, 0);
  for (int t = 0; t < 200; ++t) {
    const Vec x = v2(rng.uniform(0, 10), rng.uniform(0, 10));
    CHECK(spec.eval(0, x) ==
          doctest::Approx(rbdo::eval_constraint(p, 0, x)).scale(1.0).epsilon(1e-12));
  }
}

TEST_CASE("polynomial evaluation matches a brute-force oracle") {
  rbdo::RngStream rng(14, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const int nv = 1 + static_cast<int>(rng.next_u64() % 5);
    const int nterms = 1 + static_cast<int>(rng.next_u64() % 6);
    rbdo::PolynomialSpec spec;
    spec.variable_count = nv;
    spec.constraints.emplace_back();
    spec.names.push_back("G1");
    for (int t = 0; t < nterms; ++t) {
      rbdo::PolynomialSpec::Term term;
      term.coeff = rng.uniform(-3, 3);
      for (int j = 0; j < nv; ++j)
        term.exponents.push_back(static_cast<int>(rng.next_u64() % 4));
      spec.constraints[0].push_back(term);
    }
    Vec x(nv);
    for (int j = 0; j < nv; ++j) x[j] = rng.uniform(-2, 2);
    double expect = 0.0;
    for (const auto& term : spec.constraints[0]) {
      double m = term.coeff;
      for (int j = 0; j < nv; ++j) m *= std::pow(x[j], term.exponents[static_cast<size_t>(j)]);
      expect += m;
    }
    CHECK(spec.eval(0, x) == doctest::Approx(expect).scale(1.0).epsilon(1e-12));
  }
}

TEST_CASE("loader reports malformed input with its location") {
  std::istringstream empty("# nothing but comments\n\n");
  CHECK_THROWS_AS(rbdo::load_polynomials(empty, "f.poly"), rbdo::ParseError);

  std::istringstream mixed_arity("1.0 1 2\n2.0 1\n");
  CHECK_THROWS_WITH_AS(rbdo::load_polynomials(mixed_arity, "f.poly"),
                       doctest::Contains("f.poly:2"), rbdo::ParseError);

  std::istringstream junk("1.0 1 banana\n");
  CHECK_THROWS_AS(rbdo::load_polynomials(junk, "f.poly"), rbdo::ParseError);

  std::istringstream negative("1.0 -2\n");
  CHECK_THROWS_AS(rbdo::load_polynomials(negative, "f.poly"), rbdo::ParseError);

  CHECK_THROWS_AS(rbdo::load_polynomials("/no/such/file.poly"), rbdo::ConfigError);
}

TEST_CASE("shipped side-impact data loads through the registry") {
  const auto p = rbdo::make_problem("case2", kCase2Coeffs);
  CHECK(p.nc() == 10);
  // every limit state is finite at the mid-box mean with zero barrier offset
  Vec x(11);
  x << 1, 1, 1, 1, 1, 1, 1, 0.27, 0.27, 0, 0;
  for (int i = 0; i < 10; ++i) CHECK(std::isfinite(rbdo::eval_constraint(p, i, x)));
}

TEST_CASE("custom problems wrap a coefficient file") {
  std::istringstream f("1.0 1 0\n\n-0.5 0 1\n");
  const auto spec = rbdo::load_polynomials(f);
  const auto p = rbdo::make_custom_problem(
      spec, rbdo::Bounds(Vec::Zero(2), Vec::Ones(2)), 0.05, 0.9);
  CHECK(p.nc() == 2);
  CHECK(p.nd() == 2);
  CHECK(rbdo::eval_constraint(p, 0, v2(0.3, 0.9)) == doctest::Approx(0.3));
  CHECK(rbdo::eval_constraint(p, 1, v2(0.3, 0.9)) == doctest::Approx(-0.45));
}

}  // TEST_SUITE

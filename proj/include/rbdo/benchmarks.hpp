#pragma once

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rbdo/problem.hpp"

namespace rbdo {

// A set of polynomial limit-state functions loaded from a coefficient file.
// One constraint per block; within a block each line is one monomial,
// "coeff e1 e2 ... ek"; '#' starts a comment; blank lines separate blocks.
struct PolynomialSpec {
  struct Term {
    double coeff = 0.0;
    std::vector<int> exponents;
  };

  int variable_count = 0;
  std::vector<std::vector<Term>> constraints;
  std::vector<std::string> names;
  std::string source;  // provenance, taken from the file's leading comments

  int constraint_count() const { return static_cast<int>(constraints.size()); }

  double eval(int i, const Vec& x) const {
    if (i < 0 || i >= constraint_count())
      throw std::invalid_argument("PolynomialSpec::eval: index out of range");
    if (static_cast<int>(x.size()) != variable_count)
      throw std::invalid_argument("PolynomialSpec::eval: arity mismatch");
    double total = 0.0;
    for (const auto& t : constraints[static_cast<size_t>(i)]) {
      double term = t.coeff;
      for (int j = 0; j < variable_count; ++j) {
        const double xj = x[j];
        for (int e = 0; e < t.exponents[static_cast<size_t>(j)]; ++e) term *= xj;
      }
      total += term;
    }
    return total;
  }

  ScalarFunction as_function(int i) const {
    PolynomialSpec copy = *this;  // self-contained closure
    return ScalarFunction(names[static_cast<size_t>(i)], variable_count,
                          [copy, i](const Vec& x) { return copy.eval(i, x); });
  }
};

inline PolynomialSpec load_polynomials(std::istream& is, const std::string& origin = "<stream>") {
  PolynomialSpec spec;
  std::vector<PolynomialSpec::Term> block;
  std::string line;
  int lineno = 0;
  bool in_header = true;

  auto close_block = [&] {
    if (block.empty()) return;
    spec.constraints.push_back(block);
    spec.names.push_back("G" + std::to_string(spec.constraints.size()));
    block.clear();
  };

  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) {
      if (in_header) spec.source += line.substr(hash + 1) + "\n";
      line.erase(hash);
    }
    std::istringstream ls(line);
    PolynomialSpec::Term term;
    if (!(ls >> term.coeff)) {
      close_block();  // blank or comment-only line ends the current block
      continue;
    }
    in_header = false;
    int e = 0;
    while (ls >> e) {
      if (e < 0)
        throw ParseError(origin + ":" + std::to_string(lineno) + ": negative exponent");
      term.exponents.push_back(e);
    }
    if (!ls.eof())
      throw ParseError(origin + ":" + std::to_string(lineno) + ": malformed term line");
    if (spec.variable_count == 0) spec.variable_count = static_cast<int>(term.exponents.size());
    if (static_cast<int>(term.exponents.size()) != spec.variable_count)
      throw ParseError(origin + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(spec.variable_count) + " exponents, got " +
                       std::to_string(term.exponents.size()));
    block.push_back(std::move(term));
  }
  close_block();
  if (spec.constraints.empty() || spec.variable_count == 0)
    throw ParseError(origin + ": no constraint blocks found");
  return spec;
}

inline PolynomialSpec load_polynomials(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open coefficient file '" + path + "'");
  return load_polynomials(f, path);
}

// Two-variable mathematical case: cost d1+d2 over [0,10]^2, three limit
// states, both variables normal with sd 0.3464, target reliability 0.98.
inline RBDOProblem case1() {
  ScalarFunction cost("cost", 2, [](const Vec& d) { return d[0] + d[1]; });
  std::vector<ScalarFunction> g;
  g.emplace_back("G1", 2, [](const Vec& x) { return x[0] * x[0] * x[1] / 20.0 - 1.0; });
  g.emplace_back("G2", 2, [](const Vec& x) {
    const double a = x[0] + x[1] - 5.0;
    const double b = x[0] - x[1] - 12.0;
    return a * a / 30.0 + b * b / 120.0 - 1.0;
  });
  g.emplace_back("G3", 2, [](const Vec& x) {
    const double den = x[0] * x[0] + 8.0 * x[1] - 5.0;
    // the singular set sits deep inside the failure region; report failure
    // there so Monte Carlo never sees a non-finite value
    if (std::abs(den) < 1e-9) return -1e9;
    return 80.0 / den - 1.0;
  });
  Bounds b(Vec::Zero(2), Vec::Constant(2, 10.0));
  std::vector<RandomVarSpec> rv{RandomVarSpec::linked(0, 0.3464), RandomVarSpec::linked(1, 0.3464)};
  return RBDOProblem("case1", std::move(cost), std::move(g), std::move(b), std::move(rv), 0.98);
}

// Vehicle side-impact case: nine thickness/material design variables plus
// two barrier noise parameters, ten limit states supplied as coefficient
// data, weight cost, target reliability 0.9.
inline RBDOProblem case2(const PolynomialSpec& coeffs) {
  if (coeffs.variable_count != 11 || coeffs.constraint_count() != 10)
    throw ConfigError("case2 expects 10 constraints over 11 variables, got " +
                      std::to_string(coeffs.constraint_count()) + " over " +
                      std::to_string(coeffs.variable_count));
  ScalarFunction cost("weight", 9, [](const Vec& d) {
    return 1.98 + 4.90 * d[0] + 6.67 * d[1] + 6.98 * d[2] + 4.01 * d[3] + 1.78 * d[4] +
           2.73 * d[6];
  });
  std::vector<ScalarFunction> g;
  for (int i = 0; i < coeffs.constraint_count(); ++i) g.push_back(coeffs.as_function(i));

  Vec lo(9), hi(9);
  for (int i = 0; i < 7; ++i) {
    lo[i] = 0.5;
    hi[i] = 1.5;
  }
  lo[7] = lo[8] = 0.192;
  hi[7] = hi[8] = 0.345;

  std::vector<RandomVarSpec> rv;
  for (int i = 0; i < 7; ++i) rv.push_back(RandomVarSpec::linked(i, 0.030));
  rv.push_back(RandomVarSpec::linked(7, 0.006));
  rv.push_back(RandomVarSpec::linked(8, 0.006));
  rv.push_back(RandomVarSpec::fixed(0.0, 10.0));  // barrier height
  rv.push_back(RandomVarSpec::fixed(0.0, 10.0));  // barrier hitting position
  return RBDOProblem("case2", std::move(cost), std::move(g), Bounds(lo, hi), std::move(rv), 0.9);
}

// Generic polynomial-constrained problem: every variable is design-linked.
inline RBDOProblem make_custom_problem(const PolynomialSpec& coeffs, const Bounds& bounds,
                                       double sigma, double target_reliability) {
  if (bounds.dim() != coeffs.variable_count)
    throw ConfigError("custom problem: bounds dimension must match the coefficient file");
  const int nd = bounds.dim();
  ScalarFunction cost("cost", nd, [](const Vec& d) { return d.sum(); });
  std::vector<ScalarFunction> g;
  for (int i = 0; i < coeffs.constraint_count(); ++i) g.push_back(coeffs.as_function(i));
  std::vector<RandomVarSpec> rv;
  for (int i = 0; i < nd; ++i) rv.push_back(RandomVarSpec::linked(i, sigma));
  return RBDOProblem("custom", std::move(cost), std::move(g), bounds, std::move(rv),
                     target_reliability);
}

inline void register_builtin_problems() {
  static const bool once = [] {
    ProblemRegistry::add("case1", [](const std::string&) { return case1(); });
    ProblemRegistry::add("case2", [](const std::string& arg) {
      const std::string path = arg.empty() ? "data/case2_constraints.poly" : arg;
      return case2(load_polynomials(path));
    });
    return true;
  }();
  (void)once;
}

inline RBDOProblem make_problem(const std::string& name, const std::string& arg = "") {
  register_builtin_problems();
  return ProblemRegistry::make(name, arg);
}

}  // namespace rbdo

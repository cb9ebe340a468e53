#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "rbdo/kriging.hpp"
#include "rbdo/problem.hpp"
#include "rbdo/sampling.hpp"

namespace rbdo {

struct MCConfig {
  int sample_count = 10000;  // N
  std::uint64_t seed = 0;
  bool reuse_noise = true;  // common random numbers across design points

  void validate() const {
    if (sample_count < 100) throw std::invalid_argument("MCConfig: sample_count must be >= 100");
  }
};

// A design point together with everything selection and prompting need.
struct EvaluatedDesign {
  DesignVector design;
  double cost = 0.0;
  Vec reliabilities;  // one entry per constraint, each in [0,1]
  double penalty = 0.0;
};

// Gaussian sample matrix for one design point: row i ~ N(mean(d), diag(sd^2)),
// design-linked variables centered at d, fixed parameters at their means.
// The noise block is a pure function of cfg.seed, so equal seeds give common
// random numbers across designs; callers vary the seed to break that.
inline Mat draw_mc_samples(const DesignVector& d, const std::vector<RandomVarSpec>& specs,
                           const MCConfig& cfg) {
  cfg.validate();
  const int nr = static_cast<int>(specs.size());
  Vec mean(nr), sd(nr);
  for (int j = 0; j < nr; ++j) {
    mean[j] = specs[static_cast<size_t>(j)].mean_for(d.values());
    sd[j] = specs[static_cast<size_t>(j)].std_dev;
  }
  RngStream rng(cfg.seed, streams::mc_noise);
  Mat out(cfg.sample_count, nr);
  for (int i = 0; i < cfg.sample_count; ++i)
    for (int j = 0; j < nr; ++j) out(i, j) = mean[j] + sd[j] * rng.normal();
  return out;
}

// Failure indicator: 1 iff g < 0 (the boundary g == 0 counts safe).
inline int classify_failure(double g_value) {
  if (!std::isfinite(g_value)) throw EvalError("classify_failure: non-finite limit-state value");
  return g_value < 0.0 ? 1 : 0;
}

inline double reliability_from_values(const Vec& g) {
  long failures = 0;
  for (Eigen::Index i = 0; i < g.size(); ++i) failures += classify_failure(g[i]);
  return 1.0 - static_cast<double>(failures) / static_cast<double>(g.size());
}

// Monte Carlo reliability of one limit state through a predictor.
inline double reliability(const std::function<double(const Vec&)>& predictor, const Mat& samples) {
  Vec g(samples.rows());
  for (Eigen::Index i = 0; i < samples.rows(); ++i) g[i] = predictor(samples.row(i).transpose());
  return reliability_from_values(g);
}

// Quadratic shortfall penalty: sum of w_p (R_t - R_i)^2 over the constraints
// whose reliability falls short of the target; zero when all satisfy it.
inline double penalty(const Vec& reliabilities, double target, double w_p) {
  if (!(w_p > 0)) throw std::invalid_argument("penalty: w_p must be > 0");
  double total = 0.0;
  for (Eigen::Index i = 0; i < reliabilities.size(); ++i) {
    const double r = reliabilities[i];
    if (r < target) {
      const double s = target - r;
      total += w_p * s * s;
    }
  }
  return total;
}

// Constraint predictor backed by one fitted surrogate per limit state.
struct KrigingPredictors {
  std::span<const KrigingModel> models;
  int count() const { return static_cast<int>(models.size()); }
  Vec predict(int i, const Mat& samples) const {
    return models[static_cast<size_t>(i)].predict_mean_batch(samples);
  }
};

// Constraint predictor that evaluates the true limit-state functions.
struct TruePredictors {
  const RBDOProblem* problem;
  int count() const { return problem->nc(); }
  Vec predict(int i, const Mat& samples) const {
    Vec g(samples.rows());
    for (Eigen::Index r = 0; r < samples.rows(); ++r)
      g[r] = eval_constraint(*problem, i, samples.row(r).transpose());
    return g;
  }
};

template <class P>
concept ConstraintPredictor = requires(const P& p, const Mat& samples) {
  { p.count() } -> std::convertible_to<int>;
  { p.predict(0, samples) } -> std::convertible_to<Vec>;
};

// Full evaluation of one design point: cost, per-constraint Monte Carlo
// reliabilities over one shared sample matrix, and the penalty.
template <ConstraintPredictor P>
EvaluatedDesign evaluate_design(const RBDOProblem& problem, const P& predictors,
                                const DesignVector& d, const MCConfig& cfg, double w_p) {
  if (predictors.count() != problem.nc())
    throw std::invalid_argument("evaluate_design: one predictor per constraint required");
  const Mat samples = draw_mc_samples(d, problem.random_vars(), cfg);
  Vec rel(problem.nc());
  for (int i = 0; i < problem.nc(); ++i)
    rel[i] = reliability_from_values(predictors.predict(i, samples));
  EvaluatedDesign out{d, eval_cost(problem, d), rel,
                      penalty(rel, problem.target_reliability(), w_p)};
  return out;
}

inline EvaluatedDesign evaluate_design(const RBDOProblem& problem,
                                       std::span<const KrigingModel> models,
                                       const DesignVector& d, const MCConfig& cfg, double w_p) {
  return evaluate_design(problem, KrigingPredictors{models}, d, cfg, w_p);
}

}  // namespace rbdo

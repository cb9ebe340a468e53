#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "rbdo/optimizer.hpp"
#include "rbdo/problem.hpp"
#include "rbdo/reliability.hpp"
#include "rbdo/sampling.hpp"

namespace rbdo {

// Elitist real-coded GA settings (tournament + SBX + polynomial mutation).
struct GAConfig {
  int population = 50;
  int max_generations = 50;
  double crossover_prob = 0.9;
  double mutation_prob = 0.0;  // 0 -> 1/nd
  int tournament = 2;
  int elite = 1;
  double eta_crossover = 15.0;  // SBX distribution index
  double eta_mutation = 20.0;   // polynomial mutation index
  double penalty_weight = 1000.0;
  MCConfig mc;
  double delta = 0.01;   // record-update threshold, same rule as the main loop
  int lhs_samples = 20;  // surrogate training budget (surrogate mode)
  KrigingConfig kriging;

  void validate() const {
    if (population < 2) throw ConfigError("GAConfig: population must be >= 2");
    if (elite < 0 || elite >= population) throw ConfigError("GAConfig: elite must be < population");
    if (tournament < 1) throw ConfigError("GAConfig: tournament must be >= 1");
    if (max_generations < 1) throw ConfigError("GAConfig: max generations must be >= 1");
    mc.validate();
  }
};

// Scalarized objective the GA minimizes.
inline double ga_fitness(const EvaluatedDesign& e) { return e.cost + e.penalty; }

template <ConstraintPredictor P>
double fitness(const RBDOProblem& problem, const P& predictors, const DesignVector& individual,
               const GAConfig& cfg) {
  return ga_fitness(evaluate_design(problem, predictors, individual, cfg.mc, cfg.penalty_weight));
}

namespace detail {

// Bounded SBX; children are guaranteed inside the box.
inline void sbx_crossover(Vec& a, Vec& b, const Bounds& bounds, double eta, double pc,
                          RngStream& rng) {
  if (rng.uniform01() > pc) return;
  constexpr double eps = 1e-14;
  for (int j = 0; j < bounds.dim(); ++j) {
    if (rng.uniform01() > 0.5) continue;
    if (std::abs(a[j] - b[j]) <= eps) continue;
    const double y1 = std::min(a[j], b[j]);
    const double y2 = std::max(a[j], b[j]);
    const double yl = bounds.lower()[j];
    const double yu = bounds.upper()[j];
    const double u = rng.uniform01();

    auto spread = [&](double beta) {
      const double alpha = 2.0 - std::pow(beta, -(eta + 1.0));
      return (u <= 1.0 / alpha) ? std::pow(u * alpha, 1.0 / (eta + 1.0))
                                : std::pow(1.0 / (2.0 - u * alpha), 1.0 / (eta + 1.0));
    };

    const double betaq1 = spread(1.0 + 2.0 * (y1 - yl) / (y2 - y1));
    double c1 = 0.5 * ((y1 + y2) - betaq1 * (y2 - y1));
    const double betaq2 = spread(1.0 + 2.0 * (yu - y2) / (y2 - y1));
    double c2 = 0.5 * ((y1 + y2) + betaq2 * (y2 - y1));

    c1 = std::clamp(c1, yl, yu);
    c2 = std::clamp(c2, yl, yu);
    if (rng.uniform01() <= 0.5) std::swap(c1, c2);
    a[j] = c1;
    b[j] = c2;
  }
}

// Bounded polynomial mutation.
inline void polynomial_mutation(Vec& x, const Bounds& bounds, double eta, double pm,
                                RngStream& rng) {
  for (int j = 0; j < bounds.dim(); ++j) {
    if (rng.uniform01() > pm) continue;
    const double yl = bounds.lower()[j];
    const double yu = bounds.upper()[j];
    const double y = x[j];
    const double d1 = (y - yl) / (yu - yl);
    const double d2 = (yu - y) / (yu - yl);
    const double u = rng.uniform01();
    const double mut_pow = 1.0 / (eta + 1.0);
    double deltaq;
    if (u <= 0.5) {
      const double xy = 1.0 - d1;
      const double val = 2.0 * u + (1.0 - 2.0 * u) * std::pow(xy, eta + 1.0);
      deltaq = std::pow(val, mut_pow) - 1.0;
    } else {
      const double xy = 1.0 - d2;
      const double val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * std::pow(xy, eta + 1.0);
      deltaq = 1.0 - std::pow(val, mut_pow);
    }
    x[j] = std::clamp(y + deltaq * (yu - yl), yl, yu);
  }
}

}  // namespace detail

template <ConstraintPredictor P>
OptimizationRecord sega_loop(const RBDOProblem& problem, const P& predictors, const GAConfig& cfg,
                             std::uint64_t seed) {
  RngStream rng(seed, streams::ga);
  const Bounds& bounds = problem.bounds();
  const double pm = cfg.mutation_prob > 0 ? cfg.mutation_prob : 1.0 / bounds.dim();

  std::uint64_t eval_counter = 0;
  auto mc_for_eval = [&]() {
    MCConfig mc = cfg.mc;
    if (!mc.reuse_noise) mc.seed = mc.seed ^ (0x9E3779B97F4A7C15ULL * ++eval_counter);
    return mc;
  };
  auto evaluate = [&](const Vec& x) {
    return evaluate_design(problem, predictors, DesignVector(x, bounds), mc_for_eval(),
                           cfg.penalty_weight);
  };

  std::vector<EvaluatedDesign> pop;
  pop.reserve(static_cast<size_t>(cfg.population));
  const Mat init = uniform_candidates(bounds, cfg.population, rng);
  for (int i = 0; i < init.rows(); ++i) pop.push_back(evaluate(init.row(i).transpose()));

  auto by_fitness = [](const EvaluatedDesign& a, const EvaluatedDesign& b) {
    return ga_fitness(a) < ga_fitness(b);
  };
  auto tournament = [&]() -> const EvaluatedDesign& {
    const EvaluatedDesign* winner =
        &pop[static_cast<size_t>(rng.next_u64() % static_cast<std::uint64_t>(pop.size()))];
    for (int t = 1; t < cfg.tournament; ++t) {
      const EvaluatedDesign& challenger =
          pop[static_cast<size_t>(rng.next_u64() % static_cast<std::uint64_t>(pop.size()))];
      if (by_fitness(challenger, *winner)) winner = &challenger;
    }
    return *winner;
  };

  OptimizationRecord record;
  record.method = "sega";
  int generation = 1;
  // like the main loop, only the generation's selected point feeds the record
  auto record_generation = [&]() {
    const EvaluatedDesign& gen_best = *std::min_element(pop.begin(), pop.end(), by_fitness);
    update_record(record, gen_best, cfg.delta);
    record.entries.push_back({generation, gen_best, record.best, false});
  };
  record_generation();

  while (generation < cfg.max_generations) {
    ++generation;
    std::sort(pop.begin(), pop.end(), by_fitness);
    std::vector<EvaluatedDesign> next(pop.begin(), pop.begin() + cfg.elite);
    while (static_cast<int>(next.size()) < cfg.population) {
      Vec a = tournament().design.values();
      Vec b = tournament().design.values();
      detail::sbx_crossover(a, b, bounds, cfg.eta_crossover, cfg.crossover_prob, rng);
      detail::polynomial_mutation(a, bounds, cfg.eta_mutation, pm, rng);
      detail::polynomial_mutation(b, bounds, cfg.eta_mutation, pm, rng);
      next.push_back(evaluate(a));
      if (static_cast<int>(next.size()) < cfg.population) next.push_back(evaluate(b));
    }
    pop = std::move(next);
    record_generation();
  }
  record.termination_reason = "max-generations";
  return record;
}

// GA baseline over the same evaluation stack as the main loop, so the two
// methods differ only in how the next points are proposed.
inline OptimizationRecord sega_run(const RBDOProblem& problem, const GAConfig& cfg,
                                   std::uint64_t seed, EvalMode mode = EvalMode::Surrogate) {
  cfg.validate();
  if (mode == EvalMode::TrueFn) return sega_loop(problem, TruePredictors{&problem}, cfg, seed);
  OptimizerConfig fit_cfg;
  fit_cfg.lhs_samples = cfg.lhs_samples;
  fit_cfg.kriging = cfg.kriging;
  RngStream lhs_rng(seed, streams::lhs);
  const std::vector<KrigingModel> models = fit_surrogates(problem, fit_cfg, lhs_rng);
  return sega_loop(problem, KrigingPredictors{{models.data(), models.size()}}, cfg, seed);
}

}  // namespace rbdo

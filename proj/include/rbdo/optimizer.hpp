#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rbdo/kriging.hpp"
#include "rbdo/problem.hpp"
#include "rbdo/proposer.hpp"
#include "rbdo/reliability.hpp"
#include "rbdo/sampling.hpp"

namespace rbdo {

enum class EvalMode { Surrogate, TrueFn };

struct OptimizerConfig {
  int n_initial = 20;          // candidate initial design points
  int cloud_size = 10;         // extra points sampled around each proposal
  Vec sigma_p;                 // perturbation scale; empty -> sigma_p_frac * range
  double sigma_p_frac = 0.05;
  int history_capacity = 5;    // K entries fed back to the proposer
  double delta = 0.01;         // penalty threshold for record updates
  int stagnation_limit = 10;   // T
  int max_generations = 50;    // S
  MCConfig mc;
  double penalty_weight = 1000.0;  // w_p
  int lhs_samples = 20;        // surrogate training budget
  KrigingConfig kriging;

  void validate() const {
    if (n_initial < 1) throw ConfigError("OptimizerConfig: n_initial must be >= 1");
    if (cloud_size < 1) throw ConfigError("OptimizerConfig: cloud_size must be >= 1");
    if (history_capacity < 1) throw ConfigError("OptimizerConfig: history capacity must be >= 1");
    if (delta < 0) throw ConfigError("OptimizerConfig: delta must be >= 0");
    if (stagnation_limit < 1) throw ConfigError("OptimizerConfig: stagnation limit must be >= 1");
    if (max_generations < 1) throw ConfigError("OptimizerConfig: max generations must be >= 1");
    if (lhs_samples < 2) throw ConfigError("OptimizerConfig: lhs_samples must be >= 2");
    mc.validate();
  }

  Vec resolved_sigma_p(const Bounds& bounds) const {
    if (sigma_p.size() == 0) return sigma_p_frac * bounds.width();
    if (sigma_p.size() != bounds.dim())
      throw ConfigError("OptimizerConfig: sigma_p dimension mismatch");
    return sigma_p;
  }
};

struct GenerationEntry {
  int generation = 0;  // 1-indexed
  EvaluatedDesign selected;
  std::optional<EvaluatedDesign> best_so_far;
  bool fallback = false;
};

// Full run trace plus the two notions of optimum it maintains: `best` is the
// historical optimum under the delta rule, `best_feasible` the lowest-cost
// point whose penalty is exactly zero.
struct OptimizationRecord {
  std::string method;
  std::vector<GenerationEntry> entries;
  std::optional<EvaluatedDesign> best;
  std::optional<EvaluatedDesign> best_feasible;
  std::string termination_reason;  // "stagnation" | "max-generations"
  int fallback_count = 0;
};

// Selection rule: among penalty-zero candidates the cheapest wins; if none
// is feasible the smallest penalty wins. Ties break toward lower cost, then
// earlier index.
inline const EvaluatedDesign& select_best(const std::vector<EvaluatedDesign>& candidates) {
  if (candidates.empty()) throw std::invalid_argument("select_best: empty candidate list");
  const EvaluatedDesign* best = nullptr;
  bool best_feasible = false;
  for (const auto& c : candidates) {
    const bool feas = c.penalty == 0.0;
    if (!best) {
      best = &c;
      best_feasible = feas;
      continue;
    }
    bool better;
    if (feas != best_feasible)
      better = feas;
    else if (feas)
      better = c.cost < best->cost;
    else
      better = c.penalty < best->penalty ||
               (c.penalty == best->penalty && c.cost < best->cost);
    if (better) {
      best = &c;
      best_feasible = feas;
    }
  }
  return *best;
}

// Historical-optimum update: a candidate replaces the record best iff its
// penalty is below delta and its cost beats the incumbent.
inline bool update_record(OptimizationRecord& record, const EvaluatedDesign& candidate,
                          double delta) {
  if (candidate.penalty == 0.0 &&
      (!record.best_feasible || candidate.cost < record.best_feasible->cost))
    record.best_feasible = candidate;
  const bool improved =
      candidate.penalty < delta && (!record.best || candidate.cost < record.best->cost);
  if (improved) record.best = candidate;
  return improved;
}

struct LoopState {
  HistoryBuffer history;
  OptimizationRecord record;
  int generation = 0;
  int stagnation = 0;
  std::uint64_t eval_counter = 0;
};

namespace detail {

inline MCConfig next_mc_config(const OptimizerConfig& cfg, LoopState& state) {
  MCConfig mc = cfg.mc;
  if (!mc.reuse_noise) mc.seed = mc.seed ^ (0x9E3779B97F4A7C15ULL * ++state.eval_counter);
  return mc;
}

}  // namespace detail

// First generation: evaluate uniformly drawn candidates, keep the winner.
template <ConstraintPredictor P>
LoopState initialize(const RBDOProblem& problem, const P& predictors,
                     const OptimizerConfig& cfg, RngStream& rng) {
  LoopState state{HistoryBuffer(cfg.history_capacity), {}, 0, 0, 0};
  const Mat cands = uniform_candidates(problem.bounds(), cfg.n_initial, rng);
  std::vector<EvaluatedDesign> evaluated;
  evaluated.reserve(static_cast<size_t>(cfg.n_initial));
  for (int i = 0; i < cands.rows(); ++i)
    evaluated.push_back(evaluate_design(problem, predictors,
                                        DesignVector(cands.row(i).transpose(), problem.bounds()),
                                        detail::next_mc_config(cfg, state),
                                        cfg.penalty_weight));
  const EvaluatedDesign& first = select_best(evaluated);
  state.history.push(first);
  state.generation = 1;
  const bool improved = update_record(state.record, first, cfg.delta);
  state.stagnation = improved ? 0 : 1;
  state.record.entries.push_back({1, first, state.record.best, false});
  return state;
}

// One generation: propose, sample the cloud around the proposal, screen
// against the bounds (the clamped proposal itself always survives),
// evaluate, select, and update history/record/stagnation.
template <ConstraintPredictor P>
void step(LoopState& state, const RBDOProblem& problem, const P& predictors,
          Proposer& proposer, const OptimizerConfig& cfg, RngStream& proposer_rng,
          RngStream& cloud_rng) {
  ++state.generation;
  bool fallback = false;
  const DesignVector proposal =
      proposer.propose(state.history, proposer_rng, state.generation, &fallback);
  const Vec sigma = cfg.resolved_sigma_p(problem.bounds());
  const Mat cloud = gaussian_cloud(proposal, sigma, cfg.cloud_size, cloud_rng);

  std::vector<EvaluatedDesign> evaluated;
  evaluated.push_back(evaluate_design(problem, predictors, proposal,
                                      detail::next_mc_config(cfg, state), cfg.penalty_weight));
  for (int i = 0; i < cloud.rows(); ++i) {
    const auto kept =
        clamp_or_reject(cloud.row(i).transpose(), problem.bounds(), OutOfBoundsPolicy::Reject);
    if (!kept) continue;
    evaluated.push_back(evaluate_design(problem, predictors, *kept,
                                        detail::next_mc_config(cfg, state), cfg.penalty_weight));
  }

  const EvaluatedDesign& selected = select_best(evaluated);
  state.history.push(selected);
  const bool improved = update_record(state.record, selected, cfg.delta);
  state.stagnation = improved ? 0 : state.stagnation + 1;
  if (fallback) ++state.record.fallback_count;
  state.record.entries.push_back({state.generation, selected, state.record.best, fallback});
}

// Trains one surrogate per limit state from a Latin hypercube over the
// region Monte Carlo sampling will visit.
inline std::vector<KrigingModel> fit_surrogates(const RBDOProblem& problem,
                                                const OptimizerConfig& cfg, RngStream& rng) {
  const Bounds domain = surrogate_training_bounds(problem);
  const Mat X = latin_hypercube(domain, cfg.lhs_samples, rng);
  std::vector<KrigingModel> models;
  models.reserve(static_cast<size_t>(problem.nc()));
  for (int i = 0; i < problem.nc(); ++i) {
    Vec g(X.rows());
    for (Eigen::Index r = 0; r < X.rows(); ++r)
      g[r] = eval_constraint(problem, i, X.row(r).transpose());
    models.push_back(fit(X, g, cfg.kriging, domain));
  }
  return models;
}

template <ConstraintPredictor P>
OptimizationRecord run_loop(const RBDOProblem& problem, const P& predictors, Proposer& proposer,
                            const OptimizerConfig& cfg, std::uint64_t seed) {
  RngStream init_rng(seed, streams::init_candidates);
  RngStream proposer_rng(seed, streams::policy);
  RngStream cloud_rng(seed, streams::perturbation);

  auto state = initialize(problem, predictors, cfg, init_rng);
  while (state.stagnation < cfg.stagnation_limit && state.generation < cfg.max_generations)
    step(state, problem, predictors, proposer, cfg, proposer_rng, cloud_rng);
  state.record.termination_reason =
      state.stagnation >= cfg.stagnation_limit ? "stagnation" : "max-generations";
  state.record.method = "llm-rbdo";
  return state.record;
}

// Full pipeline: fit surrogates (surrogate mode), seed the loop, iterate
// until the record stalls for T generations or the generation budget S is
// spent. A failed remote backend degrades to fallback proposals and never
// aborts the run.
inline OptimizationRecord run(const RBDOProblem& problem, Proposer& proposer,
                              const OptimizerConfig& cfg, std::uint64_t seed,
                              EvalMode mode = EvalMode::Surrogate,
                              std::vector<KrigingModel>* out_models = nullptr) {
  cfg.validate();
  if (mode == EvalMode::TrueFn)
    return run_loop(problem, TruePredictors{&problem}, proposer, cfg, seed);
  RngStream lhs_rng(seed, streams::lhs);
  std::vector<KrigingModel> models = fit_surrogates(problem, cfg, lhs_rng);
  OptimizationRecord rec = run_loop(
      problem, KrigingPredictors{{models.data(), models.size()}}, proposer, cfg, seed);
  if (out_models) *out_models = std::move(models);
  return rec;
}

}  // namespace rbdo

#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rbdo/benchmarks.hpp"
#include "rbdo/ga.hpp"
#include "rbdo/optimizer.hpp"
#include "rbdo/proposer.hpp"

namespace rbdo {

// Exit codes shared by every subcommand.
enum ExitCode : int {
  exit_ok = 0,
  exit_config_error = 1,
  exit_degraded = 2,  // run finished but fallback proposals were used
  exit_failure = 3,
};

struct RunConfig {
  std::string problem = "case1";
  std::string coeff_path;  // case2/custom coefficient file override
  std::string method = "llm-rbdo";   // or "sega"
  std::string backend = "scripted";  // or "remote"
  std::string mode = "surrogate";    // or "true"
  std::uint64_t seed = 1;
  bool mc_seed_set = false;  // when false, mc.seed follows the master seed
  std::string out_dir = "out";
  OptimizerConfig opt;
  GAConfig ga;
  BackendConfig llm;
  // custom problems only
  double custom_lower = 0.0, custom_upper = 1.0, custom_sigma = 0.05, custom_rt = 0.9;
};

namespace detail {

inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline nlohmann::json to_json(const EvaluatedDesign& e) {
  return {{"x", std::vector<double>(e.design.values().data(),
                                    e.design.values().data() + e.design.dim())},
          {"cost", e.cost},
          {"penalty", e.penalty},
          {"reliabilities",
           std::vector<double>(e.reliabilities.data(), e.reliabilities.data() + e.reliabilities.size())}};
}

inline nlohmann::json config_json(const RunConfig& rc) {
  nlohmann::json j{{"problem", rc.problem},
                   {"method", rc.method},
                   {"backend", rc.backend},
                   {"mode", rc.mode},
                   {"seed", rc.seed},
                   {"out_dir", rc.out_dir}};
  if (!rc.coeff_path.empty()) j["coeff_path"] = rc.coeff_path;
  j["optimizer"] = {{"n_initial", rc.opt.n_initial},
                    {"cloud_size", rc.opt.cloud_size},
                    {"sigma_p_frac", rc.opt.sigma_p_frac},
                    {"history", rc.opt.history_capacity},
                    {"delta", rc.opt.delta},
                    {"stagnation_limit", rc.opt.stagnation_limit},
                    {"max_generations", rc.opt.max_generations},
                    {"penalty_weight", rc.opt.penalty_weight},
                    {"lhs_samples", rc.opt.lhs_samples}};
  j["ga"] = {{"population", rc.ga.population},
             {"max_generations", rc.ga.max_generations},
             {"crossover_prob", rc.ga.crossover_prob},
             {"mutation_prob", rc.ga.mutation_prob},
             {"tournament", rc.ga.tournament},
             {"elite", rc.ga.elite},
             {"eta_crossover", rc.ga.eta_crossover},
             {"eta_mutation", rc.ga.eta_mutation},
             {"delta", rc.ga.delta}};
  j["mc"] = {{"samples", rc.opt.mc.sample_count},
             {"seed", rc.opt.mc.seed},
             {"reuse_noise", rc.opt.mc.reuse_noise}};
  j["kriging"] = {{"exponent", rc.opt.kriging.exponent},
                  {"multistart", rc.opt.kriging.multistart},
                  {"nugget", rc.opt.kriging.nugget}};
  if (rc.backend == "remote")
    j["llm"] = {{"endpoint", rc.llm.endpoint},
                {"model", rc.llm.model},
                {"temperature", rc.llm.temperature},
                {"top_p", rc.llm.top_p},
                {"timeout_seconds", rc.llm.timeout_seconds},
                {"max_parse_retries", rc.llm.max_parse_retries},
                {"api_key_env", rc.llm.api_key_env}};
  return j;
}

inline void write_trace(const std::string& path, const RBDOProblem& problem,
                        const OptimizationRecord& rec, const nlohmann::json& config) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write trace file '" + path + "'");
  f << "# rbdo trace v1\n";
  f << "# config: " << config.dump() << "\n";
  f << "# stagnation counts generations since the last accepted record update; a run stops "
       "when the counter reaches the configured limit\n";
  f << "# columns: generation";
  for (int i = 1; i <= problem.nd(); ++i) f << ",x" << i;
  f << ",cost,penalty";
  for (int i = 1; i <= problem.nc(); ++i) f << ",R" << i;
  f << ",best_cost,fallback\n";
  for (const auto& e : rec.entries) {
    f << e.generation;
    for (int i = 0; i < problem.nd(); ++i) f << ',' << num(e.selected.design[i]);
    f << ',' << num(e.selected.cost) << ',' << num(e.selected.penalty);
    for (int i = 0; i < problem.nc(); ++i) f << ',' << num(e.selected.reliabilities[i]);
    f << ',' << (e.best_so_far ? num(e.best_so_far->cost) : "nan");
    f << ',' << (e.fallback ? 1 : 0) << '\n';
  }
}

inline void write_summary(const std::string& path, const RunConfig& rc,
                          const OptimizationRecord& rec, const nlohmann::json& config) {
  nlohmann::json j{{"schema", "rbdo-summary-v1"},
                   {"problem", rc.problem},
                   {"method", rec.method},
                   {"backend", rc.backend},
                   {"mode", rc.mode},
                   {"seed", rc.seed},
                   {"generations", rec.entries.size()},
                   {"termination_reason", rec.termination_reason},
                   {"fallbacks", rec.fallback_count},
                   {"config", config}};
  j["best"] = rec.best ? to_json(*rec.best) : nlohmann::json(nullptr);
  j["best_feasible"] = rec.best_feasible ? to_json(*rec.best_feasible) : nlohmann::json(nullptr);
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write summary file '" + path + "'");
  f << j.dump(2) << '\n';
}

}  // namespace detail

inline RBDOProblem resolve_problem(const RunConfig& rc) {
  if (rc.problem == "custom") {
    if (rc.coeff_path.empty()) throw ConfigError("custom problem requires a coefficient file");
    const PolynomialSpec spec = load_polynomials(rc.coeff_path);
    const int k = spec.variable_count;
    return make_custom_problem(spec,
                               Bounds(Vec::Constant(k, rc.custom_lower),
                                      Vec::Constant(k, rc.custom_upper)),
                               rc.custom_sigma, rc.custom_rt);
  }
  return make_problem(rc.problem, rc.coeff_path);
}

// Execute one optimization run and write trace/summary (and the proposer
// transcript for remote backends) under the output directory.
inline int cmd_run(RunConfig rc, std::ostream& log = std::cout) {
  try {
    if (!rc.mc_seed_set) rc.opt.mc.seed = rc.seed;
    rc.ga.mc = rc.opt.mc;
    rc.ga.penalty_weight = rc.opt.penalty_weight;
    rc.ga.lhs_samples = rc.opt.lhs_samples;
    rc.ga.kriging = rc.opt.kriging;

    const RBDOProblem problem = resolve_problem(rc);
    const EvalMode mode = [&] {
      if (rc.mode == "surrogate") return EvalMode::Surrogate;
      if (rc.mode == "true") return EvalMode::TrueFn;
      throw ConfigError("mode must be 'surrogate' or 'true'");
    }();

    std::filesystem::create_directories(rc.out_dir);
    const auto config = detail::config_json(rc);
    OptimizationRecord rec;

    if (rc.method == "llm-rbdo") {
      BackendConfig llm = rc.llm;
      llm.kind = rc.backend == "remote" ? BackendKind::Remote : BackendKind::Scripted;
      Proposer proposer(llm, default_prompt_spec(problem.nd()), problem.bounds(),
                        rc.opt.resolved_sigma_p(problem.bounds()));
      std::ofstream transcript;
      if (llm.kind == BackendKind::Remote) {
        transcript.open(rc.out_dir + "/transcript.jsonl");
        proposer.set_transcript(&transcript);
      }
      rec = run(problem, proposer, rc.opt, rc.seed, mode);
    } else if (rc.method == "sega") {
      rec = sega_run(problem, rc.ga, rc.seed, mode);
    } else {
      throw ConfigError("method must be 'llm-rbdo' or 'sega'");
    }

    detail::write_trace(rc.out_dir + "/trace.csv", problem, rec, config);
    detail::write_summary(rc.out_dir + "/summary.json", rc, rec, config);

    log << "run finished: " << rec.entries.size() << " generations, " << rec.termination_reason;
    if (rec.best)
      log << ", best cost " << rec.best->cost << " (penalty " << rec.best->penalty << ")";
    else
      log << ", no design met the record threshold";
    if (rec.fallback_count > 0) log << ", " << rec.fallback_count << " fallback proposals";
    log << "\n  artifacts in " << rc.out_dir << "\n";
    return rec.fallback_count > 0 ? exit_degraded : exit_ok;
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return exit_config_error;
  } catch (const std::invalid_argument& e) {
    log << "config error: " << e.what() << "\n";
    return exit_config_error;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return exit_failure;
  }
}

// Re-check a summary's best point against the true limit states with a
// fresh Monte Carlo estimate; reports per-constraint deltas.
inline int cmd_validate(const std::string& summary_path, const std::string& problem_override,
                        const std::string& coeff_path, int n_samples, std::uint64_t seed,
                        std::ostream& out = std::cout) {
  try {
    std::ifstream f(summary_path);
    if (!f) throw ConfigError("cannot open summary '" + summary_path + "'");
    const auto j = nlohmann::json::parse(f);
    if (j["best"].is_null() && j["best_feasible"].is_null())
      throw ConfigError("summary contains no best design to validate");
    const auto& best = j["best"].is_null() ? j["best_feasible"] : j["best"];

    RunConfig rc;
    rc.problem = problem_override.empty() ? j["problem"].get<std::string>() : problem_override;
    rc.coeff_path = coeff_path;
    const RBDOProblem problem = resolve_problem(rc);

    const std::vector<double> xs = best["x"].get<std::vector<double>>();
    if (static_cast<int>(xs.size()) != problem.nd())
      throw ConfigError("summary design dimension does not match problem '" + rc.problem + "'");
    const DesignVector d(Eigen::Map<const Vec>(xs.data(), static_cast<Eigen::Index>(xs.size())),
                         problem.bounds());

    MCConfig mc;
    mc.sample_count = n_samples;
    mc.seed = seed;
    const EvaluatedDesign ev =
        evaluate_design(problem, TruePredictors{&problem}, d, mc, 1000.0);

    const std::vector<double> surrogate_r =
        best["reliabilities"].get<std::vector<double>>();
    out << "validation of " << summary_path << " (problem " << rc.problem << ", N=" << n_samples
        << ")\n";
    out << "  cost " << ev.cost << ", penalty(true) " << ev.penalty << "\n";
    out << "  constraint   reported   true-MC     delta\n";
    for (int i = 0; i < problem.nc(); ++i) {
      const double rep = i < static_cast<int>(surrogate_r.size()) ? surrogate_r[static_cast<size_t>(i)] : std::nan("");
      char line[128];
      std::snprintf(line, sizeof line, "  G%-10d %8.4f   %8.4f   %+8.4f\n", i + 1, rep,
                    ev.reliabilities[i], ev.reliabilities[i] - rep);
      out << line;
    }
    // 95% CI half-width at worst case p=0.5
    const double half_width = 1.96 * std::sqrt(0.25 / n_samples);
    if (half_width > 0.01)
      out << "  WARNING: N=" << n_samples << " gives a wide 95% confidence interval (+-"
          << half_width << "); increase --mc-samples\n";
    return exit_ok;
  } catch (const ConfigError& e) {
    out << "config error: " << e.what() << "\n";
    return exit_config_error;
  } catch (const std::exception& e) {
    out << "error: " << e.what() << "\n";
    return exit_failure;
  }
}

namespace detail {

struct TableRow {
  std::string method, estimation, optimum;
  double cost = 0.0;
  std::vector<double> rel;
};

inline void print_table(std::ostream& out, const std::string& title,
                        const std::vector<TableRow>& rows, const std::vector<int>& g_indices) {
  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> header{"RBDO method", "Reliability estimation", "Optimum solution",
                                  "Cost"};
  for (int g : g_indices) header.push_back("G" + std::to_string(g + 1));
  cells.push_back(header);
  for (const auto& r : rows) {
    std::vector<std::string> row{r.method, r.estimation, r.optimum};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", r.cost);
    row.push_back(buf);
    for (int g : g_indices) {
      if (g < static_cast<int>(r.rel.size())) {
        std::snprintf(buf, sizeof buf, "%.4g", r.rel[static_cast<size_t>(g)]);
        row.push_back(buf);
      } else {
        row.push_back("-");
      }
    }
    cells.push_back(row);
  }
  std::vector<size_t> widths(cells[0].size(), 0);
  for (const auto& row : cells)
    for (size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());
  if (!title.empty()) out << title << "\n";
  for (size_t r = 0; r < cells.size(); ++r) {
    for (size_t c = 0; c < cells[r].size(); ++c) {
      out << cells[r][c];
      if (c + 1 < cells[r].size())
        out << std::string(widths[c] - cells[r][c].size() + 2, ' ');
    }
    out << "\n";
    if (r == 0) {
      size_t total = 0;
      for (size_t c = 0; c < widths.size(); ++c) total += widths[c] + (c + 1 < widths.size() ? 2 : 0);
      out << std::string(total, '-') << "\n";
    }
  }
}

}  // namespace detail

// Side-by-side comparison of run summaries, aligned text plus optional CSV.
inline int cmd_table(const std::vector<std::string>& summary_paths, const std::string& csv_path,
                     std::ostream& out = std::cout) {
  try {
    if (summary_paths.empty()) throw ConfigError("table needs at least one summary");
    std::vector<detail::TableRow> rows;
    size_t nc = 0;
    for (const auto& path : summary_paths) {
      std::ifstream f(path);
      if (!f) throw ConfigError("cannot open summary '" + path + "'");
      const auto j = nlohmann::json::parse(f);
      const auto& best = j["best"].is_null() ? j["best_feasible"] : j["best"];
      if (best.is_null()) throw ConfigError("summary '" + path + "' has no best design");
      detail::TableRow r;
      r.method = j["method"] == "sega" ? "SEGA" : "LLM-RBDO";
      r.estimation = j["mode"] == "true" ? "True constraint" : "Kriging";
      std::string opt = "[";
      const auto xs = best["x"].get<std::vector<double>>();
      for (size_t i = 0; i < xs.size(); ++i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4g", xs[i]);
        opt += buf;
        if (i + 1 < xs.size()) opt += ", ";
      }
      opt += "]";
      r.optimum = opt;
      r.cost = best["cost"].get<double>();
      r.rel = best["reliabilities"].get<std::vector<double>>();
      nc = std::max(nc, r.rel.size());
      rows.push_back(std::move(r));
    }

    if (nc == 10) {
      // high-dimensional case: report the two interesting constraint groups
      detail::print_table(out, "(a)", rows, {1, 2, 3});
      out << "\n";
      detail::print_table(out, "(b)", rows, {7, 8, 9});
    } else {
      std::vector<int> all(nc);
      for (size_t i = 0; i < nc; ++i) all[i] = static_cast<int>(i);
      detail::print_table(out, "", rows, all);
    }

    if (!csv_path.empty()) {
      std::ofstream csv(csv_path);
      if (!csv) throw ConfigError("cannot write '" + csv_path + "'");
      csv << "method,estimation,optimum,cost";
      for (size_t i = 1; i <= nc; ++i) csv << ",G" << i;
      csv << "\n";
      for (const auto& r : rows) {
        csv << r.method << ',' << r.estimation << ",\"" << r.optimum << "\"," << detail::num(r.cost);
        for (size_t i = 0; i < nc; ++i)
          csv << ',' << (i < r.rel.size() ? detail::num(r.rel[i]) : "");
        csv << "\n";
      }
    }
    return exit_ok;
  } catch (const ConfigError& e) {
    out << "config error: " << e.what() << "\n";
    return exit_config_error;
  } catch (const std::exception& e) {
    out << "error: " << e.what() << "\n";
    return exit_failure;
  }
}

}  // namespace rbdo

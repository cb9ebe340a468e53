// Command-line harness: run optimizations, validate reported optima with a
// true-function Monte Carlo check, and tabulate run summaries.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "rbdo/rbdo.hpp"

namespace {

// "a..b" -> [a, b] inclusive
bool parse_seed_range(const std::string& text, std::uint64_t& a, std::uint64_t& b) {
  const auto pos = text.find("..");
  if (pos == std::string::npos) return false;
  try {
    a = std::stoull(text.substr(0, pos));
    b = std::stoull(text.substr(pos + 2));
  } catch (...) {
    return false;
  }
  return a <= b;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"reliability-based design optimization toolkit"};
  app.require_subcommand(1);
  // usage: rbdo --config exp.ini run [flags]; sections name the subcommand,
  // e.g. [run]; explicit flags take precedence over file values
  app.set_config("--config", "", "read options from an INI/TOML config file");

  rbdo::RunConfig rc;
  std::string seeds_range;
  std::string sigma_p_csv;

  auto* run = app.add_subcommand("run", "execute one optimization run");
  run->add_option("--problem", rc.problem, "problem name: case1, case2 or custom")
      ->capture_default_str();
  run->add_option("--coeffs", rc.coeff_path, "constraint coefficient file (case2/custom)");
  run->add_option("--method", rc.method, "llm-rbdo or sega")->capture_default_str();
  run->add_option("--backend", rc.backend, "scripted or remote")->capture_default_str();
  run->add_option("--mode", rc.mode, "constraint evaluation: surrogate or true")
      ->capture_default_str();
  run->add_option("--seed", rc.seed, "master seed")->capture_default_str();
  run->add_option("--seeds", seeds_range, "seed sweep 'a..b'; runs concurrently, one "
                                          "subdirectory per seed");
  run->add_option("--out", rc.out_dir, "output directory")->capture_default_str();

  run->add_option("--n-initial", rc.opt.n_initial, "candidate initial design points")
      ->capture_default_str();
  run->add_option("--cloud", rc.opt.cloud_size, "points sampled around each proposal")
      ->capture_default_str();
  run->add_option("--sigma-p", sigma_p_csv, "perturbation sigmas, comma separated");
  run->add_option("--sigma-p-frac", rc.opt.sigma_p_frac,
                  "perturbation sigma as a fraction of each variable's range")
      ->capture_default_str();
  run->add_option("--history", rc.opt.history_capacity, "history entries shown to the proposer")
      ->capture_default_str();
  run->add_option("--delta", rc.opt.delta, "penalty threshold for record updates")
      ->capture_default_str();
  run->add_option("--stagnation", rc.opt.stagnation_limit,
                  "stop after this many generations without a record update")
      ->capture_default_str();
  run->add_option("--max-gens", rc.opt.max_generations, "generation budget")
      ->capture_default_str();
  run->add_option("--lhs", rc.opt.lhs_samples, "surrogate training samples")
      ->capture_default_str();
  run->add_option("--wp", rc.opt.penalty_weight, "penalty weight")->capture_default_str();

  bool mc_independent = false;
  std::uint64_t mc_seed = 0;
  run->add_option("--mc-samples", rc.opt.mc.sample_count, "Monte Carlo samples per evaluation")
      ->capture_default_str();
  auto* mc_seed_opt = run->add_option("--mc-seed", mc_seed, "Monte Carlo seed (defaults to --seed)");
  run->add_flag("--mc-independent", mc_independent,
                "fresh Monte Carlo noise per evaluation instead of common random numbers");

  run->add_option("--multistart", rc.opt.kriging.multistart, "hyperparameter search restarts")
      ->capture_default_str();
  run->add_option("--nugget", rc.opt.kriging.nugget, "correlation matrix regularization")
      ->capture_default_str();

  run->add_option("--pop", rc.ga.population, "GA population size")->capture_default_str();
  run->add_option("--ga-gens", rc.ga.max_generations, "GA generation budget")
      ->capture_default_str();
  run->add_option("--pc", rc.ga.crossover_prob, "GA crossover probability")
      ->capture_default_str();
  run->add_option("--pm", rc.ga.mutation_prob, "GA mutation probability (0 = 1/nd)")
      ->capture_default_str();
  run->add_option("--eta-c", rc.ga.eta_crossover, "SBX distribution index")
      ->capture_default_str();
  run->add_option("--eta-m", rc.ga.eta_mutation, "polynomial mutation index")
      ->capture_default_str();
  run->add_option("--elite", rc.ga.elite, "GA elite count")->capture_default_str();
  run->add_option("--tournament", rc.ga.tournament, "GA tournament size")->capture_default_str();

  run->add_option("--endpoint", rc.llm.endpoint, "chat-completion endpoint URL")
      ->capture_default_str();
  run->add_option("--model", rc.llm.model, "remote model name")->capture_default_str();
  run->add_option("--temperature", rc.llm.temperature, "sampling temperature")
      ->capture_default_str();
  run->add_option("--top-p", rc.llm.top_p, "nucleus sampling cutoff")->capture_default_str();
  run->add_option("--timeout", rc.llm.timeout_seconds, "request timeout in seconds")
      ->capture_default_str();
  run->add_option("--retries", rc.llm.max_parse_retries, "request attempts before fallback")
      ->capture_default_str();
  run->add_option("--api-key-env", rc.llm.api_key_env, "environment variable holding the API key")
      ->capture_default_str();

  run->add_option("--custom-lower", rc.custom_lower, "custom problem: lower bound");
  run->add_option("--custom-upper", rc.custom_upper, "custom problem: upper bound");
  run->add_option("--custom-sigma", rc.custom_sigma, "custom problem: per-variable std dev");
  run->add_option("--custom-rt", rc.custom_rt, "custom problem: target reliability");

  std::string summary_path, problem_override, coeffs_override;
  int validate_samples = 10000;
  std::uint64_t validate_seed = 1;
  auto* validate = app.add_subcommand("validate",
                                      "re-check a summary's best point against the true limit states");
  validate->add_option("summary", summary_path, "summary.json from a run")->required();
  validate->add_option("--problem", problem_override, "override the summary's problem name");
  validate->add_option("--coeffs", coeffs_override, "constraint coefficient file");
  validate->add_option("--mc-samples", validate_samples, "Monte Carlo samples")
      ->capture_default_str();
  validate->add_option("--seed", validate_seed, "Monte Carlo seed")->capture_default_str();

  std::vector<std::string> table_summaries;
  std::string table_csv;
  auto* table = app.add_subcommand("table", "tabulate run summaries side by side");
  table->add_option("summaries", table_summaries, "summary.json files")->required();
  table->add_option("--csv", table_csv, "also write a machine-readable CSV");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    rc.opt.mc.reuse_noise = !mc_independent;
    rc.mc_seed_set = mc_seed_opt->count() > 0;
    if (rc.mc_seed_set) rc.opt.mc.seed = mc_seed;
    if (!sigma_p_csv.empty()) {
      std::vector<double> vals;
      std::stringstream ss(sigma_p_csv);
      std::string tok;
      while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
      rc.opt.sigma_p = Eigen::Map<rbdo::Vec>(vals.data(), static_cast<Eigen::Index>(vals.size()));
    }

    if (!seeds_range.empty()) {
      std::uint64_t a = 0, b = 0;
      if (!parse_seed_range(seeds_range, a, b)) {
        std::cerr << "config error: --seeds expects 'a..b' with a <= b\n";
        return rbdo::exit_config_error;
      }
      std::vector<std::thread> workers;
      std::vector<int> codes(static_cast<size_t>(b - a + 1), 0);
      std::vector<std::ostringstream> logs(static_cast<size_t>(b - a + 1));
      for (std::uint64_t s = a; s <= b; ++s) {
        const size_t idx = static_cast<size_t>(s - a);
        rbdo::RunConfig sub = rc;
        sub.seed = s;
        sub.mc_seed_set = rc.mc_seed_set;
        sub.out_dir = rc.out_dir + "/" + std::to_string(s);
        workers.emplace_back(
            [sub, &codes, &logs, idx] { codes[idx] = rbdo::cmd_run(sub, logs[idx]); });
      }
      for (auto& w : workers) w.join();
      int worst = rbdo::exit_ok;
      for (size_t i = 0; i < codes.size(); ++i) {
        std::cout << "[seed " << a + i << "] " << logs[i].str();
        worst = std::max(worst, codes[i]);
      }
      return worst;
    }
    return rbdo::cmd_run(rc);
  }
  if (validate->parsed())
    return rbdo::cmd_validate(summary_path, problem_override, coeffs_override, validate_samples,
                              validate_seed);
  if (table->parsed()) return rbdo::cmd_table(table_summaries, table_csv);
  return rbdo::exit_config_error;
}

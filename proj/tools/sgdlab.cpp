// Command-line front end: run / sweep / bounds / profile / permsearch / batchbound.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sgdlab/experiment.hpp"

namespace {

using namespace sgdlab;

std::vector<std::size_t> parse_sigma(const std::string& text) {
  std::vector<std::size_t> sigma;
  std::stringstream stream(text);
  std::string item;
  while (std::getline(stream, item, ',')) {
    if (item.empty()) continue;
    sigma.push_back(static_cast<std::size_t>(std::stoull(item)));
  }
  return sigma;
}

// Problem selection shared by every subcommand.
struct ProblemCli {
  std::string file;
  bool quadratic = false;
  bool phase_retrieval = false;
  std::size_t dimension = 0;
  std::size_t samples = 0;
  double noise_std = 0.0;
  std::uint64_t seed = 1;
  bool incoherent = false;
  double center_spread = 1.0;
  double eig_min = 0.2;
  double eig_max = 1.0;
  CLI::Option* seed_option = nullptr;

  void attach(CLI::App* cmd) {
    cmd->add_option("--problem,-p", file, "problem definition JSON file");
    cmd->add_flag("--quadratic", quadratic, "generate a random quadratic suite");
    cmd->add_flag("--phase-retrieval", phase_retrieval, "generate a phase retrieval instance");
    cmd->add_option("--d", dimension, "generated problem dimension");
    cmd->add_option("--n", samples, "generated sample count");
    cmd->add_option("--noise-std", noise_std, "phase retrieval noise standard deviation");
    seed_option = cmd->add_option("--problem-seed", seed, "generator seed (defaults to --seed)");
    cmd->add_flag("--incoherent", incoherent, "scatter quadratic centers (minimizer incoherence)");
    cmd->add_option("--center-spread", center_spread, "scatter scale for incoherent centers");
    cmd->add_option("--eig-min", eig_min, "smallest curvature eigenvalue");
    cmd->add_option("--eig-max", eig_max, "largest curvature eigenvalue");
  }

  bool any() const { return !file.empty() || quadratic || phase_retrieval; }

  ProblemSpec spec(std::uint64_t fallback_seed) const {
    std::uint64_t generator_seed = seed;
    if (seed_option != nullptr && seed_option->count() == 0) generator_seed = fallback_seed;
    return make_spec(generator_seed);
  }

 private:
  ProblemSpec make_spec(std::uint64_t generator_seed) const {
    ProblemSpec spec;
    if (!file.empty()) {
      spec.kind = ProblemSpec::Kind::Inline;
      spec.inline_problem = json::parse(read_text_file(file));
      problem_from_json(spec.inline_problem);  // validate eagerly
      return spec;
    }
    if (quadratic) {
      spec.kind = ProblemSpec::Kind::Quadratic;
      spec.quadratic.dimension = dimension ? dimension : 2;
      spec.quadratic.samples = samples ? samples : 4;
      spec.quadratic.seed = generator_seed;
      spec.quadratic.coherent = !incoherent;
      spec.quadratic.center_spread = center_spread;
      spec.quadratic.eig_min = eig_min;
      spec.quadratic.eig_max = eig_max;
      return spec;
    }
    if (phase_retrieval) {
      spec.kind = ProblemSpec::Kind::PhaseRetrieval;
      spec.phase_retrieval.dimension = dimension ? dimension : 32;
      spec.phase_retrieval.samples = samples ? samples : 128;
      spec.phase_retrieval.noise_std = noise_std;
      spec.phase_retrieval.seed = generator_seed;
      return spec;
    }
    throw std::invalid_argument("no problem given: use --problem, --quadratic or --phase-retrieval");
  }
};

std::string resolve_out_dir(const std::string& flag_value, const std::string& config_value) {
  if (!flag_value.empty()) return flag_value;
  if (!config_value.empty()) return config_value;
  if (const char* env = std::getenv("SGDLAB_OUT"); env != nullptr && *env != '\0') return env;
  return {};
}

std::vector<SchemeSpec> schemes_from_names(const std::vector<std::string>& names,
                                           const std::vector<std::size_t>& sigma) {
  std::vector<SchemeSpec> schemes;
  for (const auto& name : names) {
    SchemeSpec spec;
    spec.kind = scheme_from_name(name);
    if (spec.kind == SamplingScheme::Incremental) spec.sigma = sigma;
    schemes.push_back(std::move(spec));
  }
  return schemes;
}

void emit(const std::string& out_dir, const std::string& filename, const std::string& content) {
  if (out_dir.empty()) {
    std::cout << content;
    return;
  }
  std::filesystem::create_directories(out_dir);
  write_text_file(out_dir + "/" + filename, content);
}

std::string bound_report_csv(const std::vector<BoundReport>& reports) {
  std::string csv = "name,scheme,epoch,envelope,empirical,standard_error,violated\n";
  for (const auto& report : reports)
    for (std::size_t b = 0; b < report.envelope.size(); ++b) {
      const bool violated =
          std::find(report.violations.begin(), report.violations.end(), b) != report.violations.end();
      csv += report.name + "," + scheme_name(report.scheme) + "," + std::to_string(b) + "," +
             format_double(report.envelope[b]) + "," + format_double(report.empirical[b]) + "," +
             format_double(report.standard_error[b]) + "," + (violated ? "1" : "0") + "\n";
    }
  return csv;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sgdlab: finite-sum SGD sampling-scheme laboratory"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string out_flag;
  std::size_t threads = 1;
  std::uint64_t base_seed = 0;
  app.add_option("--config", config_path, "experiment config JSON; flags override its fields");
  app.add_option("--out", out_flag, "output directory (env SGDLAB_OUT is the default)");
  app.add_option("--threads", threads, "worker threads for seed fan-out");
  app.add_option("--seed", base_seed, "base seed for run-level randomness");

  // run / sweep -------------------------------------------------------------
  ProblemCli run_problem;
  std::vector<std::string> scheme_names;
  std::string sigma_text;
  double eta = 0.1;
  std::size_t epochs = 50;
  std::size_t seeds = 1;
  std::string theta0_text = "gaussian:1";
  bool record_iterates = false;
  bool allow_large_eta = false;
  std::vector<double> noise_stds;

  CLI::App* cmd_run = app.add_subcommand("run", "run SGD and emit result files");
  run_problem.attach(cmd_run);
  cmd_run->add_option("--scheme", scheme_names, "reshuffle | incremental | replacement (repeatable)");
  cmd_run->add_option("--sigma", sigma_text, "fixed permutation for incremental, comma separated");
  cmd_run->add_option("--eta", eta, "constant step size");
  cmd_run->add_option("--epochs", epochs, "number of epochs");
  cmd_run->add_option("--seeds", seeds, "number of repetitions");
  cmd_run->add_option("--theta0", theta0_text, "zero | gaussian[:std] | file:<path>");
  cmd_run->add_flag("--record-iterates", record_iterates, "also write iterates.csv for the first run");
  cmd_run->add_flag("--allow-large-eta", allow_large_eta, "permit eta above 1/L");

  CLI::App* cmd_sweep = app.add_subcommand("sweep", "noise sweep over phase-retrieval instances");
  ProblemCli sweep_problem;
  sweep_problem.attach(cmd_sweep);
  cmd_sweep->add_option("--scheme", scheme_names, "schemes to compare (default: all three)");
  cmd_sweep->add_option("--sigma", sigma_text, "fixed permutation for incremental runs");
  cmd_sweep->add_option("--eta", eta, "constant step size");
  cmd_sweep->add_option("--epochs", epochs, "number of epochs");
  cmd_sweep->add_option("--seeds", seeds, "repetitions per noise level");
  cmd_sweep->add_option("--theta0", theta0_text, "initial point spec");
  cmd_sweep->add_option("--noise-stds", noise_stds, "noise levels to sweep");
  cmd_sweep->add_flag("--allow-large-eta", allow_large_eta, "permit eta above 1/L");

  // bounds --------------------------------------------------------------------
  CLI::App* cmd_bounds = app.add_subcommand("bounds", "compare envelopes against seed-averaged runs");
  ProblemCli bounds_problem;
  bounds_problem.attach(cmd_bounds);
  std::vector<std::string> bound_scheme_names = {"reshuffle", "incremental", "replacement"};
  double bounds_eta = 0.0;
  std::size_t bounds_epochs = 50;
  std::size_t bounds_seeds = 200;
  std::string bounds_theta0 = "gaussian:1";
  cmd_bounds->add_option("--scheme", bound_scheme_names, "schemes to evaluate");
  cmd_bounds->add_option("--sigma", sigma_text, "fixed permutation for the incremental bound");
  cmd_bounds->add_option("--eta", bounds_eta, "step size (default 1/L)");
  cmd_bounds->add_option("--epochs", bounds_epochs, "number of epochs");
  cmd_bounds->add_option("--seeds", bounds_seeds, "seed count for expectation bounds");
  cmd_bounds->add_option("--theta0", bounds_theta0, "initial point spec (resolved once)");

  // profile ---------------------------------------------------------------------
  CLI::App* cmd_profile = app.add_subcommand("profile", "emit the incoherence profile as JSON");
  ProblemCli profile_problem;
  profile_problem.attach(cmd_profile);
  cmd_profile->add_option("--sigma", sigma_text, "also report the fixed-permutation error weight");

  // permsearch --------------------------------------------------------------------
  CLI::App* cmd_perm = app.add_subcommand("permsearch", "minimize mean batch incoherence over data orders");
  ProblemCli perm_problem;
  perm_problem.attach(cmd_perm);
  std::size_t batches = 1;
  std::size_t budget = 2000;
  cmd_perm->add_option("--m", batches, "number of batches (must divide n)")->required();
  cmd_perm->add_option("--budget", budget, "annealing proposals when n > 8");

  // batchbound ----------------------------------------------------------------------
  CLI::App* cmd_batch = app.add_subcommand("batchbound", "per-batch incoherence vs its upper bound");
  ProblemCli batch_problem;
  batch_problem.attach(cmd_batch);
  std::size_t bb_batches = 1;
  cmd_batch->add_option("--m", bb_batches, "number of batches (must divide n)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*cmd_run || *cmd_sweep) {
      CLI::App* cmd = *cmd_run ? cmd_run : cmd_sweep;
      ProblemCli& problem_cli = *cmd_run ? run_problem : sweep_problem;

      ExperimentConfig config;
      if (!config_path.empty()) config = experiment_config_from_json(json::parse(read_text_file(config_path)));

      if (problem_cli.any()) config.problem = problem_cli.spec(base_seed);
      if (cmd->count("--scheme") || config_path.empty()) {
        std::vector<std::string> names = scheme_names;
        if (names.empty()) names = *cmd_sweep ? std::vector<std::string>{"reshuffle", "incremental", "replacement"}
                                              : std::vector<std::string>{"reshuffle"};
        config.schemes = schemes_from_names(names, parse_sigma(sigma_text));
      }
      if (cmd->count("--eta")) config.eta = eta;
      if (cmd->count("--epochs")) config.epochs = epochs;
      if (cmd->count("--seeds")) config.seeds = seeds;
      if (cmd->count("--theta0"))
        config.theta0 = theta0_from_string(theta0_text);
      else if (*cmd_sweep && config_path.empty())
        config.theta0 = theta0_from_string("spectral");  // warm start for the sweep default
      if (cmd->count("--allow-large-eta")) config.allow_eta_above_recommended = allow_large_eta;
      if (*cmd_run && cmd->count("--record-iterates")) config.record_iterates = record_iterates;
      if (app.count("--seed")) config.base_seed = base_seed;
      if (app.count("--threads")) config.threads = threads;
      if (*cmd_sweep) {
        if (cmd->count("--noise-stds")) config.sweep = SweepSpec{"noise_std", noise_stds};
        if (!config.sweep) config.sweep = SweepSpec{"noise_std", {0.0, 1.0, 2.0, 3.0}};
      }
      config.out_dir = resolve_out_dir(out_flag, config.out_dir);
      require(!config.out_dir.empty(), "no output directory (use --out or SGDLAB_OUT)");

      run_experiment(config);
      std::cout << "wrote " << config.out_dir << "/results.csv\n";
      return 0;
    }

    if (*cmd_bounds) {
      const ProblemFactory factory(bounds_problem.spec(base_seed));
      const auto problem = factory.instance(0, std::nullopt);

      BoundSuiteConfig suite;
      suite.eta = bounds_eta;
      suite.epochs = bounds_epochs;
      suite.seeds = bounds_seeds;
      suite.base_seed = base_seed;
      const Vector theta0 =
          resolve_theta0(theta0_from_string(bounds_theta0), *problem, base_seed);

      std::vector<BoundReport> reports;
      for (const auto& name : bound_scheme_names) {
        SchemeSpec scheme;
        scheme.kind = scheme_from_name(name);
        if (scheme.kind == SamplingScheme::Incremental) scheme.sigma = parse_sigma(sigma_text);
        reports.push_back(evaluate_scheme_bound(*problem, scheme, suite, theta0));
      }

      json out = json::array();
      for (const auto& report : reports) out.push_back(bound_report_to_json(report));
      const std::string dir = resolve_out_dir(out_flag, "");
      emit(dir, "bound_report.json", json{{"reports", out}}.dump(2) + "\n");
      if (!dir.empty()) write_text_file(dir + "/bound_report.csv", bound_report_csv(reports));
      return 0;
    }

    if (*cmd_profile) {
      const ProblemFactory factory(profile_problem.spec(base_seed));
      const auto problem = factory.instance(0, std::nullopt);
      std::optional<std::vector<std::size_t>> sigma;
      if (!sigma_text.empty()) sigma = parse_sigma(sigma_text);
      const IncoherenceProfile profile =
          incoherence_profile(*problem, sigma ? &*sigma : nullptr, true);
      json j = profile_to_json(profile);
      j["approximate_solution_set"] = problem->total_solution_set.approximate;
      emit(resolve_out_dir(out_flag, ""), "profile.json", j.dump(2) + "\n");
      return 0;
    }

    if (*cmd_perm) {
      const ProblemFactory factory(perm_problem.spec(base_seed));
      const auto problem = factory.instance(0, std::nullopt);
      const BatchPartition partition = contiguous_partition(problem->size(), batches);
      const PermutationSearchResult result =
          permutation_search(*problem, partition, budget, base_seed, true);
      json j{{"sigma_star", result.sigma},
             {"loss", result.loss},
             {"method", result.method == PermutationSearchResult::Method::Exhaustive ? "exhaustive"
                                                                                     : "anneal"},
             {"per_batch_incoherence", result.batch_incoherences},
             {"m", batches}};
      emit(resolve_out_dir(out_flag, ""), "permsearch.json", j.dump(2) + "\n");
      return 0;
    }

    if (*cmd_batch) {
      const ProblemFactory factory(batch_problem.spec(base_seed));
      const auto problem = factory.instance(0, std::nullopt);
      const BatchPartition partition = contiguous_partition(problem->size(), bb_batches);
      const std::vector<double> epsilons = minimizer_incoherences(*problem, true);
      std::string csv = "batch_index,batch_size,actual_incoherence,upper_bound,holds\n";
      for (std::size_t b = 0; b < partition.m; ++b) {
        const double actual =
            batch_incoherence(*problem, partition.assignment[b], partition.m, nullptr, std::nullopt, true);
        const double bound = batch_incoherence_upper_bound(epsilons, partition.assignment[b],
                                                           partition.m, partition.n);
        csv += std::to_string(b) + "," + std::to_string(partition.n / partition.m) + "," +
               format_double(actual) + "," + format_double(bound) + "," +
               (actual <= bound + kIdentitySlack ? "1" : "0") + "\n";
      }
      emit(resolve_out_dir(out_flag, ""), "batchbound.csv", csv);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

#pragma once

#include <atomic>
#include <exception>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "sgdlab/batching.hpp"
#include "sgdlab/bounds.hpp"
#include "sgdlab/serialize.hpp"

namespace sgdlab {


// --- Initial point -------------------------------------------------------------

struct Theta0Spec {
  enum class Kind { Zero, Gaussian, File, Spectral };
  Kind kind = Kind::Gaussian;
  double stddev = 1.0;
  std::string path;
};

inline Theta0Spec theta0_from_string(const std::string& text) {
  Theta0Spec spec;
  if (text == "zero") {
    spec.kind = Theta0Spec::Kind::Zero;
  } else if (text == "spectral") {
    spec.kind = Theta0Spec::Kind::Spectral;
  } else if (text.rfind("gaussian", 0) == 0) {
    spec.kind = Theta0Spec::Kind::Gaussian;
    if (text.size() > 9 && text[8] == ':') spec.stddev = std::stod(text.substr(9));
  } else if (text.rfind("file:", 0) == 0) {
    spec.kind = Theta0Spec::Kind::File;
    spec.path = text.substr(5);
  } else {
    throw std::invalid_argument("theta0: expected zero | gaussian[:std] | file:<path> | spectral");
  }
  return spec;
}

inline std::string theta0_to_string(const Theta0Spec& spec) {
  switch (spec.kind) {
    case Theta0Spec::Kind::Zero: return "zero";
    case Theta0Spec::Kind::Gaussian: return "gaussian:" + format_double(spec.stddev);
    case Theta0Spec::Kind::File: return "file:" + spec.path;
    case Theta0Spec::Kind::Spectral: return "spectral";
  }
  return "?";
}

// Warm start for phase retrieval: the leading direction of the
// observation-weighted second-moment matrix (1/n) sum y_i^2 a_i a_i', scaled
// to the energy estimate sqrt(d * mean y^2). Random starts at low
// oversampling often land outside the attraction region of the signal pair;
// this estimator lands inside it for most instances.
inline Vector spectral_initialization(const FiniteSumProblem& problem, std::uint64_t seed) {
  for (const auto& s : problem.samples)
    require(s.kind == SampleLossKind::PhaseRetrieval,
            "spectral theta0: only defined for phase-retrieval problems");
  const std::size_t d = problem.dimension;
  const double n = static_cast<double>(problem.size());

  double mean_sq = 0.0;
  for (const auto& s : problem.samples) mean_sq += s.observation * s.observation / n;
  if (mean_sq == 0.0) return Vector(d, 0.0);  // all observations zero

  Xoshiro256 rng(seed, kTheta0Stream);
  Vector direction(d);
  for (double& v : direction) v = rng.next_gaussian();
  double scale = norm(direction);
  for (double& v : direction) v /= scale;

  for (int iteration = 0; iteration < 150; ++iteration) {
    Vector next(d, 0.0);
    for (const auto& s : problem.samples) {
      const double weight = s.observation * s.observation / n;
      axpy(weight * dot(s.measurement, direction), s.measurement, next);
    }
    const double next_norm = norm(next);
    if (next_norm == 0.0) break;
    for (std::size_t j = 0; j < d; ++j) direction[j] = next[j] / next_norm;
  }

  const double energy = std::sqrt(static_cast<double>(d) * mean_sq);
  for (double& v : direction) v *= energy;
  return direction;
}

inline Vector resolve_theta0(const Theta0Spec& spec, const FiniteSumProblem& problem,
                             std::uint64_t seed) {
  switch (spec.kind) {
    case Theta0Spec::Kind::Zero: return Vector(problem.dimension, 0.0);
    case Theta0Spec::Kind::Gaussian: {
      Xoshiro256 rng(seed, kTheta0Stream);
      Vector theta(problem.dimension);
      for (double& v : theta) v = spec.stddev * rng.next_gaussian();
      return theta;
    }
    case Theta0Spec::Kind::File: {
      const json j = json::parse(read_text_file(spec.path));
      Vector theta = j.get<Vector>();
      require(theta.size() == problem.dimension, "theta0 file: dimension mismatch");
      return theta;
    }
    case Theta0Spec::Kind::Spectral: return spectral_initialization(problem, seed);
  }
  throw std::logic_error("theta0: unreachable");
}

// --- Problem selection and generators ----------------------------------------------

struct QuadraticGenSpec {
  std::size_t dimension = 2;
  std::size_t samples = 4;
  std::uint64_t seed = 1;
  bool coherent = true;       // shared minimizer across samples
  double center_spread = 1.0; // incoherent instances scatter centers at this scale
  double eig_min = 0.2;
  double eig_max = 1.0;
};

// Random rotations of random diagonal spectra; centers shared (coherent) or
// scattered (incoherent).
inline FiniteSumProblem random_quadratic_problem(const QuadraticGenSpec& gen) {
  require(gen.dimension >= 1 && gen.samples >= 1, "random_quadratic_problem: bad shape");
  require(gen.eig_min > 0.0 && gen.eig_min <= gen.eig_max, "random_quadratic_problem: bad eigenvalue range");

  Xoshiro256 rng(gen.seed);
  Vector shared_center(gen.dimension);
  for (double& v : shared_center) v = rng.next_gaussian();

  std::vector<Vector> centers(gen.samples);
  std::vector<Matrix> curvatures(gen.samples);
  for (std::size_t i = 0; i < gen.samples; ++i) {
    if (gen.coherent) {
      centers[i] = shared_center;
    } else {
      centers[i].resize(gen.dimension);
      for (double& v : centers[i]) v = gen.center_spread * rng.next_gaussian();
    }

    Matrix a(gen.dimension, gen.dimension, 0.0);
    for (std::size_t j = 0; j < gen.dimension; ++j)
      a(j, j) = gen.eig_min + (gen.eig_max - gen.eig_min) * rng.next_double();
    for (std::size_t p = 0; p < gen.dimension; ++p) {
      for (std::size_t q = p + 1; q < gen.dimension; ++q) {
        const double angle = 6.283185307179586476925286766559 * rng.next_double();
        const double c = std::cos(angle);
        const double s = std::sin(angle);
        for (std::size_t k = 0; k < gen.dimension; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < gen.dimension; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
    // Re-symmetrize rounding drift so construction-time checks stay exact.
    for (std::size_t p = 0; p < gen.dimension; ++p)
      for (std::size_t q = p + 1; q < gen.dimension; ++q) {
        const double v = 0.5 * (a(p, q) + a(q, p));
        a(p, q) = v;
        a(q, p) = v;
      }
    curvatures[i] = a;
  }
  return quadratic_problem(centers, curvatures);
}

struct ProblemSpec {
  enum class Kind { Inline, Quadratic, PhaseRetrieval };
  Kind kind = Kind::Quadratic;
  json inline_problem;  // Kind::Inline
  QuadraticGenSpec quadratic;
  struct {
    std::size_t dimension = 32;
    std::size_t samples = 128;
    double noise_std = 0.0;
    std::uint64_t seed = 1;
  } phase_retrieval;

  // Phase-retrieval experiments redraw the instance per repetition; fixed
  // problems are shared by every run.
  bool per_seed_instances() const { return kind == Kind::PhaseRetrieval; }
};

inline json problem_spec_to_json(const ProblemSpec& spec) {
  switch (spec.kind) {
    case ProblemSpec::Kind::Inline:
      return json{{"kind", "inline"}, {"problem", spec.inline_problem}};
    case ProblemSpec::Kind::Quadratic:
      return json{{"kind", "quadratic"},
                  {"dimension", spec.quadratic.dimension},
                  {"samples", spec.quadratic.samples},
                  {"seed", spec.quadratic.seed},
                  {"coherent", spec.quadratic.coherent},
                  {"center_spread", spec.quadratic.center_spread},
                  {"eig_min", spec.quadratic.eig_min},
                  {"eig_max", spec.quadratic.eig_max}};
    case ProblemSpec::Kind::PhaseRetrieval:
      return json{{"kind", "phase_retrieval"},
                  {"dimension", spec.phase_retrieval.dimension},
                  {"samples", spec.phase_retrieval.samples},
                  {"noise_std", spec.phase_retrieval.noise_std},
                  {"seed", spec.phase_retrieval.seed}};
  }
  throw std::logic_error("problem spec: unreachable");
}

inline ProblemSpec problem_spec_from_json(const json& j) {
  ProblemSpec spec;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "inline") {
    spec.kind = ProblemSpec::Kind::Inline;
    spec.inline_problem = j.at("problem");
  } else if (kind == "quadratic") {
    spec.kind = ProblemSpec::Kind::Quadratic;
    spec.quadratic.dimension = j.at("dimension").get<std::size_t>();
    spec.quadratic.samples = j.at("samples").get<std::size_t>();
    spec.quadratic.seed = j.at("seed").get<std::uint64_t>();
    spec.quadratic.coherent = j.value("coherent", true);
    spec.quadratic.center_spread = j.value("center_spread", 1.0);
    spec.quadratic.eig_min = j.value("eig_min", 0.2);
    spec.quadratic.eig_max = j.value("eig_max", 1.0);
  } else if (kind == "phase_retrieval") {
    spec.kind = ProblemSpec::Kind::PhaseRetrieval;
    spec.phase_retrieval.dimension = j.at("dimension").get<std::size_t>();
    spec.phase_retrieval.samples = j.at("samples").get<std::size_t>();
    spec.phase_retrieval.noise_std = j.value("noise_std", 0.0);
    spec.phase_retrieval.seed = j.at("seed").get<std::uint64_t>();
  } else {
    throw std::invalid_argument("problem spec: unknown kind '" + kind + "'");
  }
  return spec;
}

class ProblemFactory {
 public:
  explicit ProblemFactory(const ProblemSpec& spec) : spec_(spec) {
    if (spec_.kind == ProblemSpec::Kind::Inline)
      fixed_ = std::make_shared<FiniteSumProblem>(problem_from_json(spec_.inline_problem));
    else if (spec_.kind == ProblemSpec::Kind::Quadratic)
      fixed_ = std::make_shared<FiniteSumProblem>(random_quadratic_problem(spec_.quadratic));
  }

  bool per_seed_instances() const { return spec_.per_seed_instances(); }

  std::shared_ptr<const FiniteSumProblem> instance(std::size_t seed_index,
                                                   std::optional<double> noise_override) const {
    if (fixed_) {
      require(!noise_override, "noise sweep requires a phase-retrieval problem");
      return fixed_;
    }
    const auto& pr = spec_.phase_retrieval;
    return std::make_shared<FiniteSumProblem>(
        phase_retrieval_problem(pr.dimension, pr.samples, noise_override.value_or(pr.noise_std),
                                derive_seed(pr.seed, seed_index)));
  }

 private:
  ProblemSpec spec_;
  std::shared_ptr<const FiniteSumProblem> fixed_;
};

// --- Experiment configuration -------------------------------------------------------

struct SweepSpec {
  std::string parameter = "noise_std";
  std::vector<double> values;
};

struct ExperimentConfig {
  ProblemSpec problem;
  std::vector<SchemeSpec> schemes = {SchemeSpec::reshuffle()};
  double eta = 0.1;
  bool allow_eta_above_recommended = false;
  std::size_t epochs = 50;
  std::size_t seeds = 1;
  std::uint64_t base_seed = 0;
  Theta0Spec theta0;
  std::string out_dir;
  std::optional<SweepSpec> sweep;
  std::size_t threads = 1;
  bool record_iterates = false;
};

inline json experiment_config_to_json(const ExperimentConfig& config) {
  json schemes = json::array();
  for (const auto& s : config.schemes) schemes.push_back(scheme_spec_to_json(s));
  json j{{"problem", problem_spec_to_json(config.problem)},
         {"schemes", schemes},
         {"eta", config.eta},
         {"allow_eta_above_recommended", config.allow_eta_above_recommended},
         {"epochs", config.epochs},
         {"seeds", config.seeds},
         {"seed", config.base_seed},
         {"theta0", theta0_to_string(config.theta0)},
         {"out", config.out_dir},
         {"threads", config.threads},
         {"record_iterates", config.record_iterates},
         {"rng_algorithm", Xoshiro256::algorithm_id}};
  if (config.sweep)
    j["sweep"] = json{{"parameter", config.sweep->parameter}, {"values", config.sweep->values}};
  else
    j["sweep"] = nullptr;
  return j;
}

inline ExperimentConfig experiment_config_from_json(const json& j) {
  ExperimentConfig config;
  config.problem = problem_spec_from_json(j.at("problem"));
  config.schemes.clear();
  for (const auto& js : j.at("schemes")) config.schemes.push_back(scheme_spec_from_json(js));
  config.eta = j.at("eta").get<double>();
  config.allow_eta_above_recommended = j.value("allow_eta_above_recommended", false);
  config.epochs = j.at("epochs").get<std::size_t>();
  config.seeds = j.at("seeds").get<std::size_t>();
  config.base_seed = j.at("seed").get<std::uint64_t>();
  config.theta0 = theta0_from_string(j.value("theta0", std::string("gaussian:1")));
  config.out_dir = j.value("out", std::string());
  config.threads = j.value("threads", std::size_t{1});
  config.record_iterates = j.value("record_iterates", false);
  if (j.contains("sweep") && !j.at("sweep").is_null()) {
    SweepSpec sweep;
    sweep.parameter = j.at("sweep").at("parameter").get<std::string>();
    sweep.values = j.at("sweep").at("values").get<std::vector<double>>();
    config.sweep = sweep;
  }
  return config;
}

// --- Runner ---------------------------------------------------------------------------

inline void parallel_for(std::size_t count, std::size_t threads,
                         const std::function<void(std::size_t)>& body) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  const std::size_t workers = std::min(threads, count);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

struct LevelSchemeSummary {
  std::string scheme;
  SchemeStats stats;
};

struct LevelSummary {
  std::optional<double> noise_std;
  std::vector<LevelSchemeSummary> schemes;
};

struct ExperimentResult {
  std::vector<LevelSummary> levels;
  std::string out_dir;
};

namespace detail {

// Theory envelope for one realized run; empty when no finite envelope applies
// at this step size.
inline std::vector<double> envelope_for_run(const FiniteSumProblem& problem,
                                            const IncoherenceProfile& profile,
                                            const SchemeSpec& scheme, double eta,
                                            std::size_t epochs, double dist0_sq) {
  if (std::abs(eta * problem.smoothness - 1.0) > 1e-12) return {};
  switch (scheme.kind) {
    case SamplingScheme::RandomReshuffle:
      if (profile.alpha >= 1.0) return {};
      return incoherent_envelope(profile.alpha, profile.epsilon_max, profile.m_bar,
                                 problem.smoothness, dist0_sq, epochs);
    case SamplingScheme::Incremental: {
      if (profile.alpha >= 1.0) return {};
      const double weight = epoch_error_weight(problem.mu, problem.smoothness, scheme.sigma);
      return incoherent_envelope(profile.alpha, profile.epsilon_max, weight, problem.smoothness,
                                 dist0_sq, epochs);
    }
    case SamplingScheme::WithReplacement:
      if (profile.mu_bar <= 0.0) return {};
      return replacement_error_envelope(profile.mu_bar, problem.smoothness, problem.size(),
                                        profile.epsilon_max, dist0_sq, epochs);
  }
  return {};
}

struct RunRecord {
  std::vector<double> dist_sq;     // epoch series
  std::vector<double> total_loss;  // epoch series
  std::vector<double> envelope;    // empty when not applicable
};

inline BoundReport assemble_bound_report(std::string name, SamplingScheme scheme, bool expectation,
                                         std::size_t epochs,
                                         const std::vector<const RunRecord*>& runs) {
  BoundReport report;
  report.name = std::move(name);
  report.scheme = scheme;
  report.is_expectation_bound = expectation;
  report.seeds = runs.size();

  bool have_envelopes = true;
  for (const RunRecord* r : runs)
    if (r->envelope.empty()) have_envelopes = false;

  std::vector<std::vector<double>> dist_series;
  dist_series.reserve(runs.size());
  for (const RunRecord* r : runs) dist_series.push_back(r->dist_sq);

  if (!have_envelopes) {
    report.degenerate = true;
    report.envelope.assign(epochs + 1, std::numeric_limits<double>::quiet_NaN());
    report.standard_error.assign(epochs + 1, 0.0);
    report.empirical = max_series(dist_series);
    report.margin_min = std::numeric_limits<double>::quiet_NaN();
    return report;
  }

  std::vector<std::vector<double>> envelope_series;
  envelope_series.reserve(runs.size());
  for (const RunRecord* r : runs) envelope_series.push_back(r->envelope);

  if (expectation) {
    report.empirical = mean_series(dist_series);
    report.standard_error = se_series(dist_series, report.empirical);
    report.envelope = mean_series(envelope_series);
    finalize_report(report);
  } else {
    report.empirical = max_series(dist_series);
    report.envelope = max_series(envelope_series);
    report.standard_error.assign(epochs + 1, 0.0);
    for (std::size_t s = 0; s < runs.size(); ++s)
      for (std::size_t b = 0; b <= epochs; ++b) {
        const double margin = envelope_series[s][b] - dist_series[s][b];
        report.margin_min = std::min(report.margin_min, margin);
        if (margin < -kEnvelopeSlack && (report.violations.empty() || report.violations.back() != b))
          report.violations.push_back(b);
      }
  }
  return report;
}

}  // namespace detail

// Runs every configured scheme over `seeds` repetitions (per sweep level when
// sweeping) and writes results.csv, trajectory.csv, profile.json, bounds.json,
// summary.json and the resolved config.json into the output directory.
// Repetition k shares its instance, initial point and sampler seed across
// schemes and sweep levels, so comparisons are paired.
inline ExperimentResult run_experiment(const ExperimentConfig& config) {
  require(!config.schemes.empty(), "experiment: need at least one scheme");
  require(config.seeds >= 1, "experiment: seeds must be positive");
  require(config.epochs >= 1, "experiment: epochs must be positive");
  require(!config.out_dir.empty(), "experiment: no output directory given");
  if (config.sweep) {
    require(config.sweep->parameter == "noise_std",
            "experiment: only a noise_std sweep is supported");
    require(!config.sweep->values.empty(), "experiment: empty sweep value list");
    require(config.problem.kind == ProblemSpec::Kind::PhaseRetrieval,
            "experiment: noise sweep requires a phase-retrieval problem");
  }

  std::filesystem::create_directories(config.out_dir);
  const ProblemFactory factory(config.problem);

  std::vector<std::optional<double>> levels;
  if (config.sweep)
    for (double v : config.sweep->values) levels.emplace_back(v);
  else
    levels.emplace_back(std::nullopt);

  const std::size_t n_levels = levels.size();
  const std::size_t n_schemes = config.schemes.size();
  const std::size_t n_tasks = n_levels * config.seeds;

  // records[level][scheme][seed]
  std::vector<std::vector<std::vector<detail::RunRecord>>> records(
      n_levels, std::vector<std::vector<detail::RunRecord>>(
                    n_schemes, std::vector<detail::RunRecord>(config.seeds)));

  parallel_for(n_tasks, config.threads, [&](std::size_t task) {
    const std::size_t level = task / config.seeds;
    const std::size_t seed_index = task % config.seeds;
    const auto problem = factory.instance(seed_index, levels[level]);
    const std::uint64_t run_seed = derive_seed(config.base_seed, seed_index);
    const Vector theta0 = resolve_theta0(config.theta0, *problem, run_seed);
    const IncoherenceProfile profile = incoherence_profile(*problem, nullptr, true);
    const double dist0_sq = squared_dist_to_set(problem->total_solution_set, theta0);

    RunConfig run_config;
    run_config.eta = config.eta;
    run_config.epochs = config.epochs;
    run_config.seed = run_seed;
    run_config.allow_eta_above_recommended = config.allow_eta_above_recommended;

    for (std::size_t s = 0; s < n_schemes; ++s) {
      SchemeSpec scheme = config.schemes[s];
      if (scheme.kind == SamplingScheme::Incremental && scheme.sigma.empty()) {
        scheme.sigma.resize(problem->size());
        std::iota(scheme.sigma.begin(), scheme.sigma.end(), std::size_t{0});
        Xoshiro256 rng(run_seed, kSigmaStream);
        rng.shuffle(scheme.sigma);
      }
      const Trajectory trajectory = run_sgd(*problem, scheme, run_config, theta0);
      detail::RunRecord& record = records[level][s][seed_index];
      record.dist_sq = trajectory.epoch_dist_sq;
      record.total_loss = trajectory.epoch_total_loss;
      record.envelope =
          detail::envelope_for_run(*problem, profile, scheme, config.eta, config.epochs, dist0_sq);
    }
  });

  // results.csv, sorted by (level, scheme, seed, epoch).
  std::string csv;
  csv += "scheme,seed,epoch,dist_sq,total_loss,envelope_value";
  if (config.sweep) csv += ",noise_std";
  csv += "\n";
  for (std::size_t level = 0; level < n_levels; ++level)
    for (std::size_t s = 0; s < n_schemes; ++s)
      for (std::size_t k = 0; k < config.seeds; ++k) {
        const detail::RunRecord& record = records[level][s][k];
        for (std::size_t b = 0; b <= config.epochs; ++b) {
          csv += scheme_name(config.schemes[s].kind);
          csv += ',';
          csv += std::to_string(k);
          csv += ',';
          csv += std::to_string(b);
          csv += ',';
          csv += format_double(record.dist_sq[b]);
          csv += ',';
          csv += format_double(record.total_loss[b]);
          csv += ',';
          csv += record.envelope.empty() ? "nan" : format_double(record.envelope[b]);
          if (config.sweep) {
            csv += ',';
            csv += format_double(*levels[level]);
          }
          csv += '\n';
        }
      }
  const std::string results_path = config.out_dir + "/results.csv";
  write_text_file(results_path, csv);

  // trajectory.csv for the first configured run.
  {
    const detail::RunRecord& first = records[0][0][0];
    std::string traj = "epoch,dist_sq,total_loss\n";
    for (std::size_t b = 0; b <= config.epochs; ++b)
      traj += std::to_string(b) + "," + format_double(first.dist_sq[b]) + "," +
              format_double(first.total_loss[b]) + "\n";
    write_text_file(config.out_dir + "/trajectory.csv", traj);
  }

  // Optional per-iteration record of the first run.
  if (config.record_iterates) {
    const auto problem = factory.instance(0, levels[0]);
    const std::uint64_t run_seed = derive_seed(config.base_seed, 0);
    const Vector theta0 = resolve_theta0(config.theta0, *problem, run_seed);
    SchemeSpec scheme = config.schemes[0];
    if (scheme.kind == SamplingScheme::Incremental && scheme.sigma.empty()) {
      scheme.sigma.resize(problem->size());
      std::iota(scheme.sigma.begin(), scheme.sigma.end(), std::size_t{0});
      Xoshiro256 rng(run_seed, kSigmaStream);
      rng.shuffle(scheme.sigma);
    }
    RunConfig run_config;
    run_config.eta = config.eta;
    run_config.epochs = config.epochs;
    run_config.seed = run_seed;
    run_config.allow_eta_above_recommended = config.allow_eta_above_recommended;
    run_config.record_every_iteration = true;
    const Trajectory trajectory = run_sgd(*problem, scheme, run_config, theta0);
    std::string rows = "k,xi_k,dist_sq\n";
    for (std::size_t k = 0; k < trajectory.iterates.size(); ++k) {
      rows += std::to_string(k) + ",";
      rows += k < trajectory.index_log.size() ? std::to_string(trajectory.index_log[k]) : "-1";
      rows += "," +
              format_double(squared_dist_to_set(problem->total_solution_set, trajectory.iterates[k])) +
              "\n";
    }
    write_text_file(config.out_dir + "/iterates.csv", rows);
  }

  // profile.json for the first instance.
  {
    const auto problem = factory.instance(0, levels[0]);
    json j = profile_to_json(incoherence_profile(*problem, nullptr, true));
    j["dimension"] = problem->dimension;
    j["samples"] = problem->size();
    j["smoothness"] = problem->smoothness;
    j["approximate_solution_set"] = problem->total_solution_set.approximate;
    j["rng_algorithm"] = Xoshiro256::algorithm_id;
    write_text_file(config.out_dir + "/profile.json", j.dump(2) + "\n");
  }

  // bounds.json: one report per (level, scheme) assembled from the recorded runs.
  {
    bool fixed_coherent = false;
    if (!factory.per_seed_instances()) {
      const auto problem0 = factory.instance(0, levels[0]);
      fixed_coherent = incoherence_profile(*problem0, nullptr, true).epsilon_max == 0.0;
    }
    json reports = json::array();
    for (std::size_t level = 0; level < n_levels; ++level)
      for (std::size_t s = 0; s < n_schemes; ++s) {
        std::vector<const detail::RunRecord*> runs;
        runs.reserve(config.seeds);
        for (const auto& r : records[level][s]) runs.push_back(&r);
        const SamplingScheme kind = config.schemes[s].kind;
        // Coherent fixed problems keep the per-run reshuffle guarantee;
        // incremental orders are always deterministic per run.
        const bool expectation = kind == SamplingScheme::WithReplacement ||
                                 (kind == SamplingScheme::RandomReshuffle && !fixed_coherent);
        std::string name = std::string(scheme_name(kind)) + "_error_bound";
        BoundReport report =
            detail::assemble_bound_report(std::move(name), kind, expectation, config.epochs, runs);
        json jr = bound_report_to_json(report);
        if (levels[level]) jr["noise_std"] = *levels[level];
        reports.push_back(std::move(jr));
      }
    write_text_file(config.out_dir + "/bounds.json", json{{"reports", reports}}.dump(2) + "\n");
  }

  // summary.json and the returned summary.
  ExperimentResult result;
  result.out_dir = config.out_dir;
  json summary_levels = json::array();
  for (std::size_t level = 0; level < n_levels; ++level) {
    LevelSummary level_summary;
    level_summary.noise_std = levels[level];
    json schemes_json = json::object();
    for (std::size_t s = 0; s < n_schemes; ++s) {
      std::vector<double> finals;
      finals.reserve(config.seeds);
      for (const auto& record : records[level][s]) finals.push_back(record.dist_sq.back());
      const SchemeStats stats = detail::stats_from_finals(finals);
      level_summary.schemes.push_back({scheme_name(config.schemes[s].kind), stats});
      schemes_json[scheme_name(config.schemes[s].kind)] =
          json{{"mean_final_dist_sq", stats.mean_final_dist_sq},
               {"standard_error", stats.standard_error},
               {"min_final_dist_sq", stats.min_final_dist_sq},
               {"max_final_dist_sq", stats.max_final_dist_sq},
               {"count", config.seeds}};
    }
    json level_json{{"schemes", schemes_json}};
    if (levels[level])
      level_json["noise_std"] = *levels[level];
    else
      level_json["noise_std"] = nullptr;
    summary_levels.push_back(std::move(level_json));
    result.levels.push_back(std::move(level_summary));
  }
  json summary{{"levels", summary_levels},
               {"eta", config.eta},
               {"epochs", config.epochs},
               {"seeds", config.seeds}};
  write_text_file(config.out_dir + "/summary.json", summary.dump(2) + "\n");

  // Resolved configuration, sufficient to reproduce every file above.
  write_text_file(config.out_dir + "/config.json", experiment_config_to_json(config).dump(2) + "\n");
  return result;
}

// Noise sweep helper: per-level, per-scheme final-error distributions.
inline ExperimentResult sweep_noise(ExperimentConfig config, const std::vector<double>& noise_stds) {
  config.sweep = SweepSpec{"noise_std", noise_stds};
  return run_experiment(config);
}

}  // namespace sgdlab

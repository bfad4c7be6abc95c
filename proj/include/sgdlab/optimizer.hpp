#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sgdlab/problem.hpp"
#include "sgdlab/sampling.hpp"

namespace sgdlab {

// Membership threshold for "the limit point sits in the solution set".
inline constexpr double kConvergenceTolerance = 1e-6;

// Iterate-norm guard; runs past this are misconfigured, fail fast.
inline constexpr double kDivergenceGuard = 1e12;

struct RunConfig {
  double eta = 0.1;
  std::size_t epochs = 1;
  bool record_every_iteration = false;
  std::uint64_t seed = 0;
  // Step sizes above 1/L void the per-step progress guarantee; require an
  // explicit opt-in instead of silently running without it.
  bool allow_eta_above_recommended = false;
};

struct StepProgressViolation {
  std::size_t iteration = 0;
  double excess = 0.0;  // amount by which the per-step progress inequality failed
};

struct Trajectory {
  // All nB+1 iterates when recorded every iteration, epoch boundaries otherwise.
  std::vector<Vector> iterates;
  bool every_iteration = false;
  std::vector<double> epoch_dist_sq;     // squared distance to the total solution set, B+1 entries
  std::vector<double> epoch_total_loss;  // B+1 entries
  std::vector<std::size_t> index_log;    // sample index consumed at each iteration, nB entries
  std::vector<StepProgressViolation> progress_violations;  // filled by monitor_step_progress
  double eta = 0.0;
  std::size_t epochs = 0;

  const Vector& final_iterate() const { return iterates.back(); }
};

inline Trajectory run_sgd(const FiniteSumProblem& problem, const SchemeSpec& scheme,
                          const RunConfig& config, const Vector& theta0) {
  require(theta0.size() == problem.dimension, "run_sgd: theta0 dimension mismatch");
  require(config.eta > 0.0, "run_sgd: eta must be positive");
  require(config.epochs >= 1, "run_sgd: epochs must be positive");
  if (config.eta > (1.0 + 1e-9) / problem.smoothness && !config.allow_eta_above_recommended)
    throw std::invalid_argument(
        "run_sgd: eta exceeds 1/L; progress guarantees no longer apply "
        "(set allow_eta_above_recommended to run anyway)");

  const std::size_t n = problem.size();
  EpochSampler sampler(scheme, n, config.seed);

  Trajectory out;
  out.eta = config.eta;
  out.epochs = config.epochs;
  out.every_iteration = config.record_every_iteration;
  out.index_log.reserve(n * config.epochs);
  out.iterates.reserve(config.record_every_iteration ? n * config.epochs + 1 : config.epochs + 1);
  out.epoch_dist_sq.reserve(config.epochs + 1);
  out.epoch_total_loss.reserve(config.epochs + 1);

  Vector theta = theta0;
  out.iterates.push_back(theta);
  out.epoch_dist_sq.push_back(squared_dist_to_set(problem.total_solution_set, theta));
  out.epoch_total_loss.push_back(total_loss(problem, theta));

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const std::vector<std::size_t> order = sampler.next_epoch();
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t i = order[k];
      const Vector g = sample_gradient(problem, i, theta);
      axpy(-config.eta, g, theta);
      out.index_log.push_back(i);

      const std::size_t iteration = epoch * n + k;
      if (!all_finite(theta))
        throw std::runtime_error("run_sgd: non-finite iterate at iteration " +
                                 std::to_string(iteration) + " on sample " + std::to_string(i));
      if (squared_norm(theta) > kDivergenceGuard * kDivergenceGuard)
        throw std::runtime_error("run_sgd: diverged (|theta| > 1e12) at iteration " +
                                 std::to_string(iteration) + " on sample " + std::to_string(i));
      if (config.record_every_iteration) out.iterates.push_back(theta);
    }
    if (!config.record_every_iteration) out.iterates.push_back(theta);
    out.epoch_dist_sq.push_back(squared_dist_to_set(problem.total_solution_set, theta));
    out.epoch_total_loss.push_back(total_loss(problem, theta));
  }
  return out;
}

// Re-checks the per-step progress inequality
//   |theta_{k+1} - w|^2 <= |theta_k - w|^2 - eta (l_i(theta_{k+1}) - l_i*)
// against every declared minimizer w of the sample used at step k. Requires a
// fully recorded trajectory and exact per-sample solution sets.
inline std::vector<StepProgressViolation> monitor_step_progress(const FiniteSumProblem& problem,
                                                                const Trajectory& trajectory) {
  require(trajectory.every_iteration, "monitor_step_progress: needs every iterate recorded");
  for (const auto& set : problem.per_sample_solution_sets)
    if (set.approximate)
      throw std::invalid_argument(
          "monitor_step_progress: per-sample solution sets are approximate; the inequality is "
          "not checkable against declared points");

  std::vector<StepProgressViolation> violations;
  for (std::size_t k = 0; k < trajectory.index_log.size(); ++k) {
    const std::size_t i = trajectory.index_log[k];
    const Vector& theta_k = trajectory.iterates[k];
    const Vector& theta_next = trajectory.iterates[k + 1];
    const double loss_gap = sample_loss(problem, i, theta_next) - problem.sample_min[i];
    const double slack = 1e-9 * (1.0 + squared_norm(theta_k));

    double worst = 0.0;
    for (const Vector& w : problem.per_sample_solution_sets[i].points) {
      const double lhs = squared_distance(theta_next, w);
      const double rhs = squared_distance(theta_k, w) - trajectory.eta * loss_gap;
      worst = std::max(worst, lhs - rhs);
    }
    if (worst > slack) violations.push_back({k, worst});
  }
  return violations;
}

struct ConvergenceProbe {
  double cauchy_radius = 0.0;   // max pairwise distance over the trajectory tail
  Vector limit_point;
  bool limit_in_solution_set = false;
};

inline ConvergenceProbe convergence_probe(const FiniteSumProblem& problem,
                                          const Trajectory& trajectory, double tail_fraction) {
  require(trajectory.every_iteration, "convergence_probe: needs every iterate recorded");
  require(tail_fraction > 0.0 && tail_fraction < 1.0, "convergence_probe: tail_fraction in (0,1)");
  const std::size_t total = trajectory.iterates.size();
  const auto tail = static_cast<std::size_t>(std::ceil(static_cast<double>(total) * tail_fraction));
  require(tail >= 2, "convergence_probe: fewer than 2 tail iterates");

  ConvergenceProbe probe;
  const std::size_t start = total - tail;
  for (std::size_t i = start; i < total; ++i)
    for (std::size_t j = i + 1; j < total; ++j)
      probe.cauchy_radius =
          std::max(probe.cauchy_radius, distance(trajectory.iterates[i], trajectory.iterates[j]));
  probe.limit_point = trajectory.iterates.back();
  probe.limit_in_solution_set =
      dist_to_set(problem.total_solution_set, probe.limit_point) < kConvergenceTolerance;
  return probe;
}

}  // namespace sgdlab

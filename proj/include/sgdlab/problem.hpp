#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "sgdlab/linalg.hpp"
#include "sgdlab/rng.hpp"

namespace sgdlab {

// Absolute tolerance for "this point attains the minimum" checks.
inline constexpr double kMinTolerance = 1e-9;

enum class SampleLossKind { Quadratic, PhaseRetrieval };

// One sample loss.
//   Quadratic:      0.5 (theta - center)' A (theta - center) + offset
//   PhaseRetrieval: 0.5 (observation - |measurement . theta|)^2
struct SampleLossSpec {
  SampleLossKind kind = SampleLossKind::Quadratic;
  Vector center;
  Matrix curvature;
  double offset = 0.0;
  Vector measurement;
  double observation = 0.0;
};

// Finite list of minimizers. Affine or otherwise continuous solution sets are
// not representable and are rejected at construction; `approximate` marks
// declared sets (noisy phase retrieval) that only bracket the true minimizers.
struct SolutionSetDescriptor {
  std::vector<Vector> points;
  bool approximate = false;
};

inline double dist_to_set(const SolutionSetDescriptor& set, const Vector& theta) {
  require(!set.points.empty(), "dist_to_set: empty solution set");
  double best = std::numeric_limits<double>::infinity();
  for (const Vector& p : set.points) best = std::min(best, squared_distance(p, theta));
  return std::sqrt(best);
}

inline double squared_dist_to_set(const SolutionSetDescriptor& set, const Vector& theta) {
  require(!set.points.empty(), "squared_dist_to_set: empty solution set");
  double best = std::numeric_limits<double>::infinity();
  for (const Vector& p : set.points) best = std::min(best, squared_distance(p, theta));
  return best;
}

struct FiniteSumProblem {
  std::vector<SampleLossSpec> samples;
  std::size_t dimension = 0;
  double smoothness = 0.0;          // common smoothness constant L
  std::vector<double> mu;           // weak strong convexity moduli, one per sample
  std::vector<double> sample_min;   // attained minimum of each sample loss
  double total_min = 0.0;           // minimum of the average loss (lower bound when sets are approximate)
  SolutionSetDescriptor total_solution_set;
  std::vector<SolutionSetDescriptor> per_sample_solution_sets;

  std::size_t size() const { return samples.size(); }
};

inline double sample_loss(const FiniteSumProblem& problem, std::size_t i, const Vector& theta) {
  require(i < problem.size(), "sample_loss: index out of range");
  require(theta.size() == problem.dimension, "sample_loss: dimension mismatch");
  const SampleLossSpec& s = problem.samples[i];
  if (s.kind == SampleLossKind::Quadratic) {
    const Vector d = subtract(theta, s.center);
    return 0.5 * dot(d, matvec(s.curvature, d)) + s.offset;
  }
  const double r = s.observation - std::abs(dot(s.measurement, theta));
  return 0.5 * r * r;
}

// Exact gradient for quadratics; for phase retrieval the subgradient with the
// convention sign(0) = 0, so the gradient vanishes on the measurement kernel.
inline Vector sample_gradient(const FiniteSumProblem& problem, std::size_t i, const Vector& theta) {
  require(i < problem.size(), "sample_gradient: index out of range");
  require(theta.size() == problem.dimension, "sample_gradient: dimension mismatch");
  const SampleLossSpec& s = problem.samples[i];
  if (s.kind == SampleLossKind::Quadratic) {
    return matvec(s.curvature, subtract(theta, s.center));
  }
  const double inner = dot(s.measurement, theta);
  const double sign = inner > 0.0 ? 1.0 : (inner < 0.0 ? -1.0 : 0.0);
  const double factor = (std::abs(inner) - s.observation) * sign;
  Vector g(s.measurement.size());
  for (std::size_t j = 0; j < g.size(); ++j) g[j] = factor * s.measurement[j];
  return g;
}

inline double total_loss(const FiniteSumProblem& problem, const Vector& theta) {
  require(theta.size() == problem.dimension, "total_loss: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < problem.size(); ++i) s += sample_loss(problem, i, theta);
  return s / static_cast<double>(problem.size());
}

inline Vector total_gradient(const FiniteSumProblem& problem, const Vector& theta) {
  Vector g(problem.dimension, 0.0);
  for (std::size_t i = 0; i < problem.size(); ++i) axpy(1.0, sample_gradient(problem, i, theta), g);
  for (double& v : g) v /= static_cast<double>(problem.size());
  return g;
}

struct QuadraticOptions {
  // Smoothness override; must dominate the largest curvature eigenvalue.
  std::optional<double> smoothness;
  // Required when the average curvature is singular (the minimizer set of the
  // average would be affine, which is not representable).
  std::optional<SolutionSetDescriptor> total_solution_set;
  // Per-sample loss offsets; zero when empty.
  std::vector<double> offsets;
};

inline FiniteSumProblem quadratic_problem(const std::vector<Vector>& centers,
                                          const std::vector<Matrix>& curvatures,
                                          const QuadraticOptions& options = {}) {
  require(!centers.empty(), "quadratic_problem: need at least one sample");
  require(centers.size() == curvatures.size(), "quadratic_problem: centers/curvatures count mismatch");
  if (!options.offsets.empty())
    require(options.offsets.size() == centers.size(), "quadratic_problem: offsets count mismatch");

  const std::size_t n = centers.size();
  const std::size_t d = centers[0].size();
  require(d >= 1, "quadratic_problem: dimension must be positive");

  FiniteSumProblem problem;
  problem.dimension = d;
  problem.samples.resize(n);
  problem.mu.resize(n);
  problem.sample_min.resize(n);
  problem.per_sample_solution_sets.resize(n);

  double max_eig = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    require(centers[i].size() == d, "quadratic_problem: center dimension mismatch");
    const Matrix& a = curvatures[i];
    require(a.rows == d && a.cols == d, "quadratic_problem: curvature shape mismatch");
    require(is_symmetric(a), "quadratic_problem: curvature matrix not symmetric");

    const Vector eig = symmetric_eigenvalues(a);
    const double lo = eig.front();
    const double hi = eig.back();
    require(lo >= -1e-9 * std::max(1.0, std::abs(hi)), "quadratic_problem: curvature matrix not positive semidefinite");
    require(lo > 1e-12 * std::max(1.0, hi),
            "quadratic_problem: singular sample curvature (per-sample solution set would be affine)");

    problem.samples[i].kind = SampleLossKind::Quadratic;
    problem.samples[i].center = centers[i];
    problem.samples[i].curvature = a;
    problem.samples[i].offset = options.offsets.empty() ? 0.0 : options.offsets[i];
    problem.mu[i] = std::max(0.0, lo);
    problem.sample_min[i] = problem.samples[i].offset;
    problem.per_sample_solution_sets[i].points = {centers[i]};
    max_eig = std::max(max_eig, hi);
  }

  if (options.smoothness) {
    require(*options.smoothness >= max_eig * (1.0 - 1e-12),
            "quadratic_problem: smoothness override below largest curvature eigenvalue");
    problem.smoothness = *options.smoothness;
  } else {
    problem.smoothness = max_eig;
  }
  for (double m : problem.mu)
    require(m <= problem.smoothness * (1.0 + 1e-12), "quadratic_problem: mu exceeds smoothness");

  // Average quadratic: curvature mean(A_i), stationarity mean(A_i) x = mean(A_i c_i).
  Matrix avg(d, d, 0.0);
  Vector rhs(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    avg = add_scaled(avg, problem.samples[i].curvature, 1.0);
    axpy(1.0, matvec(problem.samples[i].curvature, centers[i]), rhs);
  }
  for (double& v : avg.data) v /= static_cast<double>(n);
  for (double& v : rhs) v /= static_cast<double>(n);

  const Vector avg_eig = symmetric_eigenvalues(avg);
  const bool avg_pd = avg_eig.front() > 1e-12 * std::max(1.0, avg_eig.back());

  bool shared_center = true;
  for (std::size_t i = 1; i < n; ++i) shared_center = shared_center && centers[i] == centers[0];

  if (options.total_solution_set) {
    require(!options.total_solution_set->points.empty(), "quadratic_problem: empty explicit total solution set");
    problem.total_solution_set = *options.total_solution_set;
  } else if (shared_center) {
    // The common center minimizes every sample exactly; solving the normal
    // equations here would only reintroduce rounding error.
    problem.total_solution_set.points = {centers[0]};
  } else if (avg_pd) {
    problem.total_solution_set.points = {solve_linear(avg, rhs)};
  } else {
    throw std::invalid_argument(
        "quadratic_problem: singular average curvature and no explicit total solution set");
  }

  problem.total_min = total_loss(problem, problem.total_solution_set.points[0]);
  for (const Vector& p : problem.total_solution_set.points) {
    require(p.size() == d, "quadratic_problem: total solution point dimension mismatch");
    require(std::abs(total_loss(problem, p) - problem.total_min) <= kMinTolerance,
            "quadratic_problem: total solution set points do not attain a common minimum");
    require(norm(total_gradient(problem, p)) <= kMinTolerance,
            "quadratic_problem: total solution set point is not stationary");
  }
  return problem;
}

// Real-valued phase retrieval with sign ambiguity: the declared solution sets
// are {+x0, -x0}. Draw order is part of the format: signal x0, then the
// measurement rows, then the noise vector; a fixed seed therefore shares the
// same geometry across noise levels. Measurement rows are scaled by 1/sqrt(d)
// so step sizes of order 0.1 stay below 1/L.
inline FiniteSumProblem phase_retrieval_problem(std::size_t dimension, std::size_t n_samples,
                                                double noise_std, std::uint64_t seed) {
  require(dimension >= 1, "phase_retrieval_problem: dimension must be positive");
  require(n_samples >= 1, "phase_retrieval_problem: need at least one sample");
  require(noise_std >= 0.0, "phase_retrieval_problem: noise_std must be nonnegative");

  Xoshiro256 rng(seed);
  Vector signal(dimension);
  for (double& v : signal) v = rng.next_gaussian();

  const double row_scale = 1.0 / std::sqrt(static_cast<double>(dimension));
  std::vector<Vector> rows(n_samples, Vector(dimension));
  for (auto& row : rows)
    for (double& v : row) v = rng.next_gaussian() * row_scale;

  Vector noise(n_samples);
  for (double& v : noise) v = rng.next_gaussian();

  FiniteSumProblem problem;
  problem.dimension = dimension;
  problem.samples.resize(n_samples);
  problem.mu.assign(n_samples, 0.0);  // no modulus is known; callers may override
  problem.sample_min.assign(n_samples, 0.0);
  problem.per_sample_solution_sets.resize(n_samples);

  Vector negated(dimension);
  for (std::size_t j = 0; j < dimension; ++j) negated[j] = -signal[j];
  const bool approximate = noise_std > 0.0;
  problem.total_solution_set.points = {signal, negated};
  problem.total_solution_set.approximate = approximate;

  double max_row_sq = 0.0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    SampleLossSpec& s = problem.samples[i];
    s.kind = SampleLossKind::PhaseRetrieval;
    s.measurement = rows[i];
    s.observation = std::max(0.0, std::abs(dot(rows[i], signal)) + noise_std * noise[i]);
    problem.per_sample_solution_sets[i].points = {signal, negated};
    problem.per_sample_solution_sets[i].approximate = approximate;
    max_row_sq = std::max(max_row_sq, squared_norm(rows[i]));
  }
  problem.smoothness = max_row_sq;
  problem.total_min = 0.0;  // exact for zero noise, conservative lower bound otherwise
  return problem;
}

}  // namespace sgdlab

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <vector>

#include "sgdlab/incoherence.hpp"
#include "sgdlab/optimizer.hpp"

namespace sgdlab {

// m disjoint batches of equal size n/m covering 0..n-1. The assignment holds
// positions; a data permutation maps positions to sample indices.
struct BatchPartition {
  std::size_t n = 0;
  std::size_t m = 0;
  std::vector<std::vector<std::size_t>> assignment;
};

inline BatchPartition contiguous_partition(std::size_t n, std::size_t m) {
  require(n >= 1 && m >= 1, "contiguous_partition: n and m must be positive");
  require(n % m == 0, "contiguous_partition: m must divide n");
  BatchPartition partition{n, m, {}};
  const std::size_t size = n / m;
  partition.assignment.resize(m);
  for (std::size_t b = 0; b < m; ++b) {
    partition.assignment[b].resize(size);
    std::iota(partition.assignment[b].begin(), partition.assignment[b].end(), b * size);
  }
  return partition;
}

inline void validate_partition(const BatchPartition& partition) {
  require(partition.m >= 1 && partition.n >= 1, "partition: n and m must be positive");
  require(partition.n % partition.m == 0, "partition: m must divide n");
  require(partition.assignment.size() == partition.m, "partition: wrong number of batches");
  std::vector<bool> seen(partition.n, false);
  const std::size_t size = partition.n / partition.m;
  for (const auto& batch : partition.assignment) {
    require(batch.size() == size, "partition: batches must have equal size n/m");
    for (std::size_t idx : batch) {
      require(idx < partition.n, "partition: index out of range");
      require(!seen[idx], "partition: batches must be disjoint");
      seen[idx] = true;
    }
  }
}

namespace detail {

// Samples behind a batch of positions, mapped through sigma when present and
// sorted so the evaluation order is canonical for a given batch content.
inline std::vector<std::size_t> batch_samples(const std::vector<std::size_t>& batch,
                                              const std::vector<std::size_t>* sigma) {
  std::vector<std::size_t> samples(batch.size());
  for (std::size_t k = 0; k < batch.size(); ++k)
    samples[k] = sigma != nullptr ? (*sigma)[batch[k]] : batch[k];
  std::sort(samples.begin(), samples.end());
  return samples;
}

}  // namespace detail

// Batch-model incoherence of one batch: the worst value of the scaled batch
// loss (m/n) sum_{j in batch} l_j on the total solution set, above the scaled
// batch minimum. The sup ranges over the declared total solution set, mirroring
// the per-sample definition; an unconstrained sup would be infinite for
// coercive losses. The batch minimum comes from the batch normal equations for
// quadratic problems and must be supplied otherwise.
inline double batch_incoherence(const FiniteSumProblem& problem,
                                const std::vector<std::size_t>& batch, std::size_t m,
                                const std::vector<std::size_t>* sigma = nullptr,
                                std::optional<double> batch_min = std::nullopt,
                                bool allow_approximate = false) {
  const std::size_t n = problem.size();
  require(m >= 1 && n % m == 0, "batch_incoherence: m must divide n");
  require(batch.size() == n / m, "batch_incoherence: batch size must be n/m");
  if (sigma != nullptr)
    require(sigma->size() == n && is_permutation(*sigma),
            "batch_incoherence: sigma must be a permutation of 0..n-1");
  const SolutionSetDescriptor& set = problem.total_solution_set;
  require(!set.points.empty(), "batch_incoherence: empty total solution set");
  if (set.approximate && !allow_approximate)
    throw std::invalid_argument("batch_incoherence: total solution set is approximate");

  const std::vector<std::size_t> samples = detail::batch_samples(batch, sigma);
  for (std::size_t i : samples) require(i < n, "batch_incoherence: index out of range");

  const double scale = static_cast<double>(m) / static_cast<double>(n);

  double minimum;
  if (batch_min) {
    minimum = *batch_min;
  } else {
    Matrix hessian(problem.dimension, problem.dimension, 0.0);
    Vector rhs(problem.dimension, 0.0);
    for (std::size_t i : samples) {
      const SampleLossSpec& s = problem.samples[i];
      if (s.kind != SampleLossKind::Quadratic)
        throw std::invalid_argument(
            "batch_incoherence: no closed-form batch minimum for non-quadratic losses; supply one");
      hessian = add_scaled(hessian, s.curvature, 1.0);
      axpy(1.0, matvec(s.curvature, s.center), rhs);
    }
    const Vector minimizer = solve_linear(hessian, rhs);
    double at_min = 0.0;
    for (std::size_t i : samples) at_min += sample_loss(problem, i, minimizer);
    minimum = scale * at_min;
  }

  double worst = -std::numeric_limits<double>::infinity();
  for (const Vector& p : set.points) {
    double value = 0.0;
    for (std::size_t i : samples) value += sample_loss(problem, i, p);
    worst = std::max(worst, scale * value);
  }

  double eps = worst - minimum;
  if (eps < 0.0) {
    require(eps >= -kMinTolerance, "batch_incoherence: batch loss dips below its declared minimum");
    eps = 0.0;
  }
  return eps;
}

// Upper bound on the batch incoherence from the per-sample values:
// (m/n) * sum of the epsilon of the samples in the batch.
inline double batch_incoherence_upper_bound(const std::vector<double>& epsilons,
                                            const std::vector<std::size_t>& batch, std::size_t m,
                                            std::size_t n) {
  require(m >= 1 && n >= 1 && n % m == 0, "batch_incoherence_upper_bound: m must divide n");
  require(epsilons.size() == n, "batch_incoherence_upper_bound: epsilons size mismatch");
  KahanSum sum;
  for (std::size_t i : batch) {
    require(i < n, "batch_incoherence_upper_bound: index out of range");
    sum.add(epsilons[i]);
  }
  return sum.sum * static_cast<double>(m) / static_cast<double>(n);
}

// Right-hand side of the cyclic mini-batch average-loss bound:
//   L dist0_sq / (2 K (1 - alpha)) + sum_i eps_{b_i} / (m (1 - alpha)),  K = m B.
// alpha_batch is a caller-supplied diversity factor; no constructive value is
// available in general.
inline double cyclic_avg_loss_envelope(double smoothness, double dist0_sq, std::size_t total_steps,
                                       double alpha_batch, const std::vector<double>& batch_epsilons) {
  require(smoothness > 0.0, "cyclic_avg_loss_envelope: smoothness must be positive");
  require(dist0_sq >= 0.0, "cyclic_avg_loss_envelope: dist0_sq must be nonnegative");
  require(total_steps >= 1, "cyclic_avg_loss_envelope: total_steps must be positive");
  require(alpha_batch < 1.0, "cyclic_avg_loss_envelope: alpha_batch must be below 1");
  require(!batch_epsilons.empty(), "cyclic_avg_loss_envelope: empty batch incoherences");

  KahanSum eps_sum;
  for (double e : batch_epsilons) eps_sum.add(e);
  const double m = static_cast<double>(batch_epsilons.size());
  return smoothness * dist0_sq / (2.0 * static_cast<double>(total_steps) * (1.0 - alpha_batch)) +
         eps_sum.sum / (m * (1.0 - alpha_batch));
}

// Mean batch incoherence under a data permutation; the quantity the
// permutation search minimizes.
inline double permutation_loss(const FiniteSumProblem& problem, const BatchPartition& partition,
                               const std::vector<std::size_t>& sigma, bool allow_approximate = false) {
  validate_partition(partition);
  require(partition.n == problem.size(), "permutation_loss: partition size mismatch");
  KahanSum sum;
  for (const auto& batch : partition.assignment)
    sum.add(batch_incoherence(problem, batch, partition.m, &sigma, std::nullopt, allow_approximate));
  return sum.sum / static_cast<double>(partition.m);
}

struct PermutationSearchResult {
  std::vector<std::size_t> sigma;
  double loss = 0.0;
  enum class Method { Exhaustive, Anneal } method = Method::Exhaustive;
  std::vector<double> batch_incoherences;  // under the returned sigma
};

namespace detail {

inline std::vector<double> batch_incoherences_under(const FiniteSumProblem& problem,
                                                    const BatchPartition& partition,
                                                    const std::vector<std::size_t>& sigma,
                                                    bool allow_approximate) {
  std::vector<double> eps(partition.m);
  for (std::size_t b = 0; b < partition.m; ++b)
    eps[b] = batch_incoherence(problem, partition.assignment[b], partition.m, &sigma, std::nullopt,
                               allow_approximate);
  return eps;
}

// Canonical content key: sorted samples per batch, batches sorted, flattened.
inline std::vector<std::size_t> partition_content_key(const BatchPartition& partition,
                                                      const std::vector<std::size_t>& sigma) {
  std::vector<std::vector<std::size_t>> batches;
  batches.reserve(partition.m);
  for (const auto& batch : partition.assignment) batches.push_back(batch_samples(batch, &sigma));
  std::sort(batches.begin(), batches.end());
  std::vector<std::size_t> key;
  key.reserve(partition.n);
  for (const auto& b : batches) key.insert(key.end(), b.begin(), b.end());
  return key;
}

}  // namespace detail

// Minimizes the mean batch incoherence over data permutations. Up to n = 8 the
// search is exhaustive over distinct batch contents (permutations inducing the
// same batches are deduplicated) and returns the lexicographically smallest
// optimal sigma. Beyond that, simulated annealing over pairwise swaps with the
// identity as incumbent; the result never loses to the identity permutation.
inline PermutationSearchResult permutation_search(const FiniteSumProblem& problem,
                                                  const BatchPartition& partition,
                                                  std::size_t budget, std::uint64_t seed,
                                                  bool allow_approximate = false) {
  validate_partition(partition);
  require(partition.n == problem.size(), "permutation_search: partition size mismatch");
  require(budget >= 1, "permutation_search: budget must be positive");

  PermutationSearchResult result;

  if (partition.n <= 8) {
    result.method = PermutationSearchResult::Method::Exhaustive;
    std::map<std::vector<std::size_t>, double> content_loss;
    bool first = true;
    for (const auto& sigma : enumerate_permutations(partition.n)) {
      const auto key = detail::partition_content_key(partition, sigma);
      auto it = content_loss.find(key);
      double loss;
      if (it == content_loss.end()) {
        loss = permutation_loss(problem, partition, sigma, allow_approximate);
        content_loss.emplace(key, loss);
      } else {
        loss = it->second;
      }
      if (first || loss < result.loss) {
        first = false;
        result.loss = loss;
        result.sigma = sigma;
      }
    }
    result.batch_incoherences =
        detail::batch_incoherences_under(problem, partition, result.sigma, allow_approximate);
    return result;
  }

  result.method = PermutationSearchResult::Method::Anneal;
  std::vector<std::size_t> sigma(partition.n);
  std::iota(sigma.begin(), sigma.end(), std::size_t{0});

  std::vector<std::size_t> position_batch(partition.n);
  for (std::size_t b = 0; b < partition.m; ++b)
    for (std::size_t pos : partition.assignment[b]) position_batch[pos] = b;

  std::vector<double> eps = detail::batch_incoherences_under(problem, partition, sigma, allow_approximate);
  KahanSum eps_total;
  for (double e : eps) eps_total.add(e);
  double loss = eps_total.sum / static_cast<double>(partition.m);

  result.sigma = sigma;
  result.loss = loss;
  result.batch_incoherences = eps;

  Xoshiro256 rng(seed);
  const auto propose = [&](std::size_t& i, std::size_t& j) {
    i = static_cast<std::size_t>(rng.next_below(partition.n));
    j = static_cast<std::size_t>(rng.next_below(partition.n - 1));
    if (j >= i) ++j;
  };

  const auto swapped_loss = [&](std::size_t i, std::size_t j, double& eps_i, double& eps_j) {
    const std::size_t bi = position_batch[i];
    const std::size_t bj = position_batch[j];
    std::swap(sigma[i], sigma[j]);
    eps_i = batch_incoherence(problem, partition.assignment[bi], partition.m, &sigma, std::nullopt,
                              allow_approximate);
    eps_j = bi == bj ? eps_i
                     : batch_incoherence(problem, partition.assignment[bj], partition.m, &sigma,
                                         std::nullopt, allow_approximate);
    std::swap(sigma[i], sigma[j]);
    double delta = eps_i - eps[bi];
    if (bj != bi) delta += eps_j - eps[bj];
    return loss + delta / static_cast<double>(partition.m);
  };

  // Initial temperature from the local loss spread around the identity.
  double spread = 0.0;
  const std::size_t probes = std::min<std::size_t>(32, budget);
  for (std::size_t t = 0; t < probes; ++t) {
    std::size_t i, j;
    propose(i, j);
    double ei, ej;
    spread = std::max(spread, std::abs(swapped_loss(i, j, ei, ej) - loss));
  }
  double temperature = std::max(spread, 1e-12);
  const double decay = std::pow(1e-3, 1.0 / static_cast<double>(budget));

  for (std::size_t t = 0; t < budget; ++t) {
    std::size_t i, j;
    propose(i, j);
    double ei, ej;
    const double candidate = swapped_loss(i, j, ei, ej);
    const double delta = candidate - loss;
    if (delta <= 0.0 || rng.next_double() < std::exp(-delta / temperature)) {
      std::swap(sigma[i], sigma[j]);
      eps[position_batch[i]] = ei;
      if (position_batch[j] != position_batch[i]) eps[position_batch[j]] = ej;
      loss = candidate;
      if (loss < result.loss) {
        result.loss = loss;
        result.sigma = sigma;
        result.batch_incoherences = eps;
      }
    }
    temperature *= decay;
  }
  return result;
}

// --- Cyclic mini-batch SGD ----------------------------------------------------

struct CyclicRunResult {
  std::vector<double> step_total_loss;  // f(theta_k) for k = 0..K-1
  double average_gap = 0.0;             // (1/K) sum (f(theta_k) - f*)
  Vector final_iterate;
};

// Fixed batch order, one averaged-gradient step per batch, B passes. The
// batch gradient is the gradient of the scaled batch loss (the batch mean).
inline CyclicRunResult run_cyclic_minibatch_sgd(const FiniteSumProblem& problem,
                                                const BatchPartition& partition, double eta,
                                                std::size_t epochs, const Vector& theta0) {
  validate_partition(partition);
  require(partition.n == problem.size(), "run_cyclic_minibatch_sgd: partition size mismatch");
  require(theta0.size() == problem.dimension, "run_cyclic_minibatch_sgd: theta0 dimension mismatch");
  require(eta > 0.0 && eta < 2.0 / problem.smoothness,
          "run_cyclic_minibatch_sgd: eta must lie in (0, 2/L)");
  require(epochs >= 1, "run_cyclic_minibatch_sgd: epochs must be positive");

  const double batch_size = static_cast<double>(partition.n / partition.m);
  CyclicRunResult result;
  result.step_total_loss.reserve(partition.m * epochs);

  Vector theta = theta0;
  KahanSum gap_sum;
  for (std::size_t pass = 0; pass < epochs; ++pass) {
    for (std::size_t b = 0; b < partition.m; ++b) {
      const double f = total_loss(problem, theta);
      result.step_total_loss.push_back(f);
      gap_sum.add(f - problem.total_min);

      Vector g(problem.dimension, 0.0);
      for (std::size_t i : partition.assignment[b]) axpy(1.0, sample_gradient(problem, i, theta), g);
      axpy(-eta / batch_size, g, theta);

      if (!all_finite(theta) || squared_norm(theta) > kDivergenceGuard * kDivergenceGuard)
        throw std::runtime_error("run_cyclic_minibatch_sgd: diverged on batch " + std::to_string(b));
    }
  }
  result.average_gap = gap_sum.sum / static_cast<double>(partition.m * epochs);
  result.final_iterate = std::move(theta);
  return result;
}

}  // namespace sgdlab

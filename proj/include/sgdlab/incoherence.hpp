#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "sgdlab/problem.hpp"
#include "sgdlab/sampling.hpp"

namespace sgdlab {

// Slack for identities that should hold to floating-point accumulation error.
inline constexpr double kIdentitySlack = 1e-12;

// Elementary symmetric polynomials e_0..e_n of the inputs, by the one-pass
// ascending recurrence (descending inner index keeps it in place).
inline std::vector<double> elementary_symmetric(const std::vector<double>& values) {
  std::vector<double> e(values.size() + 1, 0.0);
  e[0] = 1.0;
  std::size_t filled = 0;
  for (double v : values) {
    ++filled;
    for (std::size_t r = filled; r >= 1; --r) e[r] += v * e[r - 1];
  }
  return e;
}

namespace detail {

inline std::vector<double> contraction_factors(const std::vector<double>& mu, double smoothness) {
  require(smoothness > 0.0, "contraction_factors: smoothness must be positive");
  require(!mu.empty(), "contraction_factors: empty mu");
  std::vector<double> a(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    require(mu[i] >= 0.0, "contraction_factors: negative mu");
    require(mu[i] <= smoothness, "contraction_factors: mu exceeds smoothness");
    a[i] = 1.0 - mu[i] / smoothness;
  }
  return a;
}

// C(n, r) for r = 0..n. Exact 64-bit integers up to n = 62; the double
// fallback uses the same multiplicative recurrence.
inline std::vector<double> binomial_row(std::size_t n) {
  std::vector<double> row(n + 1);
  if (n <= 62) {
    std::uint64_t c = 1;
    row[0] = 1.0;
    for (std::size_t r = 0; r < n; ++r) {
      const unsigned __int128 next = static_cast<unsigned __int128>(c) * (n - r) / (r + 1);
      c = static_cast<std::uint64_t>(next);
      row[r + 1] = static_cast<double>(c);
    }
  } else {
    double c = 1.0;
    row[0] = 1.0;
    for (std::size_t r = 0; r < n; ++r) {
      c = c * static_cast<double>(n - r) / static_cast<double>(r + 1);
      row[r + 1] = c;
    }
  }
  return row;
}

}  // namespace detail

// alpha = prod_i (1 - mu_i / L). Log-space for long products so tiny factors
// underflow gracefully rather than abruptly.
inline double curvature_incoherence(const std::vector<double>& mu, double smoothness) {
  const std::vector<double> a = detail::contraction_factors(mu, smoothness);
  for (double v : a)
    if (v == 0.0) return 0.0;
  double product;
  if (a.size() <= 64) {
    product = 1.0;
    for (double v : a) product *= v;
  } else {
    KahanSum log_sum;
    for (double v : a) log_sum.add(std::log(v));
    product = std::exp(log_sum.sum);
  }
  return std::clamp(product, 0.0, 1.0);
}

// Expected accumulation weight of per-step error over one reshuffled epoch:
// the mean over uniform permutations of sum_k prod_{s>k} (1 - mu_{sigma(s)}/L).
// The suffix of length r is a uniform r-subset without replacement, so its
// expected product is e_r(a) / C(n, r); summing over suffix lengths gives the
// closed form evaluated here.
inline double expected_epoch_error_weight(const std::vector<double>& mu, double smoothness) {
  const std::vector<double> a = detail::contraction_factors(mu, smoothness);
  const std::size_t n = a.size();
  const std::vector<double> e = elementary_symmetric(a);
  const std::vector<double> binom = detail::binomial_row(n);
  KahanSum sum;
  for (std::size_t r = 0; r < n; ++r) sum.add(e[r] / binom[r]);
  return sum.sum;
}

// Same accumulation weight for one fixed visiting order sigma, evaluated by a
// single reverse pass over suffix products.
inline double epoch_error_weight(const std::vector<double>& mu, double smoothness,
                                 const std::vector<std::size_t>& sigma) {
  const std::vector<double> a = detail::contraction_factors(mu, smoothness);
  require(sigma.size() == a.size() && is_permutation(sigma),
          "epoch_error_weight: sigma must be a permutation of 0..n-1");
  double suffix = 1.0;
  KahanSum sum;
  for (std::size_t k = a.size(); k-- > 0;) {
    sum.add(suffix);
    if (k > 0) suffix *= a[sigma[k]];
  }
  return sum.sum;
}

// Per-sample minimizer incoherence: the worst value each sample loss takes on
// the total solution set, above its own minimum. Values in [-kMinTolerance, 0)
// clamp to zero; anything lower means the declared sample minimum is wrong.
inline std::vector<double> minimizer_incoherences(const FiniteSumProblem& problem,
                                                  bool allow_approximate = false) {
  const SolutionSetDescriptor& set = problem.total_solution_set;
  require(!set.points.empty(), "minimizer_incoherences: empty total solution set");
  if (set.approximate && !allow_approximate)
    throw std::invalid_argument(
        "minimizer_incoherences: total solution set is approximate; pass allow_approximate to "
        "evaluate against the declared points");

  std::vector<double> eps(problem.size());
  for (std::size_t i = 0; i < problem.size(); ++i) {
    double worst = -std::numeric_limits<double>::infinity();
    for (const Vector& p : set.points) worst = std::max(worst, sample_loss(problem, i, p));
    double value = worst - problem.sample_min[i];
    if (value < 0.0) {
      require(value >= -kMinTolerance,
              "minimizer_incoherences: sample loss dips below its declared minimum");
      value = 0.0;
    }
    eps[i] = value;
  }
  return eps;
}

struct IncoherenceProfile {
  std::vector<double> epsilon;
  double epsilon_max = 0.0;
  double alpha = 1.0;
  double mu_bar = 0.0;
  double m_bar = 0.0;                 // expected epoch error weight over reshuffles
  std::optional<double> m_tilde;      // fixed-permutation weight, when sigma given
};

inline IncoherenceProfile incoherence_profile(const FiniteSumProblem& problem,
                                              const std::vector<std::size_t>* sigma = nullptr,
                                              bool allow_approximate = false) {
  IncoherenceProfile profile;
  profile.epsilon = minimizer_incoherences(problem, allow_approximate);
  profile.epsilon_max = *std::max_element(profile.epsilon.begin(), profile.epsilon.end());
  profile.alpha = curvature_incoherence(problem.mu, problem.smoothness);
  KahanSum mean;
  for (double m : problem.mu) mean.add(m);
  profile.mu_bar = mean.sum / static_cast<double>(problem.size());
  profile.m_bar = expected_epoch_error_weight(problem.mu, problem.smoothness);
  if (sigma != nullptr) profile.m_tilde = epoch_error_weight(problem.mu, problem.smoothness, *sigma);
  return profile;
}

struct MaclaurinChain {
  double error_weight = 0.0;            // expected epoch error weight
  double upper = 0.0;                   // sum_k (1 - mu_bar/L)^(n-1-k), the mean-factor majorant
  double reshuffle_floor_coeff = 0.0;   // 2 W / (L (1 - alpha))
  double replacement_floor_coeff = 0.0; // 2 / mu_bar
  bool holds = false;
};

// Both inequality steps of the reshuffle-vs-replacement error-floor chain:
// the weight is dominated by its mean-factor majorant, and the reshuffle
// floor coefficient by the replacement one.
inline MaclaurinChain maclaurin_chain_check(const std::vector<double>& mu, double smoothness) {
  const std::size_t n = mu.size();
  KahanSum mean;
  for (double m : mu) mean.add(m);
  const double mu_bar = mean.sum / static_cast<double>(n);
  const double alpha = curvature_incoherence(mu, smoothness);
  if (mu_bar <= 0.0 || alpha >= 1.0)
    throw std::invalid_argument("maclaurin_chain_check: needs mu_bar > 0 and alpha < 1");

  MaclaurinChain chain;
  chain.error_weight = expected_epoch_error_weight(mu, smoothness);
  const double q = 1.0 - mu_bar / smoothness;
  double power = 1.0;
  KahanSum upper;
  for (std::size_t r = 0; r < n; ++r) {
    upper.add(power);
    power *= q;
  }
  chain.upper = upper.sum;
  chain.reshuffle_floor_coeff = 2.0 * chain.error_weight / (smoothness * (1.0 - alpha));
  chain.replacement_floor_coeff = 2.0 / mu_bar;
  chain.holds = chain.error_weight <= chain.upper + kIdentitySlack &&
                chain.reshuffle_floor_coeff <= chain.replacement_floor_coeff + kIdentitySlack;
  return chain;
}

}  // namespace sgdlab

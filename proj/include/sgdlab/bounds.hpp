#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "sgdlab/incoherence.hpp"
#include "sgdlab/optimizer.hpp"

namespace sgdlab {

// --- Theoretical envelopes, one value per epoch boundary 0..B ---------------

// Coherent linear rate: alpha^b * dist0_sq. Valid per run for reshuffle and
// incremental sampling at eta = 1/L under full minimizer coherence.
inline std::vector<double> coherent_rate_envelope(double alpha, double dist0_sq, std::size_t epochs) {
  require(alpha >= 0.0 && alpha <= 1.0, "coherent_rate_envelope: alpha in [0,1]");
  require(dist0_sq >= 0.0, "coherent_rate_envelope: dist0_sq must be nonnegative");
  std::vector<double> env(epochs + 1);
  double value = dist0_sq;
  env[0] = value;
  for (std::size_t b = 1; b <= epochs; ++b) {
    value *= alpha;
    env[b] = value;
  }
  return env;
}

// With-replacement linear rate in expectation: (1 - mu_bar/L)^(n b) * dist0_sq.
inline std::vector<double> replacement_rate_envelope(double mu_bar, double smoothness,
                                                     std::size_t n, double dist0_sq,
                                                     std::size_t epochs) {
  require(mu_bar > 0.0 && mu_bar <= smoothness, "replacement_rate_envelope: need 0 < mu_bar <= L");
  require(dist0_sq >= 0.0, "replacement_rate_envelope: dist0_sq must be nonnegative");
  const double q = 1.0 - mu_bar / smoothness;
  double per_epoch = 1.0;
  for (std::size_t k = 0; k < n; ++k) per_epoch *= q;
  std::vector<double> env(epochs + 1);
  double value = dist0_sq;
  env[0] = value;
  for (std::size_t b = 1; b <= epochs; ++b) {
    value *= per_epoch;
    env[b] = value;
  }
  return env;
}

// Geometric approach to the error floor 2 eps W / (L (1 - alpha)). With the
// reshuffle-averaged weight this is an expectation bound; with a fixed-order
// weight it is deterministic for the incremental run using that order. A zero
// eps collapses it to the coherent rate envelope bit for bit.
inline std::vector<double> incoherent_envelope(double alpha, double epsilon_max,
                                               double error_weight, double smoothness,
                                               double dist0_sq, std::size_t epochs) {
  require(alpha >= 0.0, "incoherent_envelope: alpha must be nonnegative");
  require(alpha < 1.0, "incoherent_envelope: alpha = 1 leaves the envelope undefined");
  require(epsilon_max >= 0.0, "incoherent_envelope: epsilon_max must be nonnegative");
  require(error_weight >= 0.0, "incoherent_envelope: error weight must be nonnegative");
  require(smoothness > 0.0, "incoherent_envelope: smoothness must be positive");
  require(dist0_sq >= 0.0, "incoherent_envelope: dist0_sq must be nonnegative");

  const double floor = 2.0 * epsilon_max * error_weight / (smoothness * (1.0 - alpha));
  std::vector<double> env(epochs + 1);
  env[0] = dist0_sq;
  double head = dist0_sq - floor;
  for (std::size_t b = 1; b <= epochs; ++b) {
    head *= alpha;
    env[b] = head + floor;
  }
  return env;
}

// With-replacement analogue: floor 2 eps / mu_bar, rate (1 - mu_bar/L)^(n b).
inline std::vector<double> replacement_error_envelope(double mu_bar, double smoothness,
                                                      std::size_t n, double epsilon_max,
                                                      double dist0_sq, std::size_t epochs) {
  require(mu_bar > 0.0 && mu_bar <= smoothness, "replacement_error_envelope: need 0 < mu_bar <= L");
  require(epsilon_max >= 0.0, "replacement_error_envelope: epsilon_max must be nonnegative");
  require(dist0_sq >= 0.0, "replacement_error_envelope: dist0_sq must be nonnegative");

  const double floor = 2.0 * epsilon_max / mu_bar;
  const double q = 1.0 - mu_bar / smoothness;
  double per_epoch = 1.0;
  for (std::size_t k = 0; k < n; ++k) per_epoch *= q;
  std::vector<double> env(epochs + 1);
  env[0] = dist0_sq;
  double head = dist0_sq - floor;
  for (std::size_t b = 1; b <= epochs; ++b) {
    head *= per_epoch;
    env[b] = head + floor;
  }
  return env;
}

// --- Envelope vs. empirical series ------------------------------------------

struct BoundReport {
  std::string name;
  SamplingScheme scheme = SamplingScheme::RandomReshuffle;
  bool is_expectation_bound = false;
  // True when the theory backs this envelope as stated: eta = 1/L, a finite
  // envelope exists, and the solution set is exact.
  bool theoretically_guaranteed = false;
  // No finite envelope (all moduli zero); envelope entries are NaN.
  bool degenerate = false;
  std::vector<double> envelope;
  // Seed mean for expectation bounds, pointwise worst run otherwise.
  std::vector<double> empirical;
  std::vector<double> standard_error;
  std::vector<std::size_t> violations;  // epochs where the tolerated comparison failed
  double margin_min = std::numeric_limits<double>::infinity();
  std::size_t seeds = 0;
};

inline constexpr double kEnvelopeSlack = 1e-12;

struct BoundSuiteConfig {
  double eta = 0.0;            // 0 means 1/L
  std::size_t epochs = 50;
  std::size_t seeds = 200;     // expectation bounds are seed-averaged
  std::uint64_t base_seed = 0;
  bool allow_approximate = true;
};

namespace detail {

inline void finalize_report(BoundReport& report) {
  if (report.degenerate) return;
  const std::size_t count = report.empirical.size();
  for (std::size_t b = 0; b < count; ++b) {
    const double tolerance =
        kEnvelopeSlack + (report.is_expectation_bound ? 3.0 * report.standard_error[b] : 0.0);
    const double margin = report.envelope[b] - report.empirical[b];
    report.margin_min = std::min(report.margin_min, margin);
    if (margin < -tolerance) report.violations.push_back(b);
  }
}

inline std::vector<double> mean_series(const std::vector<std::vector<double>>& series) {
  std::vector<double> mean(series[0].size(), 0.0);
  for (const auto& s : series)
    for (std::size_t b = 0; b < mean.size(); ++b) mean[b] += s[b];
  for (double& v : mean) v /= static_cast<double>(series.size());
  return mean;
}

inline std::vector<double> se_series(const std::vector<std::vector<double>>& series,
                                     const std::vector<double>& mean) {
  std::vector<double> se(mean.size(), 0.0);
  if (series.size() < 2) return se;
  for (const auto& s : series)
    for (std::size_t b = 0; b < mean.size(); ++b) {
      const double d = s[b] - mean[b];
      se[b] += d * d;
    }
  const double denom = static_cast<double>(series.size() - 1) * static_cast<double>(series.size());
  for (double& v : se) v = std::sqrt(v / denom);
  return se;
}

inline std::vector<double> max_series(const std::vector<std::vector<double>>& series) {
  std::vector<double> out(series[0].size(), -std::numeric_limits<double>::infinity());
  for (const auto& s : series)
    for (std::size_t b = 0; b < out.size(); ++b) out[b] = std::max(out[b], s[b]);
  return out;
}

}  // namespace detail

// Runs the given scheme over `seeds` sampler seeds from a fixed theta0 and
// compares the realized distance series against the matching envelope.
// Incremental sampling without an explicit sigma draws one per seed and checks
// each run against the envelope built from its own order.
inline BoundReport evaluate_scheme_bound(const FiniteSumProblem& problem, const SchemeSpec& scheme,
                                         const BoundSuiteConfig& config, const Vector& theta0) {
  const double eta = config.eta > 0.0 ? config.eta : 1.0 / problem.smoothness;
  const bool eta_matches = std::abs(eta * problem.smoothness - 1.0) <= 1e-12;

  BoundReport report;
  report.scheme = scheme.kind;
  report.seeds = config.seeds;

  IncoherenceProfile profile = incoherence_profile(problem, nullptr, config.allow_approximate);
  const double dist0_sq = squared_dist_to_set(problem.total_solution_set, theta0);
  const bool coherent = profile.epsilon_max == 0.0;

  RunConfig run_config;
  run_config.eta = eta;
  run_config.epochs = config.epochs;
  run_config.allow_eta_above_recommended = true;

  switch (scheme.kind) {
    case SamplingScheme::RandomReshuffle:
      report.name = coherent ? "reshuffle_coherent_rate" : "reshuffle_error_bound";
      report.is_expectation_bound = !coherent;
      break;
    case SamplingScheme::Incremental:
      report.name = coherent ? "incremental_coherent_rate" : "incremental_error_bound";
      report.is_expectation_bound = false;
      break;
    case SamplingScheme::WithReplacement:
      report.name = coherent ? "replacement_rate" : "replacement_error_bound";
      report.is_expectation_bound = true;
      break;
  }

  const bool incremental = scheme.kind == SamplingScheme::Incremental;
  const bool finite_envelope = scheme.kind == SamplingScheme::WithReplacement
                                   ? profile.mu_bar > 0.0
                                   : profile.alpha < 1.0;
  if (!finite_envelope) {
    report.degenerate = true;
    report.envelope.assign(config.epochs + 1, std::numeric_limits<double>::quiet_NaN());
    report.standard_error.assign(config.epochs + 1, 0.0);
  }

  std::vector<std::vector<double>> runs;
  std::vector<std::vector<double>> envelopes;
  const std::size_t seed_count = incremental && !scheme.sigma.empty() ? 1 : config.seeds;
  runs.reserve(seed_count);

  for (std::size_t s = 0; s < seed_count; ++s) {
    SchemeSpec run_scheme = scheme;
    run_config.seed = derive_seed(config.base_seed, s);
    if (incremental && run_scheme.sigma.empty()) {
      std::vector<std::size_t> sigma(problem.size());
      std::iota(sigma.begin(), sigma.end(), std::size_t{0});
      Xoshiro256 rng(run_config.seed, kSigmaStream);
      rng.shuffle(sigma);
      run_scheme.sigma = std::move(sigma);
    }
    runs.push_back(run_sgd(problem, run_scheme, run_config, theta0).epoch_dist_sq);
    if (report.degenerate) continue;

    if (incremental) {
      const double weight = epoch_error_weight(problem.mu, problem.smoothness, run_scheme.sigma);
      envelopes.push_back(incoherent_envelope(profile.alpha, profile.epsilon_max, weight,
                                              problem.smoothness, dist0_sq, config.epochs));
    }
  }

  if (report.degenerate) {
    report.empirical = detail::max_series(runs);
    report.margin_min = std::numeric_limits<double>::quiet_NaN();
    return report;
  }

  if (scheme.kind == SamplingScheme::RandomReshuffle) {
    report.envelope = incoherent_envelope(profile.alpha, profile.epsilon_max, profile.m_bar,
                                          problem.smoothness, dist0_sq, config.epochs);
  } else if (scheme.kind == SamplingScheme::WithReplacement) {
    report.envelope = replacement_error_envelope(profile.mu_bar, problem.smoothness, problem.size(),
                                                 profile.epsilon_max, dist0_sq, config.epochs);
  }

  if (report.is_expectation_bound) {
    report.empirical = detail::mean_series(runs);
    report.standard_error = detail::se_series(runs, report.empirical);
    detail::finalize_report(report);
  } else {
    report.standard_error.assign(config.epochs + 1, 0.0);
    report.empirical = detail::max_series(runs);
    if (incremental) {
      // Check every run against the envelope for its own fixed order; report
      // the pointwise worst envelope for display.
      report.envelope = detail::max_series(envelopes);
      for (std::size_t s = 0; s < runs.size(); ++s)
        for (std::size_t b = 0; b < runs[s].size(); ++b) {
          const double margin = envelopes[s][b] - runs[s][b];
          report.margin_min = std::min(report.margin_min, margin);
          if (margin < -kEnvelopeSlack &&
              (report.violations.empty() || report.violations.back() != b))
            report.violations.push_back(b);
        }
    } else {
      // Deterministic bound: every single run must stay under the envelope.
      for (const auto& run : runs)
        for (std::size_t b = 0; b < run.size(); ++b) {
          const double margin = report.envelope[b] - run[b];
          report.margin_min = std::min(report.margin_min, margin);
          if (margin < -kEnvelopeSlack &&
              (report.violations.empty() || report.violations.back() != b))
            report.violations.push_back(b);
        }
    }
  }

  const bool exact_sets = !problem.total_solution_set.approximate;
  report.theoretically_guaranteed = eta_matches && exact_sets && !report.degenerate;
  return report;
}

// --- Scheme comparison -------------------------------------------------------

struct SchemeStats {
  double mean_final_dist_sq = 0.0;
  double standard_error = 0.0;
  double min_final_dist_sq = 0.0;
  double max_final_dist_sq = 0.0;
};

struct SchemeComparison {
  double reshuffle_rate = 0.0;     // alpha, per-epoch contraction
  double replacement_rate = 0.0;   // (1 - mu_bar/L)^n
  double reshuffle_floor = 0.0;    // NaN when no finite floor exists
  double replacement_floor = 0.0;  // NaN when mu_bar = 0
  SchemeStats reshuffle;
  SchemeStats incremental;
  SchemeStats replacement;
};

namespace detail {

inline SchemeStats stats_from_finals(const std::vector<double>& finals) {
  SchemeStats st;
  st.min_final_dist_sq = *std::min_element(finals.begin(), finals.end());
  st.max_final_dist_sq = *std::max_element(finals.begin(), finals.end());
  KahanSum sum;
  for (double v : finals) sum.add(v);
  st.mean_final_dist_sq = sum.sum / static_cast<double>(finals.size());
  if (finals.size() >= 2) {
    double var = 0.0;
    for (double v : finals) {
      const double d = v - st.mean_final_dist_sq;
      var += d * d;
    }
    st.standard_error = std::sqrt(var / (static_cast<double>(finals.size() - 1) *
                                         static_cast<double>(finals.size())));
  }
  return st;
}

}  // namespace detail

// Theoretical rate/floor comparison plus seed-averaged final errors for all
// three schemes from a shared theta0. Floors degrade to NaN when every modulus
// is zero, the empirical comparison still runs.
inline SchemeComparison compare_schemes(const FiniteSumProblem& problem, const RunConfig& base_config,
                                        std::size_t seeds, const Vector& theta0,
                                        bool allow_approximate = true) {
  require(seeds >= 1, "compare_schemes: seeds must be positive");
  IncoherenceProfile profile = incoherence_profile(problem, nullptr, allow_approximate);

  SchemeComparison cmp;
  cmp.reshuffle_rate = profile.alpha;
  double q = 1.0 - profile.mu_bar / problem.smoothness;
  double q_epoch = 1.0;
  for (std::size_t k = 0; k < problem.size(); ++k) q_epoch *= q;
  cmp.replacement_rate = q_epoch;
  if (profile.mu_bar > 0.0 && profile.alpha < 1.0) {
    cmp.reshuffle_floor = 2.0 * profile.epsilon_max * profile.m_bar /
                          (problem.smoothness * (1.0 - profile.alpha));
    cmp.replacement_floor = 2.0 * profile.epsilon_max / profile.mu_bar;
  } else {
    cmp.reshuffle_floor = std::numeric_limits<double>::quiet_NaN();
    cmp.replacement_floor = std::numeric_limits<double>::quiet_NaN();
  }

  std::vector<double> finals_reshuffle, finals_incremental, finals_replacement;
  for (std::size_t s = 0; s < seeds; ++s) {
    RunConfig config = base_config;
    config.seed = derive_seed(base_config.seed, s);
    config.record_every_iteration = false;

    finals_reshuffle.push_back(
        run_sgd(problem, SchemeSpec::reshuffle(), config, theta0).epoch_dist_sq.back());

    std::vector<std::size_t> sigma(problem.size());
    std::iota(sigma.begin(), sigma.end(), std::size_t{0});
    Xoshiro256 rng(config.seed, kSigmaStream);
    rng.shuffle(sigma);
    finals_incremental.push_back(
        run_sgd(problem, SchemeSpec::incremental(sigma), config, theta0).epoch_dist_sq.back());

    finals_replacement.push_back(
        run_sgd(problem, SchemeSpec::replacement(), config, theta0).epoch_dist_sq.back());
  }
  cmp.reshuffle = detail::stats_from_finals(finals_reshuffle);
  cmp.incremental = detail::stats_from_finals(finals_incremental);
  cmp.replacement = detail::stats_from_finals(finals_replacement);
  return cmp;
}

}  // namespace sgdlab

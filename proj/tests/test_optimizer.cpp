#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sgdlab/experiment.hpp"
#include "sgdlab/optimizer.hpp"

using namespace sgdlab;

namespace {

Matrix scalar_matrix(double value) {
  Matrix m(1, 1);
  m(0, 0) = value;
  return m;
}

}  // namespace

TEST_CASE("one epoch lands on the strong sample's minimizer regardless of order") {
  // centers (0,0), curvatures (0.5, 1), eta = 1: the unit-curvature step maps
  // any point to 0, so theta_n = 0 for both permutations.
  const FiniteSumProblem p =
      quadratic_problem({{0.0}, {0.0}}, {scalar_matrix(0.5), scalar_matrix(1.0)});
  RunConfig config;
  config.eta = 1.0;
  config.epochs = 1;
  for (const auto& sigma : {std::vector<std::size_t>{0, 1}, std::vector<std::size_t>{1, 0}}) {
    const Trajectory t = run_sgd(p, SchemeSpec::incremental(sigma), config, {1.0});
    CHECK(t.final_iterate()[0] == 0.0);
    CHECK(t.epoch_dist_sq.back() == 0.0);
  }
}

TEST_CASE("hand-iterated incremental run on the shifted pair") {
  const FiniteSumProblem p =
      quadratic_problem({{-1.0}, {1.0}}, {scalar_matrix(1.0), scalar_matrix(1.0)});
  RunConfig config;
  config.eta = 1.0;
  config.epochs = 1;
  config.record_every_iteration = true;
  const Trajectory t = run_sgd(p, SchemeSpec::incremental({0, 1}), config, {0.0});
  REQUIRE(t.iterates.size() == 3);
  CHECK(t.iterates[1][0] == doctest::Approx(-1.0));
  CHECK(t.iterates[2][0] == doctest::Approx(1.0));
  CHECK(t.index_log == std::vector<std::size_t>{0, 1});
}

TEST_CASE("starting on a fully coherent minimizer is a fixed point") {
  const FiniteSumProblem p =
      quadratic_problem({{0.3}, {0.3}}, {scalar_matrix(0.4), scalar_matrix(0.9)});
  RunConfig config;
  config.eta = 1.0 / p.smoothness;
  config.epochs = 5;
  config.record_every_iteration = true;
  const Trajectory t = run_sgd(p, SchemeSpec::reshuffle(), config, {0.3});
  for (const auto& iterate : t.iterates) CHECK(iterate[0] == 0.3);
  for (double d : t.epoch_dist_sq) CHECK(d == 0.0);
}

TEST_CASE("eta above 1/L needs the override") {
  const FiniteSumProblem p = quadratic_problem({{0.0}}, {scalar_matrix(1.0)});
  RunConfig config;
  config.eta = 3.0;
  config.epochs = 1;
  CHECK_THROWS_AS(run_sgd(p, SchemeSpec::reshuffle(), config, {1.0}), std::invalid_argument);
  config.allow_eta_above_recommended = true;
  CHECK_NOTHROW(run_sgd(p, SchemeSpec::reshuffle(), config, {1.0}));
}

TEST_CASE("divergence guard names iteration and sample") {
  const FiniteSumProblem p = quadratic_problem({{0.0}}, {scalar_matrix(1.0)});
  RunConfig config;
  config.eta = 3.0;  // step factor -2: exponential blowup
  config.epochs = 200;
  config.allow_eta_above_recommended = true;
  try {
    run_sgd(p, SchemeSpec::incremental({0}), config, {1.0});
    FAIL("expected divergence");
  } catch (const std::runtime_error& e) {
    const std::string message = e.what();
    CHECK(message.find("iteration") != std::string::npos);
    CHECK(message.find("sample") != std::string::npos);
  }
}

TEST_CASE("determinism: identical inputs give bit-identical trajectories") {
  const FiniteSumProblem p = random_quadratic_problem({3, 6, 11, true, 1.0, 0.2, 1.0});
  RunConfig config;
  config.eta = 1.0 / p.smoothness;
  config.epochs = 20;
  config.seed = 77;
  const Vector theta0{1.0, -2.0, 0.5};
  for (auto scheme : {SchemeSpec::reshuffle(), SchemeSpec::replacement()}) {
    const Trajectory a = run_sgd(p, scheme, config, theta0);
    const Trajectory b = run_sgd(p, scheme, config, theta0);
    CHECK(a.epoch_dist_sq == b.epoch_dist_sq);
    CHECK(a.index_log == b.index_log);
    CHECK(a.final_iterate() == b.final_iterate());
  }
}

TEST_CASE("index log matches the sampler's emissions") {
  const FiniteSumProblem p = random_quadratic_problem({2, 5, 3, true, 1.0, 0.2, 1.0});
  RunConfig config;
  config.eta = 1.0 / p.smoothness;
  config.epochs = 4;
  config.seed = 9;
  const Trajectory t = run_sgd(p, SchemeSpec::reshuffle(), config, {0.5, 0.5});
  EpochSampler sampler(SchemeSpec::reshuffle(), p.size(), config.seed);
  std::vector<std::size_t> expected;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch)
    for (std::size_t idx : sampler.next_epoch()) expected.push_back(idx);
  CHECK(t.index_log == expected);
}

TEST_CASE("monotone distance and per-epoch contraction under coherence") {
  const FiniteSumProblem p = random_quadratic_problem({4, 7, 21, true, 1.0, 0.3, 1.0});
  const double alpha = curvature_incoherence(p.mu, p.smoothness);
  RunConfig config;
  config.eta = 1.0 / p.smoothness;
  config.epochs = 40;
  config.seed = 5;
  config.record_every_iteration = true;
  const Vector theta0 = resolve_theta0(Theta0Spec{}, p, 123);

  for (auto scheme : {SchemeSpec::reshuffle(), SchemeSpec::incremental({3, 0, 6, 2, 5, 1, 4})}) {
    const Trajectory t = run_sgd(p, scheme, config, theta0);
    for (std::size_t k = 0; k + 1 < t.iterates.size(); ++k) {
      const double before = squared_dist_to_set(p.total_solution_set, t.iterates[k]);
      const double after = squared_dist_to_set(p.total_solution_set, t.iterates[k + 1]);
      CHECK(std::sqrt(after) <= std::sqrt(before) + 1e-9);
    }
    for (std::size_t b = 0; b + 1 < t.epoch_dist_sq.size(); ++b)
      CHECK(t.epoch_dist_sq[b + 1] <= alpha * t.epoch_dist_sq[b] + 1e-12);
  }
}

TEST_CASE("stationarity: last-epoch step sizes vanish by B = 500") {
  const FiniteSumProblem p = random_quadratic_problem({3, 6, 33, true, 1.0, 0.2, 1.0});
  RunConfig config;
  config.eta = 1.0 / p.smoothness;
  config.epochs = 500;
  config.seed = 3;
  config.record_every_iteration = true;
  const Trajectory t = run_sgd(p, SchemeSpec::reshuffle(), config, resolve_theta0(Theta0Spec{}, p, 8));
  const std::size_t n = p.size();
  double max_step = 0.0;
  for (std::size_t k = t.iterates.size() - n - 1; k + 1 < t.iterates.size(); ++k)
    max_step = std::max(max_step, distance(t.iterates[k], t.iterates[k + 1]));
  CHECK(max_step < 1e-7);
}

TEST_CASE("progress monitor: clean at eta = 1/L, trips at eta = 3/L") {
  const FiniteSumProblem p = random_quadratic_problem({3, 8, 51, true, 1.0, 0.25, 1.0});
  RunConfig config;
  config.eta = 1.0 / p.smoothness;
  config.epochs = 30;
  config.seed = 13;
  config.record_every_iteration = true;
  const Vector theta0 = resolve_theta0(Theta0Spec{}, p, 19);

  const Trajectory clean = run_sgd(p, SchemeSpec::reshuffle(), config, theta0);
  CHECK(monitor_step_progress(p, clean).empty());

  RunConfig hot = config;
  hot.eta = 3.0 / p.smoothness;
  hot.allow_eta_above_recommended = true;
  hot.epochs = 2;
  const Trajectory violating = run_sgd(p, SchemeSpec::reshuffle(), hot, theta0);
  CHECK_FALSE(monitor_step_progress(p, violating).empty());
}

TEST_CASE("progress monitor refuses partial records and approximate sets") {
  const FiniteSumProblem p = random_quadratic_problem({2, 4, 5, true, 1.0, 0.3, 1.0});
  RunConfig config;
  config.eta = 1.0 / p.smoothness;
  config.epochs = 2;
  const Trajectory t = run_sgd(p, SchemeSpec::reshuffle(), config, {0.1, 0.1});
  CHECK_THROWS_AS(monitor_step_progress(p, t), std::invalid_argument);

  const FiniteSumProblem noisy = phase_retrieval_problem(4, 8, 1.0, 1);
  RunConfig pr_config;
  pr_config.eta = 0.1;
  pr_config.epochs = 1;
  pr_config.record_every_iteration = true;
  const Trajectory pr_run =
      run_sgd(noisy, SchemeSpec::reshuffle(), pr_config, resolve_theta0(Theta0Spec{}, noisy, 2));
  CHECK_THROWS_AS(monitor_step_progress(noisy, pr_run), std::invalid_argument);
}

TEST_CASE("both sides of the progress inequality vanish on a coherent minimizer") {
  const FiniteSumProblem p =
      quadratic_problem({{0.0}, {0.0}}, {scalar_matrix(0.5), scalar_matrix(1.0)});
  RunConfig config;
  config.eta = 1.0;
  config.epochs = 3;
  config.record_every_iteration = true;
  const Trajectory t = run_sgd(p, SchemeSpec::reshuffle(), config, {0.0});
  CHECK(monitor_step_progress(p, t).empty());
}

TEST_CASE("convergence probe on a coherent run") {
  const FiniteSumProblem p = random_quadratic_problem({3, 5, 61, true, 1.0, 0.3, 1.0});
  RunConfig config;
  config.eta = 1.0 / p.smoothness;
  config.epochs = 200;
  config.seed = 21;
  config.record_every_iteration = true;
  const Trajectory t = run_sgd(p, SchemeSpec::reshuffle(), config, resolve_theta0(Theta0Spec{}, p, 4));
  const ConvergenceProbe probe = convergence_probe(p, t, 0.1);
  CHECK(probe.cauchy_radius < 1e-8);
  CHECK(probe.limit_in_solution_set);
}

TEST_CASE("convergence probe edge cases") {
  const FiniteSumProblem p =
      quadratic_problem({{0.2}, {0.2}}, {scalar_matrix(0.5), scalar_matrix(1.0)});
  RunConfig config;
  config.eta = 1.0;
  config.epochs = 5;
  config.record_every_iteration = true;
  const Trajectory constant = run_sgd(p, SchemeSpec::reshuffle(), config, {0.2});
  CHECK(convergence_probe(p, constant, 0.5).cauchy_radius == 0.0);
  CHECK_THROWS_AS(convergence_probe(p, constant, 0.05), std::invalid_argument);  // one tail iterate

  // incoherent pair at eta = 1/L: cycles in a neighborhood, never inside tol
  const FiniteSumProblem shifted =
      quadratic_problem({{-1.0}, {1.0}}, {scalar_matrix(1.0), scalar_matrix(1.0)});
  const Trajectory cycling = run_sgd(shifted, SchemeSpec::reshuffle(), config, {0.0});
  const ConvergenceProbe probe = convergence_probe(shifted, cycling, 0.5);
  CHECK_FALSE(probe.limit_in_solution_set);
  CHECK(probe.cauchy_radius > 0.0);
  CHECK(probe.cauchy_radius < 10.0);
}

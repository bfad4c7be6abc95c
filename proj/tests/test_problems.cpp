#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sgdlab/problem.hpp"
#include "sgdlab/rng.hpp"

using namespace sgdlab;

namespace {

Matrix scalar_matrix(double value) {
  Matrix m(1, 1);
  m(0, 0) = value;
  return m;
}

FiniteSumProblem two_sample_1d(double c0, double c1, double a0 = 1.0, double a1 = 1.0) {
  return quadratic_problem({{c0}, {c1}}, {scalar_matrix(a0), scalar_matrix(a1)});
}

// Central finite differences, the independent gradient oracle.
Vector central_difference(const FiniteSumProblem& problem, std::size_t i, const Vector& theta,
                          double h = 1e-6) {
  Vector g(theta.size());
  for (std::size_t j = 0; j < theta.size(); ++j) {
    Vector up = theta, down = theta;
    up[j] += h;
    down[j] -= h;
    g[j] = (sample_loss(problem, i, up) - sample_loss(problem, i, down)) / (2.0 * h);
  }
  return g;
}

}  // namespace

TEST_CASE("symmetric pair: minimizer forced at the midpoint") {
  const FiniteSumProblem p = two_sample_1d(-1.0, 1.0);
  REQUIRE(p.total_solution_set.points.size() == 1);
  CHECK(p.total_solution_set.points[0][0] == doctest::Approx(0.0));
  CHECK(p.sample_min[0] == 0.0);
  CHECK(p.sample_min[1] == 0.0);
  CHECK(p.smoothness == doctest::Approx(1.0));
  CHECK(p.mu[0] == doctest::Approx(1.0));
  CHECK(p.mu[1] == doctest::Approx(1.0));
}

TEST_CASE("shared center: full coherence") {
  const FiniteSumProblem p = two_sample_1d(0.0, 0.0, 0.5, 1.0);
  CHECK(p.total_solution_set.points[0][0] == doctest::Approx(0.0));
  CHECK(p.mu[0] == doctest::Approx(0.5));
  CHECK(p.mu[1] == doctest::Approx(1.0));
  CHECK(p.smoothness == doctest::Approx(1.0));
  // per-sample sets coincide with the total set
  for (const auto& set : p.per_sample_solution_sets)
    CHECK(dist_to_set(set, p.total_solution_set.points[0]) == doctest::Approx(0.0));
}

TEST_CASE("2-d identity curvatures: minimizer is the mean of the centers") {
  const std::vector<Vector> centers{{1.0, 0.0}, {0.0, 1.0}, {-1.0, -1.0}};
  std::vector<Matrix> curvatures(3, Matrix::identity(2));
  const FiniteSumProblem p = quadratic_problem(centers, curvatures);
  REQUIRE(p.total_solution_set.points.size() == 1);
  CHECK(p.total_solution_set.points[0][0] == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(p.total_solution_set.points[0][1] == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("construction rejections") {
  // dimension mismatch
  CHECK_THROWS_AS(quadratic_problem({{0.0}, {0.0, 1.0}}, {scalar_matrix(1), scalar_matrix(1)}),
                  std::invalid_argument);
  // non-PSD curvature
  CHECK_THROWS_AS(quadratic_problem({{0.0}}, {scalar_matrix(-1.0)}), std::invalid_argument);
  // singular sample curvature: the per-sample solution set would be affine
  Matrix singular(2, 2, 0.0);
  singular(0, 0) = 1.0;
  CHECK_THROWS_AS(quadratic_problem({{0.0, 0.0}}, {singular}), std::invalid_argument);
  // smoothness override below the largest eigenvalue
  QuadraticOptions bad;
  bad.smoothness = 0.5;
  CHECK_THROWS_AS(quadratic_problem({{0.0}}, {scalar_matrix(1.0)}, bad), std::invalid_argument);
}

TEST_CASE("smoothness override above the spectrum is accepted") {
  QuadraticOptions opts;
  opts.smoothness = 1.0;
  const FiniteSumProblem p =
      quadratic_problem({{0.0}, {0.0}}, {scalar_matrix(0.5), scalar_matrix(0.75)}, opts);
  CHECK(p.smoothness == 1.0);
  CHECK(p.mu[0] == doctest::Approx(0.5));
  CHECK(p.mu[1] == doctest::Approx(0.75));
}

TEST_CASE("total_loss from the examples") {
  const FiniteSumProblem p = two_sample_1d(-1.0, 1.0);
  CHECK(total_loss(p, {0.0}) == doctest::Approx(0.5));
  CHECK(total_loss(p, {1.0}) == doctest::Approx(1.0));
  CHECK(std::abs(total_loss(p, p.total_solution_set.points[0]) - p.total_min) <= kMinTolerance);
  CHECK_THROWS_AS(total_loss(p, {0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("sample_gradient: quadratic at its center vanishes") {
  const FiniteSumProblem p = two_sample_1d(-1.0, 1.0);
  CHECK(sample_gradient(p, 0, {-1.0})[0] == 0.0);
  CHECK_THROWS_AS(sample_gradient(p, 2, {0.0}), std::invalid_argument);
}

TEST_CASE("phase retrieval 1-d hand gradient") {
  // loss 0.5 (4 - |2 theta|)^2, gradient at theta=1 is -4
  FiniteSumProblem p;
  p.dimension = 1;
  p.samples.resize(1);
  p.samples[0].kind = SampleLossKind::PhaseRetrieval;
  p.samples[0].measurement = {2.0};
  p.samples[0].observation = 4.0;
  p.mu = {0.0};
  p.sample_min = {0.0};
  p.smoothness = 4.0;
  p.total_solution_set.points = {{2.0}, {-2.0}};
  p.per_sample_solution_sets.push_back(p.total_solution_set);

  CHECK(sample_gradient(p, 0, {1.0})[0] == doctest::Approx(-4.0));
  // subgradient convention: sign(0) = 0
  CHECK(sample_gradient(p, 0, {0.0})[0] == 0.0);
  CHECK(sample_loss(p, 0, {1.0}) == doctest::Approx(2.0));
}

TEST_CASE("gradients match central finite differences") {
  Xoshiro256 rng(11);
  const FiniteSumProblem quad = quadratic_problem(
      {{0.3, -0.2}, {1.0, 0.5}},
      {[] {
         Matrix m(2, 2);
         m(0, 0) = 1.0;
         m(0, 1) = 0.2;
         m(1, 0) = 0.2;
         m(1, 1) = 0.7;
         return m;
       }(),
       Matrix::identity(2)});
  for (int trial = 0; trial < 50; ++trial) {
    Vector theta{rng.next_gaussian(), rng.next_gaussian()};
    for (std::size_t i = 0; i < quad.size(); ++i) {
      const Vector g = sample_gradient(quad, i, theta);
      const Vector fd = central_difference(quad, i, theta);
      for (std::size_t j = 0; j < 2; ++j)
        CHECK(g[j] == doctest::Approx(fd[j]).epsilon(1e-6));
    }
  }

  const FiniteSumProblem pr = phase_retrieval_problem(4, 8, 0.5, 99);
  for (int trial = 0; trial < 50; ++trial) {
    Vector theta(4);
    for (double& v : theta) v = rng.next_gaussian();
    for (std::size_t i = 0; i < pr.size(); ++i) {
      if (std::abs(dot(pr.samples[i].measurement, theta)) < 1e-3) continue;  // kink
      const Vector g = sample_gradient(pr, i, theta);
      const Vector fd = central_difference(pr, i, theta);
      for (std::size_t j = 0; j < 4; ++j)
        CHECK(g[j] == doctest::Approx(fd[j]).epsilon(1e-5));
    }
  }
}

TEST_CASE("dist_to_set") {
  SolutionSetDescriptor set;
  set.points = {{0.0}};
  CHECK(dist_to_set(set, {3.0}) == doctest::Approx(3.0));

  SolutionSetDescriptor two;
  two.points = {{0.0, 0.0}, {2.0, 0.0}};
  CHECK(dist_to_set(two, {1.0, 1.0}) == doctest::Approx(std::sqrt(2.0)));

  SolutionSetDescriptor empty;
  CHECK_THROWS_AS(dist_to_set(empty, {0.0}), std::invalid_argument);
}

TEST_CASE("noiseless phase retrieval: every sample loss vanishes at the signal") {
  const FiniteSumProblem p = phase_retrieval_problem(4, 16, 0.0, 5);
  const Vector& x0 = p.total_solution_set.points[0];
  const Vector& neg = p.total_solution_set.points[1];
  CHECK_FALSE(p.total_solution_set.approximate);
  for (std::size_t i = 0; i < p.size(); ++i) {
    CHECK(sample_loss(p, i, x0) == 0.0);
    CHECK(sample_loss(p, i, neg) == doctest::Approx(0.0));
    CHECK(p.sample_min[i] == 0.0);
  }
  CHECK(dist_to_set(p.total_solution_set, neg) == 0.0);
}

TEST_CASE("phase retrieval determinism and noise flagging") {
  const FiniteSumProblem a = phase_retrieval_problem(8, 32, 3.0, 2026);
  const FiniteSumProblem b = phase_retrieval_problem(8, 32, 3.0, 2026);
  CHECK(a.total_solution_set.points[0] == b.total_solution_set.points[0]);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.samples[i].measurement == b.samples[i].measurement);
    CHECK(a.samples[i].observation == b.samples[i].observation);
    CHECK(a.samples[i].observation >= 0.0);
  }
  CHECK(a.total_solution_set.approximate);

  // same seed, different noise level: shared geometry
  const FiniteSumProblem c = phase_retrieval_problem(8, 32, 1.0, 2026);
  CHECK(c.total_solution_set.points[0] == a.total_solution_set.points[0]);
  CHECK(c.samples[0].measurement == a.samples[0].measurement);
}

TEST_CASE("smoothness inequality holds on random pairs") {
  Xoshiro256 rng(17);
  const FiniteSumProblem p = quadratic_problem(
      {{0.5, 0.0, 0.0}, {0.0, -0.5, 0.2}},
      {Matrix::identity(3), [] {
         Matrix m = Matrix::identity(3);
         m(0, 0) = 0.3;
         m(1, 1) = 0.9;
         m(2, 2) = 0.6;
         return m;
       }()});
  for (int trial = 0; trial < 1000; ++trial) {
    Vector x(3), y(3);
    for (double& v : x) v = 2.0 * rng.next_gaussian();
    for (double& v : y) v = 2.0 * rng.next_gaussian();
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double lhs = sample_loss(p, i, x);
      const double rhs = sample_loss(p, i, y) + dot(subtract(x, y), sample_gradient(p, i, y)) +
                         0.5 * p.smoothness * squared_distance(x, y);
      CHECK(lhs <= rhs + 1e-9);
    }
  }
}

TEST_CASE("weak strong convexity holds with the declared moduli") {
  Xoshiro256 rng(23);
  const FiniteSumProblem p = quadratic_problem(
      {{1.0, 2.0}, {-1.0, 0.5}}, {[] {
                                    Matrix m(2, 2);
                                    m(0, 0) = 0.8;
                                    m(0, 1) = 0.1;
                                    m(1, 0) = 0.1;
                                    m(1, 1) = 0.4;
                                    return m;
                                  }(),
                                  Matrix::identity(2)});
  for (int trial = 0; trial < 1000; ++trial) {
    Vector x(2);
    for (double& v : x) v = 3.0 * rng.next_gaussian();
    for (std::size_t i = 0; i < p.size(); ++i) {
      for (const auto* set : {&p.per_sample_solution_sets[i], &p.total_solution_set}) {
        // nearest declared point plays the projection
        const Vector* nearest = nullptr;
        double best = std::numeric_limits<double>::infinity();
        for (const auto& point : set->points) {
          const double d = squared_distance(point, x);
          if (d < best) {
            best = d;
            nearest = &point;
          }
        }
        const double lhs = sample_loss(p, i, *nearest);
        const double rhs = sample_loss(p, i, x) + dot(subtract(*nearest, x), sample_gradient(p, i, x)) +
                           0.5 * p.mu[i] * squared_distance(x, *nearest);
        CHECK(lhs >= rhs - 1e-9);
      }
    }
  }
}

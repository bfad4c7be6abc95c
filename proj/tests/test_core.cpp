#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sgdlab/linalg.hpp"
#include "sgdlab/rng.hpp"

using namespace sgdlab;

TEST_CASE("vector basics") {
  Vector a{1.0, 2.0, 3.0};
  Vector b{4.0, -1.0, 0.5};
  CHECK(dot(a, b) == doctest::Approx(1.0 * 4.0 - 2.0 + 1.5));
  CHECK(squared_norm(a) == doctest::Approx(14.0));
  CHECK(squared_distance(a, a) == 0.0);
  CHECK_THROWS_AS(dot(a, Vector{1.0}), std::invalid_argument);
}

TEST_CASE("jacobi eigenvalues on a known matrix") {
  // [[2,1],[1,2]] has eigenvalues 1 and 3.
  Matrix m(2, 2);
  m(0, 0) = 2.0;
  m(0, 1) = 1.0;
  m(1, 0) = 1.0;
  m(1, 1) = 2.0;
  const Vector eig = symmetric_eigenvalues(m);
  CHECK(eig[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(eig[1] == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("jacobi eigenvalues match trace and determinant on random symmetric matrices") {
  Xoshiro256 rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t d = 2 + rng.next_below(5);
    Matrix m(d, d);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i; j < d; ++j) {
        const double v = rng.next_gaussian();
        m(i, j) = v;
        m(j, i) = v;
      }
    const Vector eig = symmetric_eigenvalues(m);
    double trace = 0.0;
    for (std::size_t i = 0; i < d; ++i) trace += m(i, i);
    double eig_sum = 0.0;
    for (double v : eig) eig_sum += v;
    CHECK(eig_sum == doctest::Approx(trace).epsilon(1e-10));
  }
}

TEST_CASE("solve_linear recovers the solution") {
  Xoshiro256 rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t d = 1 + rng.next_below(6);
    Matrix m(d, d);
    for (double& v : m.data) v = rng.next_gaussian();
    for (std::size_t i = 0; i < d; ++i) m(i, i) += 4.0;  // keep it well conditioned
    Vector x(d);
    for (double& v : x) v = rng.next_gaussian();
    const Vector b = matvec(m, x);
    const Vector solved = solve_linear(m, b);
    for (std::size_t i = 0; i < d; ++i) CHECK(solved[i] == doctest::Approx(x[i]).epsilon(1e-9));
  }
}

TEST_CASE("solve_linear rejects singular systems") {
  Matrix m(2, 2);
  m(0, 0) = 1.0;
  m(0, 1) = 2.0;
  m(1, 0) = 2.0;
  m(1, 1) = 4.0;
  CHECK_THROWS_AS(solve_linear(m, Vector{1.0, 1.0}), std::invalid_argument);
}

TEST_CASE("rng streams are deterministic and distinct") {
  Xoshiro256 a(123), b(123), c(124);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
  bool differs = false;
  Xoshiro256 a2(123);
  for (int i = 0; i < 100; ++i) differs = differs || a2.next() != c.next();
  CHECK(differs);

  Xoshiro256 s0(5, 0), s1(5, 1);
  bool stream_differs = false;
  for (int i = 0; i < 100; ++i) stream_differs = stream_differs || s0.next() != s1.next();
  CHECK(stream_differs);
}

TEST_CASE("uniform doubles live in [0,1) and have the right mean") {
  Xoshiro256 rng(99);
  double sum = 0.0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    const double u = rng.next_double();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
  }
  CHECK(sum / draws == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("gaussian moments") {
  Xoshiro256 rng(2024);
  const int draws = 200000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < draws; ++i) {
    const double z = rng.next_gaussian();
    sum += z;
    sum_sq += z * z;
  }
  CHECK(sum / draws == doctest::Approx(0.0).epsilon(0.02));
  CHECK(sum_sq / draws == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("next_below is unbiased enough") {
  Xoshiro256 rng(31337);
  const std::size_t n = 7;
  std::vector<int> counts(n, 0);
  const int draws = 140000;
  for (int i = 0; i < draws; ++i) ++counts[rng.next_below(n)];
  for (std::size_t v = 0; v < n; ++v) {
    const double freq = static_cast<double>(counts[v]) / draws;
    // 1/n = 0.142857, three standard errors of the binomial is about 0.0028
    CHECK(std::abs(freq - 1.0 / 7.0) < 0.004);
  }
}

TEST_CASE("kahan summation beats naive accumulation") {
  KahanSum sum;
  const double tiny = 1e-16;
  sum.add(1.0);
  for (int i = 0; i < 100000; ++i) sum.add(tiny);
  CHECK(sum.sum == doctest::Approx(1.0 + 1e-11).epsilon(1e-14));
}

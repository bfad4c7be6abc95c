#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>

#include "sgdlab/sampling.hpp"

using namespace sgdlab;

TEST_CASE("n = 1 emits [0] under every scheme") {
  for (auto spec : {SchemeSpec::reshuffle(), SchemeSpec::incremental({0}), SchemeSpec::replacement()}) {
    EpochSampler sampler(spec, 1, 7);
    CHECK(sampler.next_epoch() == std::vector<std::size_t>{0});
  }
}

TEST_CASE("incremental repeats its permutation") {
  EpochSampler sampler(SchemeSpec::incremental({2, 0, 1}), 3, 0);
  CHECK(sampler.next_epoch() == std::vector<std::size_t>{2, 0, 1});
  CHECK(sampler.next_epoch() == std::vector<std::size_t>{2, 0, 1});
  CHECK(sampler.epochs_emitted() == 2);
}

TEST_CASE("incremental validates sigma") {
  CHECK_THROWS_AS(EpochSampler(SchemeSpec::incremental({0, 0, 1}), 3, 0), std::invalid_argument);
  CHECK_THROWS_AS(EpochSampler(SchemeSpec::incremental({0, 1}), 3, 0), std::invalid_argument);
}

TEST_CASE("reshuffle epochs are permutations") {
  EpochSampler sampler(SchemeSpec::reshuffle(), 17, 99);
  for (int epoch = 0; epoch < 200; ++epoch) CHECK(is_permutation(sampler.next_epoch()));
}

TEST_CASE("equal construction parameters give equal streams") {
  for (auto spec : {SchemeSpec::reshuffle(), SchemeSpec::replacement()}) {
    EpochSampler a(spec, 9, 12345), b(spec, 9, 12345);
    for (int epoch = 0; epoch < 100; ++epoch) CHECK(a.next_epoch() == b.next_epoch());
  }
}

TEST_CASE("reshuffle with n = 3 visits all 6 permutations uniformly") {
  EpochSampler sampler(SchemeSpec::reshuffle(), 3, 31);
  std::map<std::vector<std::size_t>, int> counts;
  const int epochs = 60000;
  for (int epoch = 0; epoch < epochs; ++epoch) ++counts[sampler.next_epoch()];
  CHECK(counts.size() == 6);
  for (const auto& [perm, count] : counts) {
    const double freq = static_cast<double>(count) / epochs;
    CHECK(std::abs(freq - 1.0 / 6.0) < 0.01);
  }
}

TEST_CASE("with-replacement per-index frequency is near 1/n") {
  const std::size_t n = 10;
  EpochSampler sampler(SchemeSpec::replacement(), n, 555);
  std::vector<int> counts(n, 0);
  const int epochs = 10000;  // 1e5 draws total
  for (int epoch = 0; epoch < epochs; ++epoch)
    for (std::size_t idx : sampler.next_epoch()) ++counts[idx];
  const double draws = static_cast<double>(epochs) * n;
  const double se = std::sqrt((1.0 / n) * (1.0 - 1.0 / n) / draws);
  for (std::size_t v = 0; v < n; ++v) {
    const double freq = counts[v] / draws;
    CHECK(std::abs(freq - 1.0 / n) <= 3.0 * se + 1e-12);
  }
}

TEST_CASE("with-replacement epochs are generally not permutations") {
  EpochSampler sampler(SchemeSpec::replacement(), 8, 4);
  int non_permutations = 0;
  for (int epoch = 0; epoch < 50; ++epoch)
    if (!is_permutation(sampler.next_epoch())) ++non_permutations;
  CHECK(non_permutations > 40);  // P(permutation) = 8!/8^8, vanishing
}

TEST_CASE("enumerate_permutations") {
  CHECK(enumerate_permutations(1) == std::vector<std::vector<std::size_t>>{{0}});
  CHECK(enumerate_permutations(2) == std::vector<std::vector<std::size_t>>{{0, 1}, {1, 0}});

  const auto all = enumerate_permutations(4);
  CHECK(all.size() == 24);
  for (std::size_t i = 1; i < all.size(); ++i) CHECK(all[i - 1] < all[i]);  // lexicographic, distinct
  for (const auto& perm : all) CHECK(is_permutation(perm));

  CHECK_THROWS_AS(enumerate_permutations(9), std::invalid_argument);
  CHECK_THROWS_AS(enumerate_permutations(0), std::invalid_argument);
}

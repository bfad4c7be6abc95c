#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "sgdlab/linalg.hpp"
#include "sgdlab/rng.hpp"

namespace sgdlab {

enum class SamplingScheme { RandomReshuffle, Incremental, WithReplacement };

inline const char* scheme_name(SamplingScheme scheme) {
  switch (scheme) {
    case SamplingScheme::RandomReshuffle: return "reshuffle";
    case SamplingScheme::Incremental: return "incremental";
    case SamplingScheme::WithReplacement: return "replacement";
  }
  return "?";
}

inline SamplingScheme scheme_from_name(const std::string& name) {
  if (name == "reshuffle") return SamplingScheme::RandomReshuffle;
  if (name == "incremental") return SamplingScheme::Incremental;
  if (name == "replacement") return SamplingScheme::WithReplacement;
  throw std::invalid_argument("unknown sampling scheme '" + name + "' (expected reshuffle|incremental|replacement)");
}

inline bool is_permutation(const std::vector<std::size_t>& sigma) {
  std::vector<std::size_t> sorted = sigma;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i)
    if (sorted[i] != i) return false;
  return true;
}

struct SchemeSpec {
  SamplingScheme kind = SamplingScheme::RandomReshuffle;
  std::vector<std::size_t> sigma;  // Incremental only; fixed for every epoch

  static SchemeSpec reshuffle() { return {SamplingScheme::RandomReshuffle, {}}; }
  static SchemeSpec incremental(std::vector<std::size_t> sigma) {
    return {SamplingScheme::Incremental, std::move(sigma)};
  }
  static SchemeSpec replacement() { return {SamplingScheme::WithReplacement, {}}; }
};

// Emits one length-n index sequence per epoch. Epoch e draws from the RNG
// substream (seed, e), so epochs are independent of each other and can be
// regenerated out of order when replaying a run.
class EpochSampler {
 public:
  static constexpr const char* rng_algorithm = Xoshiro256::algorithm_id;

  EpochSampler(SchemeSpec spec, std::size_t n, std::uint64_t seed)
      : spec_(std::move(spec)), n_(n), seed_(seed) {
    require(n_ >= 1, "EpochSampler: n must be positive");
    if (spec_.kind == SamplingScheme::Incremental) {
      require(spec_.sigma.size() == n_ && is_permutation(spec_.sigma),
              "EpochSampler: incremental sigma must be a permutation of 0..n-1");
    }
  }

  std::vector<std::size_t> next_epoch() {
    std::vector<std::size_t> order(n_);
    switch (spec_.kind) {
      case SamplingScheme::RandomReshuffle: {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Xoshiro256 rng(seed_, epoch_);
        rng.shuffle(order);
        break;
      }
      case SamplingScheme::Incremental:
        order = spec_.sigma;
        break;
      case SamplingScheme::WithReplacement: {
        Xoshiro256 rng(seed_, epoch_);
        for (auto& v : order) v = static_cast<std::size_t>(rng.next_below(n_));
        break;
      }
    }
    ++epoch_;
    return order;
  }

  std::uint64_t epochs_emitted() const { return epoch_; }
  const SchemeSpec& spec() const { return spec_; }
  std::size_t n() const { return n_; }
  std::uint64_t seed() const { return seed_; }

 private:
  SchemeSpec spec_;
  std::size_t n_;
  std::uint64_t seed_;
  std::uint64_t epoch_ = 0;
};

// All n! permutations of 0..n-1 in lexicographic order. Guarded at n <= 8.
inline std::vector<std::vector<std::size_t>> enumerate_permutations(std::size_t n) {
  require(n >= 1 && n <= 8, "enumerate_permutations: n must be in [1, 8]");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::size_t count = 1;
  for (std::size_t k = 2; k <= n; ++k) count *= k;

  std::vector<std::vector<std::size_t>> all;
  all.reserve(count);
  do {
    all.push_back(perm);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return all;
}

}  // namespace sgdlab

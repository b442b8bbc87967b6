#pragma once

#include <cstdint>
#include <random>

namespace coral {

// Labels for the counter-based seed derivation. Every consumer derives its
// own generator from (root seed, stream, a, b), so adding or removing draws
// in one place never shifts the sequence seen by another. This is what makes
// split/resumed runs and per-chain parallel sampling reproduce bit-for-bit.
enum class Stream : std::uint64_t {
  kDataGen = 1,
  kSubsample = 2,
  kInit = 3,
  kBatch = 4,
  kTimestep = 5,
  kNoise = 6,
  kLabelMask = 7,
  kSampler = 8,
  kLatentNoise = 9,
  kKmeans = 10,
  kTest = 99,
};

std::uint64_t splitmix64(std::uint64_t x);

// mt19937_64 with explicit uniform/normal transforms so the produced doubles
// are identical on every platform (std::*_distribution is not portable).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on [0,1) with 53-bit resolution.
  double uniform();

  // Uniform on {0, ..., n-1}; n > 0.
  std::uint64_t below(std::uint64_t n);

  // Standard normal via Box-Muller; the second value of each pair is cached.
  double normal();

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

Rng keyed_rng(std::uint64_t root, Stream stream, std::uint64_t a = 0, std::uint64_t b = 0);

}  // namespace coral

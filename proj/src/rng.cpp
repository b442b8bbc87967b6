#include "coral/rng.hpp"

#include <cmath>

#include "coral/errors.hpp"

namespace coral {

std::uint64_t splitmix64(std::uint64_t x) {
  std::uint64_t z = x + 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::below(std::uint64_t n) {
  require(n > 0, Errc::kConfig, "Rng::below: n must be positive");
  // Lemire's multiply-shift; the tiny bias rejection loop keeps it exact.
  std::uint64_t x = next_u64();
  unsigned __int128 m = static_cast<unsigned __int128>(x) * n;
  auto lo = static_cast<std::uint64_t>(m);
  if (lo < n) {
    const std::uint64_t threshold = -n % n;
    while (lo < threshold) {
      x = next_u64();
      m = static_cast<unsigned __int128>(x) * n;
      lo = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // u1 in (0,1] so the log is finite.
  const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 6.283185307179586476925286766559 * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

Rng keyed_rng(std::uint64_t root, Stream stream, std::uint64_t a, std::uint64_t b) {
  std::uint64_t k = splitmix64(root ^ 0x6A09E667F3BCC908ull);
  k = splitmix64(k ^ static_cast<std::uint64_t>(stream));
  k = splitmix64(k ^ a);
  k = splitmix64(k ^ b);
  return Rng(k);
}

}  // namespace coral

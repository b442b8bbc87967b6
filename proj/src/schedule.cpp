#include "coral/schedule.hpp"

#include <cmath>
#include <string>

#include "coral/errors.hpp"

namespace coral {

double NoiseSchedule::beta_at(int t) const {
  require(t >= 1 && t <= T, Errc::kConfig,
          "beta_at: t = " + std::to_string(t) + " outside 1.." + std::to_string(T));
  return beta[static_cast<std::size_t>(t)];
}

double NoiseSchedule::alpha_bar_at(int t) const {
  require(t >= 0 && t <= T, Errc::kConfig,
          "alpha_bar_at: t = " + std::to_string(t) + " outside 0.." + std::to_string(T));
  return alpha_bar[static_cast<std::size_t>(t)];
}

NoiseSchedule make_linear_schedule(int T, double beta_min, double beta_max) {
  require(T >= 1, Errc::kConfig, "make_linear_schedule: T must be >= 1");
  require(beta_min > 0.0 && beta_max < 1.0 && beta_min <= beta_max, Errc::kConfig,
          "make_linear_schedule: need 0 < beta_min <= beta_max < 1");

  NoiseSchedule s;
  s.T = T;
  s.beta.assign(static_cast<std::size_t>(T) + 1, 0.0);
  s.alpha_bar.assign(static_cast<std::size_t>(T) + 1, 1.0);
  double prod = 1.0;
  for (int t = 1; t <= T; ++t) {
    const double frac = (T == 1) ? 0.0 : static_cast<double>(t - 1) / static_cast<double>(T - 1);
    const double b = beta_min + (beta_max - beta_min) * frac;
    s.beta[static_cast<std::size_t>(t)] = b;
    prod *= 1.0 - b;
    s.alpha_bar[static_cast<std::size_t>(t)] = prod;
  }
  return s;
}

double contrastive_weight(const ContrastiveWeightConfig& cfg, int t, int T) {
  require(cfg.tau_r > 0.0, Errc::kConfig, "contrastive_weight: tau_r must be positive");
  require(cfg.w >= 0.0, Errc::kConfig, "contrastive_weight: w must be nonnegative");
  require(T >= 1, Errc::kConfig, "contrastive_weight: T must be >= 1");
  require(t >= 0 && t <= T, Errc::kConfig, "contrastive_weight: t outside 0..T");
  if (t == T) return cfg.w;  // exponent is exactly zero
  const double frac = 1.0 - static_cast<double>(t) / static_cast<double>(T);
  return cfg.w * std::exp(frac / cfg.tau_r);
}

}  // namespace coral

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "coral/dataset.hpp"
#include "coral/denoiser.hpp"
#include "coral/rng.hpp"
#include "coral/schedule.hpp"

namespace coral {

// Fixed reverse-step variance: beta_t, or the posterior variance
// (1 - alpha_bar_{t-1}) / (1 - alpha_bar_t) * beta_t.
enum class SigmaRule { kBeta, kPosterior };

struct SampleConfig {
  double omega = 0.6;  // guidance weight; 0 disables guidance
  std::int64_t n_per_class = 100;
  SigmaRule sigma_rule = SigmaRule::kBeta;
  std::uint64_t seed = 0;
};

// (1 + omega) * eps_cond - omega * eps_uncond.
std::vector<double> cfg_epsilon(std::span<const double> eps_cond,
                                std::span<const double> eps_uncond, double omega);

// One ancestral chain from x_T ~ N(0, I) down to x_0 for class y.
std::vector<double> ddpm_sample(const DenoiserModel& model, const NoiseSchedule& schedule, int y,
                                const SampleConfig& cfg, Rng& rng);

// n_per_class chains per class, labels attached. Chains are keyed by
// (seed, class, chain) so the output is independent of evaluation order.
LabeledDataset sample_per_class(const DenoiserModel& model, const NoiseSchedule& schedule,
                                const SampleConfig& cfg);

}  // namespace coral

#pragma once

#include <span>
#include <vector>

#include "coral/rng.hpp"
#include "coral/schedule.hpp"

namespace coral {

// Closed-form forward marginal: x_t = sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) eps.
// Deterministic given eps; t = 0 returns x0 unchanged.
std::vector<double> q_sample(std::span<const double> x0, int t, std::span<const double> eps,
                             const NoiseSchedule& schedule);

// i.i.d. uniform draws over {1..T}.
std::vector<int> sample_timesteps(int batch, int T, Rng& rng);

}  // namespace coral

#pragma once

#include <vector>

namespace coral {

// Diffusion variance schedule. beta is 1-indexed (beta[0] unused); alpha_bar
// is stored for t = 0..T with alpha_bar[0] = 1 so the t = 0 marginal is the
// identity. Immutable after construction.
struct NoiseSchedule {
  int T = 0;
  std::vector<double> beta;       // size T+1, beta[t] for t = 1..T
  std::vector<double> alpha_bar;  // size T+1, alpha_bar[t] for t = 0..T

  double beta_at(int t) const;
  double alpha_at(int t) const { return 1.0 - beta_at(t); }
  double alpha_bar_at(int t) const;
};

// Linear beta ramp from beta_min at t=1 to beta_max at t=T.
NoiseSchedule make_linear_schedule(int T, double beta_min, double beta_max);

struct ContrastiveWeightConfig {
  double w = 0.01;
  double tau_r = 0.8;
};

// lambda(t) = w * exp((1 - t/T) / tau_r), defined for t = 0..T. Largest at
// t = 0 where inputs are least noisy, decaying to w at t = T.
double contrastive_weight(const ContrastiveWeightConfig& cfg, int t, int T);

}  // namespace coral

#include "coral/forward_process.hpp"

#include <cmath>
#include <string>

#include "coral/errors.hpp"

namespace coral {

std::vector<double> q_sample(std::span<const double> x0, int t, std::span<const double> eps,
                             const NoiseSchedule& schedule) {
  require(t >= 0 && t <= schedule.T, Errc::kConfig,
          "q_sample: t = " + std::to_string(t) + " outside 0.." + std::to_string(schedule.T));
  require(x0.size() == eps.size(), Errc::kConfig, "q_sample: x0/eps size mismatch");

  const double ab = schedule.alpha_bar_at(t);
  const double signal = std::sqrt(ab);
  const double noise = std::sqrt(1.0 - ab);

  std::vector<double> out(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i) {
    require(std::isfinite(eps[i]), Errc::kNumeric, "q_sample: non-finite eps");
    out[i] = signal * x0[i] + noise * eps[i];
  }
  return out;
}

std::vector<int> sample_timesteps(int batch, int T, Rng& rng) {
  require(batch >= 1, Errc::kConfig, "sample_timesteps: batch must be >= 1");
  require(T >= 1, Errc::kConfig, "sample_timesteps: T must be >= 1");
  std::vector<int> ts(static_cast<std::size_t>(batch));
  for (auto& t : ts) t = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(T)));
  return ts;
}

}  // namespace coral

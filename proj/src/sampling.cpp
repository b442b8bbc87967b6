#include "coral/sampling.hpp"

#include <cmath>
#include <string>

#include "coral/errors.hpp"

namespace coral {

std::vector<double> cfg_epsilon(std::span<const double> eps_cond,
                                std::span<const double> eps_uncond, double omega) {
  require(eps_cond.size() == eps_uncond.size(), Errc::kConfig, "cfg_epsilon: shape mismatch");
  std::vector<double> out(eps_cond.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = (1.0 + omega) * eps_cond[i] - omega * eps_uncond[i];
  }
  return out;
}

std::vector<double> ddpm_sample(const DenoiserModel& model, const NoiseSchedule& schedule, int y,
                                const SampleConfig& cfg, Rng& rng) {
  require(cfg.omega >= 0.0, Errc::kConfig, "ddpm_sample: omega must be nonnegative");
  require(y >= 0 && y < model.arch.num_classes, Errc::kConfig, "ddpm_sample: label out of range");

  const int dim = model.arch.dim;
  std::vector<double> x(static_cast<std::size_t>(dim));
  for (auto& v : x) v = rng.normal();

  for (int t = schedule.T; t >= 1; --t) {
    const auto cond = forward(model, x, t, y, schedule);
    std::vector<double> eps_star;
    if (cfg.omega == 0.0) {
      eps_star = cond.eps_hat;
    } else {
      const auto uncond = forward(model, x, t, std::nullopt, schedule);
      eps_star = cfg_epsilon(cond.eps_hat, uncond.eps_hat, cfg.omega);
    }

    const double beta = schedule.beta_at(t);
    const double alpha = schedule.alpha_at(t);
    const double ab = schedule.alpha_bar_at(t);
    const double mean_scale = 1.0 / std::sqrt(alpha);
    const double eps_scale = beta / std::sqrt(1.0 - ab);

    double sigma = 0.0;
    if (t > 1) {
      double var = beta;
      if (cfg.sigma_rule == SigmaRule::kPosterior) {
        var = (1.0 - schedule.alpha_bar_at(t - 1)) / (1.0 - ab) * beta;
      }
      sigma = std::sqrt(var);
    }

    for (int d = 0; d < dim; ++d) {
      const auto di = static_cast<std::size_t>(d);
      double v = mean_scale * (x[di] - eps_scale * eps_star[di]);
      if (t > 1) v += sigma * rng.normal();
      if (!std::isfinite(v)) {
        fail(Errc::kNumeric, "ddpm_sample: non-finite state at t = " + std::to_string(t));
      }
      x[di] = v;
    }
  }
  return x;
}

LabeledDataset sample_per_class(const DenoiserModel& model, const NoiseSchedule& schedule,
                                const SampleConfig& cfg) {
  require(cfg.n_per_class >= 0, Errc::kConfig, "sample_per_class: negative n_per_class");
  const int C = model.arch.num_classes;
  LabeledDataset out;
  out.dim = model.arch.dim;
  out.num_classes = C;
  out.class_counts.assign(static_cast<std::size_t>(C), cfg.n_per_class);
  out.samples.reserve(static_cast<std::size_t>(C) * static_cast<std::size_t>(cfg.n_per_class) *
                      static_cast<std::size_t>(out.dim));
  for (int c = 0; c < C; ++c) {
    for (std::int64_t j = 0; j < cfg.n_per_class; ++j) {
      auto rng = keyed_rng(cfg.seed, Stream::kSampler, static_cast<std::uint64_t>(c),
                           static_cast<std::uint64_t>(j));
      const auto x = ddpm_sample(model, schedule, c, cfg, rng);
      for (double v : x) out.samples.push_back(static_cast<float>(v));
      out.labels.push_back(static_cast<std::uint16_t>(c));
    }
  }
  return out;
}

}  // namespace coral

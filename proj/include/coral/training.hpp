#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coral/dataset.hpp"
#include "coral/denoiser.hpp"
#include "coral/losses.hpp"
#include "coral/rng.hpp"
#include "coral/schedule.hpp"

namespace coral {

// How the time-dependent weight is applied when timesteps vary per sample:
// the batch mean of lambda(t_i), or a single shared t per batch.
enum class LambdaMode { kPerSampleMean, kSharedT };

struct TrainConfig {
  long long steps = 5000;
  int batch_size = 128;
  double lr = 2e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double p_uncond = 0.1;
  ContrastiveWeightConfig contrastive;  // w = 0 disables the contrastive branch
  double tau_sc = 0.12;
  int schedule_T = 100;
  double beta_min = 1e-4;
  double beta_max = 0.02;
  std::uint64_t seed = 0;
  SupconReduction reduction = SupconReduction::kMeanAnchors;
  LambdaMode lambda_mode = LambdaMode::kPerSampleMean;

  void validate() const;
};

struct TrainRecord {
  long long step = 0;
  double l_diff = 0.0;
  double l_con = 0.0;
  double lambda_bar = 0.0;
  double grad_norm = 0.0;
  double wall_ms = 0.0;  // not written to CSV: outputs must be reproducible
};

struct TrainLog {
  std::vector<TrainRecord> records;
  void write_csv(const std::string& path) const;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long long step = 0;  // completed updates
};

// Standard Adam with bias correction. Aborts on non-finite gradients.
void adam_step(std::span<double> params, std::span<const double> grad, AdamState& state,
               double lr, double beta1, double beta2, double eps);

// Each label is independently replaced by the null token with probability
// p_uncond; originals are kept by the caller for the contrastive loss.
std::vector<std::optional<int>> label_dropout(const std::vector<int>& labels, double p_uncond,
                                              Rng& rng);

struct TrainState {
  DenoiserModel model;
  AdamState adam;
  long long step = 0;
};

TrainState init_train_state(const TrainConfig& cfg, const ArchConfig& arch);

// Runs optimizer steps state.step .. cfg.steps-1, appending one record per
// step. All randomness is keyed by (seed, stream, step, sample), so a run
// split across resumes is identical to an unbroken one.
void train(const TrainConfig& cfg, const LabeledDataset& data, TrainState& state, TrainLog& log);

}  // namespace coral

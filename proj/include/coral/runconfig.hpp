#pragma once

#include <cstdint>
#include <string>

#include "coral/denoiser.hpp"
#include "coral/sampling.hpp"
#include "coral/training.hpp"

namespace coral {

// Union of every experiment knob, loaded from a JSON file of flat dotted
// keys ("train.p_uncond": 0.1). Unknown keys are an error; validation
// failures are reported all at once. Flags override file values.
struct RunConfig {
  std::uint64_t seed = 0;
  std::string data_path;    // "data.path"
  std::string out_dir = ".";  // "out.dir"

  int arch_hidden = 64;
  int arch_bottleneck = 16;
  int arch_proj_dim = 8;
  int arch_time_embed_dim = 32;

  int schedule_T = 100;
  double schedule_beta_min = 1e-4;
  double schedule_beta_max = 0.02;

  long long train_steps = 5000;
  int train_batch_size = 128;
  double train_lr = 2e-4;
  double train_adam_beta1 = 0.9;
  double train_adam_beta2 = 0.999;
  double train_adam_eps = 1e-8;
  double train_p_uncond = 0.1;
  double train_w = 0.01;
  double train_tau_r = 0.8;
  double train_tau_sc = 0.12;
  std::string train_supcon_reduction = "mean";       // mean | sum
  std::string train_lambda_mode = "per_sample_mean";  // per_sample_mean | shared_t

  double sample_omega = 0.6;
  long long sample_per_class = 100;
  std::string sample_sigma_rule = "beta";  // beta | posterior

  int eval_knn_k = 3;
  int eval_purity_k = 10;
  int eval_clusters = 0;   // 0: 20 * num_classes
  int eval_latent_t = -1;  // -1: floor(0.05 * T)
  int eval_prd_angles = 1001;

  TrainConfig train_config() const;
  ArchConfig arch_config(int dim, int num_classes) const;
  SampleConfig sample_config() const;
};

RunConfig load_run_config(const std::string& path);

// Parses a JSON document already in memory (the file loader and tests share
// this path).
RunConfig parse_run_config(const std::string& json_text, const std::string& origin);

// Throws kConfig with every violation listed.
void validate_run_config(const RunConfig& cfg);

}  // namespace coral

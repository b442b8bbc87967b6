#include "coral/runconfig.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <json.hpp>

#include "coral/errors.hpp"

namespace coral {

namespace {

using nlohmann::json;

template <typename T>
T as_number(const json& v, const std::string& key, std::vector<std::string>& errors) {
  if (!v.is_number()) {
    errors.push_back("key '" + key + "' must be a number");
    return T{};
  }
  return v.get<T>();
}

std::string as_string(const json& v, const std::string& key, std::vector<std::string>& errors) {
  if (!v.is_string()) {
    errors.push_back("key '" + key + "' must be a string");
    return {};
  }
  return v.get<std::string>();
}

}  // namespace

TrainConfig RunConfig::train_config() const {
  TrainConfig tc;
  tc.steps = train_steps;
  tc.batch_size = train_batch_size;
  tc.lr = train_lr;
  tc.adam_beta1 = train_adam_beta1;
  tc.adam_beta2 = train_adam_beta2;
  tc.adam_eps = train_adam_eps;
  tc.p_uncond = train_p_uncond;
  tc.contrastive.w = train_w;
  tc.contrastive.tau_r = train_tau_r;
  tc.tau_sc = train_tau_sc;
  tc.schedule_T = schedule_T;
  tc.beta_min = schedule_beta_min;
  tc.beta_max = schedule_beta_max;
  tc.seed = seed;
  tc.reduction = train_supcon_reduction == "sum" ? SupconReduction::kSumAnchors
                                                 : SupconReduction::kMeanAnchors;
  tc.lambda_mode = train_lambda_mode == "shared_t" ? LambdaMode::kSharedT
                                                   : LambdaMode::kPerSampleMean;
  return tc;
}

ArchConfig RunConfig::arch_config(int dim, int num_classes) const {
  ArchConfig a;
  a.dim = dim;
  a.num_classes = num_classes;
  a.hidden = arch_hidden;
  a.bottleneck = arch_bottleneck;
  a.proj_dim = arch_proj_dim;
  a.time_embed_dim = arch_time_embed_dim;
  return a;
}

SampleConfig RunConfig::sample_config() const {
  SampleConfig sc;
  sc.omega = sample_omega;
  sc.n_per_class = sample_per_class;
  sc.sigma_rule = sample_sigma_rule == "posterior" ? SigmaRule::kPosterior : SigmaRule::kBeta;
  sc.seed = seed;
  return sc;
}

RunConfig parse_run_config(const std::string& json_text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(Errc::kConfig, "config " + origin + ": " + e.what());
  }
  require(doc.is_object(), Errc::kConfig, "config " + origin + ": top level must be an object");

  RunConfig cfg;
  std::vector<std::string> errors;

  const std::map<std::string, std::function<void(const json&, const std::string&)>> setters = {
      {"seed", [&](const json& v, const std::string& k) { cfg.seed = as_number<std::uint64_t>(v, k, errors); }},
      {"data.path", [&](const json& v, const std::string& k) { cfg.data_path = as_string(v, k, errors); }},
      {"out.dir", [&](const json& v, const std::string& k) { cfg.out_dir = as_string(v, k, errors); }},
      {"arch.hidden", [&](const json& v, const std::string& k) { cfg.arch_hidden = as_number<int>(v, k, errors); }},
      {"arch.bottleneck", [&](const json& v, const std::string& k) { cfg.arch_bottleneck = as_number<int>(v, k, errors); }},
      {"arch.proj_dim", [&](const json& v, const std::string& k) { cfg.arch_proj_dim = as_number<int>(v, k, errors); }},
      {"arch.time_embed_dim", [&](const json& v, const std::string& k) { cfg.arch_time_embed_dim = as_number<int>(v, k, errors); }},
      {"schedule.T", [&](const json& v, const std::string& k) { cfg.schedule_T = as_number<int>(v, k, errors); }},
      {"schedule.beta_min", [&](const json& v, const std::string& k) { cfg.schedule_beta_min = as_number<double>(v, k, errors); }},
      {"schedule.beta_max", [&](const json& v, const std::string& k) { cfg.schedule_beta_max = as_number<double>(v, k, errors); }},
      {"train.steps", [&](const json& v, const std::string& k) { cfg.train_steps = as_number<long long>(v, k, errors); }},
      {"train.batch_size", [&](const json& v, const std::string& k) { cfg.train_batch_size = as_number<int>(v, k, errors); }},
      {"train.lr", [&](const json& v, const std::string& k) { cfg.train_lr = as_number<double>(v, k, errors); }},
      {"train.adam_beta1", [&](const json& v, const std::string& k) { cfg.train_adam_beta1 = as_number<double>(v, k, errors); }},
      {"train.adam_beta2", [&](const json& v, const std::string& k) { cfg.train_adam_beta2 = as_number<double>(v, k, errors); }},
      {"train.adam_eps", [&](const json& v, const std::string& k) { cfg.train_adam_eps = as_number<double>(v, k, errors); }},
      {"train.p_uncond", [&](const json& v, const std::string& k) { cfg.train_p_uncond = as_number<double>(v, k, errors); }},
      {"train.w", [&](const json& v, const std::string& k) { cfg.train_w = as_number<double>(v, k, errors); }},
      {"train.tau_r", [&](const json& v, const std::string& k) { cfg.train_tau_r = as_number<double>(v, k, errors); }},
      {"train.tau_sc", [&](const json& v, const std::string& k) { cfg.train_tau_sc = as_number<double>(v, k, errors); }},
      {"train.supcon_reduction", [&](const json& v, const std::string& k) { cfg.train_supcon_reduction = as_string(v, k, errors); }},
      {"train.lambda_mode", [&](const json& v, const std::string& k) { cfg.train_lambda_mode = as_string(v, k, errors); }},
      {"sample.omega", [&](const json& v, const std::string& k) { cfg.sample_omega = as_number<double>(v, k, errors); }},
      {"sample.per_class", [&](const json& v, const std::string& k) { cfg.sample_per_class = as_number<long long>(v, k, errors); }},
      {"sample.sigma_rule", [&](const json& v, const std::string& k) { cfg.sample_sigma_rule = as_string(v, k, errors); }},
      {"eval.knn_k", [&](const json& v, const std::string& k) { cfg.eval_knn_k = as_number<int>(v, k, errors); }},
      {"eval.purity_k", [&](const json& v, const std::string& k) { cfg.eval_purity_k = as_number<int>(v, k, errors); }},
      {"eval.clusters", [&](const json& v, const std::string& k) { cfg.eval_clusters = as_number<int>(v, k, errors); }},
      {"eval.latent_t", [&](const json& v, const std::string& k) { cfg.eval_latent_t = as_number<int>(v, k, errors); }},
      {"eval.prd_angles", [&](const json& v, const std::string& k) { cfg.eval_prd_angles = as_number<int>(v, k, errors); }},
  };

  std::vector<std::string> unknown;
  for (const auto& [key, value] : doc.items()) {
    const auto it = setters.find(key);
    if (it == setters.end()) {
      unknown.push_back(key);
    } else {
      it->second(value, key);
    }
  }
  if (!unknown.empty()) {
    std::string msg = "config " + origin + ": unknown keys:";
    for (const auto& k : unknown) msg += " '" + k + "'";
    fail(Errc::kConfig, msg);
  }
  if (!errors.empty()) {
    std::string msg = "config " + origin + ":";
    for (const auto& e : errors) msg += "\n  - " + e;
    fail(Errc::kConfig, msg);
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path);
  require(is.good(), Errc::kConfig, "config: cannot open " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_run_config(ss.str(), path);
}

void validate_run_config(const RunConfig& cfg) {
  std::vector<std::string> errors;
  auto check = [&](bool ok, const std::string& msg) {
    if (!ok) errors.push_back(msg);
  };

  check(cfg.arch_hidden >= 1, "arch.hidden must be >= 1");
  check(cfg.arch_bottleneck >= 1, "arch.bottleneck must be >= 1");
  check(cfg.arch_proj_dim >= 2, "arch.proj_dim must be >= 2");
  check(cfg.arch_time_embed_dim >= 1, "arch.time_embed_dim must be >= 1");
  check(cfg.schedule_T >= 1, "schedule.T must be >= 1");
  check(cfg.schedule_beta_min > 0.0 && cfg.schedule_beta_min < 1.0,
        "schedule.beta_min must be in (0,1)");
  check(cfg.schedule_beta_max > 0.0 && cfg.schedule_beta_max < 1.0,
        "schedule.beta_max must be in (0,1)");
  check(cfg.schedule_beta_min <= cfg.schedule_beta_max,
        "schedule.beta_min must not exceed schedule.beta_max");
  check(cfg.train_steps >= 0, "train.steps must be nonnegative");
  check(cfg.train_batch_size >= 2, "train.batch_size must be >= 2");
  check(cfg.train_lr > 0.0, "train.lr must be positive");
  check(cfg.train_adam_beta1 >= 0.0 && cfg.train_adam_beta1 < 1.0,
        "train.adam_beta1 must be in [0,1)");
  check(cfg.train_adam_beta2 >= 0.0 && cfg.train_adam_beta2 < 1.0,
        "train.adam_beta2 must be in [0,1)");
  check(cfg.train_adam_eps > 0.0, "train.adam_eps must be positive");
  check(cfg.train_p_uncond >= 0.0 && cfg.train_p_uncond < 1.0,
        "train.p_uncond must be in [0,1)");
  check(cfg.train_w >= 0.0, "train.w must be nonnegative");
  check(cfg.train_tau_r > 0.0, "train.tau_r must be positive");
  check(cfg.train_tau_sc > 0.0, "train.tau_sc must be positive");
  check(cfg.train_supcon_reduction == "mean" || cfg.train_supcon_reduction == "sum",
        "train.supcon_reduction must be 'mean' or 'sum'");
  check(cfg.train_lambda_mode == "per_sample_mean" || cfg.train_lambda_mode == "shared_t",
        "train.lambda_mode must be 'per_sample_mean' or 'shared_t'");
  check(cfg.sample_omega >= 0.0, "sample.omega must be nonnegative");
  check(cfg.sample_per_class >= 0, "sample.per_class must be nonnegative");
  check(cfg.sample_sigma_rule == "beta" || cfg.sample_sigma_rule == "posterior",
        "sample.sigma_rule must be 'beta' or 'posterior'");
  check(cfg.eval_knn_k >= 1, "eval.knn_k must be >= 1");
  check(cfg.eval_purity_k >= 1, "eval.purity_k must be >= 1");
  check(cfg.eval_clusters >= 0, "eval.clusters must be nonnegative");
  check(cfg.eval_prd_angles >= 1, "eval.prd_angles must be >= 1");

  if (!errors.empty()) {
    std::string msg = "config validation failed:";
    for (const auto& e : errors) msg += "\n  - " + e;
    fail(Errc::kConfig, msg);
  }
}

}  // namespace coral

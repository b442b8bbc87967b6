// Command-line front end wiring data synthesis, training, sampling, and
// evaluation into reproducible experiments.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "coral/checkpoint.hpp"
#include "coral/dataset.hpp"
#include "coral/errors.hpp"
#include "coral/evaluation.hpp"
#include "coral/runconfig.hpp"
#include "coral/sampling.hpp"
#include "coral/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

int exit_code_for(coral::Errc code) {
  switch (code) {
    case coral::Errc::kConfig: return kExitConfig;
    case coral::Errc::kBadMagic:
    case coral::Errc::kTruncated:
    case coral::Errc::kBadLabel:
    case coral::Errc::kData:
    case coral::Errc::kIo: return kExitData;
    case coral::Errc::kNumeric: return kExitNumeric;
  }
  return kExitNumeric;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::trunc);
  coral::require(os.good(), coral::Errc::kIo, "cannot open " + path);
  os << text;
  os.flush();
  coral::require(os.good(), coral::Errc::kIo, "write failed for " + path);
}

struct MakeDataArgs {
  int classes = 8;
  std::int64_t head_count = 2000;
  double rho = 0.01;
  double radius = 3.0;
  double sigma = 0.5;
  int dim = 2;
  std::uint64_t seed = 0;
  std::string out = "data.ltds";
};

int cmd_make_data(const MakeDataArgs& a) {
  const auto counts = coral::class_counts(a.head_count, a.rho, a.classes);
  auto rng = coral::keyed_rng(a.seed, coral::Stream::kDataGen);
  const auto data = coral::make_ring_gaussians(a.classes, counts, a.radius, a.sigma, a.dim, rng);
  coral::write_dataset(data, a.out);

  json sidecar;
  sidecar["class_counts"] = counts;
  std::int64_t total = 0;
  for (auto c : counts) total += c;
  sidecar["total"] = total;
  write_text(a.out + ".counts.json", sidecar.dump(2) + "\n");

  std::cout << "wrote " << data.size() << " samples (" << a.classes << " classes) to " << a.out
            << "\n";
  return kExitOk;
}

struct TrainArgs {
  std::string config_path;
  std::string data_path;
  std::string out_dir;
  std::string resume_path;
  bool baseline = false;
  std::optional<std::uint64_t> seed;
  std::optional<long long> steps;
  bool has_data = false;
  bool has_out = false;
};

int cmd_train(const TrainArgs& a) {
  coral::RunConfig rc;
  if (!a.config_path.empty()) rc = coral::load_run_config(a.config_path);
  if (a.has_data) rc.data_path = a.data_path;
  if (a.has_out) rc.out_dir = a.out_dir;
  if (a.seed) rc.seed = *a.seed;
  if (a.steps) rc.train_steps = *a.steps;
  if (a.baseline) rc.train_w = 0.0;  // plain conditional DDPM
  coral::validate_run_config(rc);
  coral::require(!rc.data_path.empty(), coral::Errc::kConfig,
                 "train: no dataset given (data.path or --data)");

  const auto data = coral::read_dataset(rc.data_path);
  coral::require(data.size() > 0, coral::Errc::kData, "train: dataset is empty");

  const auto tc = rc.train_config();
  const auto arch = rc.arch_config(data.dim, data.num_classes);

  coral::TrainState state;
  if (!a.resume_path.empty()) {
    auto ck = coral::load_checkpoint(a.resume_path);
    coral::require(ck.version == 2, coral::Errc::kData,
                   "train: resume requires a v2 checkpoint with optimizer state");
    coral::require(ck.model.arch == arch, coral::Errc::kData,
                   "train: checkpoint architecture does not match config/dataset");
    state.model = std::move(ck.model);
    state.adam = std::move(*ck.adam);
    state.step = ck.step;
  } else {
    state = coral::init_train_state(tc, arch);
  }

  coral::TrainLog log;
  coral::train(tc, data, state, log);

  fs::create_directories(rc.out_dir);
  const auto ckpt_path = (fs::path(rc.out_dir) / "checkpoint.bin").string();
  const auto log_path = (fs::path(rc.out_dir) / "train_log.csv").string();
  coral::ScheduleParams sp{tc.schedule_T, tc.beta_min, tc.beta_max};
  coral::save_checkpoint_v2(state, sp, ckpt_path);
  log.write_csv(log_path);

  std::cout << "trained to step " << state.step << "; checkpoint " << ckpt_path << ", log "
            << log_path << "\n";
  return kExitOk;
}

struct SampleArgs {
  std::string checkpoint;
  std::string out = "samples.ltds";
  std::string config_path;
  std::optional<double> omega;
  std::optional<std::int64_t> per_class;
  std::optional<std::string> sigma_rule;
  std::optional<std::uint64_t> seed;
};

int cmd_sample(const SampleArgs& a) {
  coral::RunConfig rc;
  if (!a.config_path.empty()) rc = coral::load_run_config(a.config_path);
  if (a.omega) rc.sample_omega = *a.omega;
  if (a.per_class) rc.sample_per_class = *a.per_class;
  if (a.sigma_rule) rc.sample_sigma_rule = *a.sigma_rule;
  if (a.seed) rc.seed = *a.seed;
  coral::validate_run_config(rc);

  auto ck = coral::load_checkpoint(a.checkpoint);
  // A training checkpoint carries the schedule it was trained with.
  if (ck.schedule) {
    rc.schedule_T = ck.schedule->T;
    rc.schedule_beta_min = ck.schedule->beta_min;
    rc.schedule_beta_max = ck.schedule->beta_max;
  }
  const auto schedule =
      coral::make_linear_schedule(rc.schedule_T, rc.schedule_beta_min, rc.schedule_beta_max);

  const auto out = coral::sample_per_class(ck.model, schedule, rc.sample_config());
  coral::write_dataset(out, a.out);
  std::cout << "wrote " << out.size() << " generated samples to " << a.out << "\n";
  return kExitOk;
}

struct EvalArgs {
  std::string real_path;
  std::string gen_path;
  std::string checkpoint;
  std::string out = "eval_report.json";
  std::string latents_out = "latents.csv";
  std::string config_path;
  std::optional<int> knn_k;
  std::optional<int> clusters;
  std::optional<int> purity_k;
  std::optional<int> latent_t;
  std::optional<std::uint64_t> seed;
};

json optional_to_json(const std::optional<double>& v) {
  if (v) return *v;
  return nullptr;
}

int cmd_eval(const EvalArgs& a) {
  coral::RunConfig rc;
  if (!a.config_path.empty()) rc = coral::load_run_config(a.config_path);
  if (a.knn_k) rc.eval_knn_k = *a.knn_k;
  if (a.clusters) rc.eval_clusters = *a.clusters;
  if (a.purity_k) rc.eval_purity_k = *a.purity_k;
  if (a.latent_t) rc.eval_latent_t = *a.latent_t;
  if (a.seed) rc.seed = *a.seed;
  coral::validate_run_config(rc);

  const auto real = coral::read_dataset(a.real_path);
  const auto gen = coral::read_dataset(a.gen_path);
  coral::require(real.dim == gen.dim, coral::Errc::kData,
                 "eval: real and generated sets have different dimensions");
  coral::require(real.num_classes == gen.num_classes, coral::Errc::kData,
                 "eval: real and generated sets have different class counts");
  coral::require(real.size() >= 2 && gen.size() >= 2, coral::Errc::kData,
                 "eval: need at least two samples per set");

  const auto real_fs = coral::features_from_dataset(real);
  const auto gen_fs = coral::features_from_dataset(gen);

  coral::EvalReport rep;
  rep.frechet = coral::frechet_distance(coral::fit_gaussian(real_fs), coral::fit_gaussian(gen_fs));
  rep.per_class_frechet = coral::per_class_frechet(real_fs, gen_fs, real.num_classes);

  const int clusters = rc.eval_clusters > 0 ? rc.eval_clusters : 20 * real.num_classes;
  coral::require(clusters <= real_fs.n + gen_fs.n, coral::Errc::kConfig,
                 "eval: clusters (" + std::to_string(clusters) + ") exceed combined sample count (" +
                     std::to_string(real_fs.n + gen_fs.n) + ")");
  std::tie(rep.f8, rep.f_inv8) =
      coral::prd_f_scores(real_fs, gen_fs, clusters, rc.seed, rc.eval_prd_angles);

  std::tie(rep.improved_precision, rep.improved_recall) =
      coral::improved_precision_recall(real_fs, gen_fs, rc.eval_knn_k);

  {
    const auto probe = coral::train_probe(real_fs, real.num_classes);
    const auto post = coral::probe_posteriors(probe, gen_fs);
    rep.classifier_score = coral::classifier_score(post, gen_fs.n, real.num_classes);
  }

  if (!a.checkpoint.empty()) {
    auto ck = coral::load_checkpoint(a.checkpoint);
    coral::require(ck.model.arch.dim == real.dim, coral::Errc::kData,
                   "eval: checkpoint dim does not match the real dataset");
    coral::require(ck.model.arch.num_classes == real.num_classes, coral::Errc::kData,
                   "eval: checkpoint class count does not match the real dataset");
    if (ck.schedule) {
      rc.schedule_T = ck.schedule->T;
      rc.schedule_beta_min = ck.schedule->beta_min;
      rc.schedule_beta_max = ck.schedule->beta_max;
    }
    const auto schedule =
        coral::make_linear_schedule(rc.schedule_T, rc.schedule_beta_min, rc.schedule_beta_max);
    const int t = rc.eval_latent_t >= 0 ? rc.eval_latent_t
                                        : static_cast<int>(0.05 * rc.schedule_T);
    auto rng = coral::keyed_rng(rc.seed, coral::Stream::kLatentNoise);
    const auto latents = coral::extract_latents(ck.model, real, t, schedule, rng);
    const auto sep = coral::latent_separation(latents, rc.eval_purity_k);
    rep.latent_knn_purity = sep.purity;
    rep.silhouette = sep.silhouette;
    coral::write_features_csv(latents, a.latents_out);
  }

  json doc;
  doc["frechet"] = rep.frechet;
  doc["per_class_frechet"] = json::array();
  for (const auto& v : rep.per_class_frechet) doc["per_class_frechet"].push_back(optional_to_json(v));
  doc["classifier_score"] = rep.classifier_score;
  doc["f8"] = rep.f8;
  doc["f_inv8"] = rep.f_inv8;
  doc["improved_precision"] = rep.improved_precision;
  doc["improved_recall"] = rep.improved_recall;
  doc["latent_knn_purity"] = rep.latent_knn_purity;
  doc["silhouette"] = optional_to_json(rep.silhouette);
  write_text(a.out, doc.dump(2) + "\n");

  std::cout << "wrote report to " << a.out << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coral: contrastive latent regularization lab for long-tailed diffusion"};
  app.require_subcommand(1);

  MakeDataArgs md;
  auto* mk = app.add_subcommand("make-data", "Synthesize a long-tailed ring-of-Gaussians dataset");
  mk->add_option("--classes", md.classes, "Number of classes")->capture_default_str();
  mk->add_option("--head-count", md.head_count, "Samples in the head class")->capture_default_str();
  mk->add_option("--rho", md.rho, "Imbalance ratio in (0,1]")->capture_default_str();
  mk->add_option("--radius", md.radius, "Ring radius of the class centers")->capture_default_str();
  mk->add_option("--sigma", md.sigma, "Per-class Gaussian std")->capture_default_str();
  mk->add_option("--dim", md.dim, "Sample dimensionality (>= 2)")->capture_default_str();
  mk->add_option("--seed", md.seed, "Root seed")->capture_default_str();
  mk->add_option("--out", md.out, "Output LTDS1 path")->capture_default_str();

  TrainArgs ta;
  auto* tr = app.add_subcommand("train", "Train a denoiser (contrastive regularization on by default)");
  tr->add_option("--config", ta.config_path, "JSON config with flat dotted keys");
  auto* opt_data = tr->add_option("--data", ta.data_path, "Training dataset (LTDS1); overrides data.path");
  auto* opt_out = tr->add_option("--out", ta.out_dir, "Output directory; overrides out.dir");
  tr->add_option("--resume", ta.resume_path, "Continue from a v2 checkpoint");
  tr->add_flag("--baseline", ta.baseline, "Force w = 0 (plain conditional DDPM)");
  std::uint64_t ta_seed = 0;
  long long ta_steps = 0;
  auto* opt_seed = tr->add_option("--seed", ta_seed, "Root seed; overrides config");
  auto* opt_steps = tr->add_option("--steps", ta_steps, "Total optimizer steps; overrides config");

  SampleArgs sa;
  auto* sm = app.add_subcommand("sample", "Generate class-conditional samples with CFG");
  sm->add_option("--checkpoint", sa.checkpoint, "Model checkpoint")->required();
  double sa_omega = 0.6;
  std::int64_t sa_per_class = 100;
  std::string sa_sigma_rule = "beta";
  std::uint64_t sa_seed = 0;
  auto* opt_omega = sm->add_option("--omega", sa_omega, "Guidance weight")->capture_default_str();
  auto* opt_pc = sm->add_option("--per-class", sa_per_class, "Samples per class")->capture_default_str();
  auto* opt_sr = sm->add_option("--sigma-rule", sa_sigma_rule, "Reverse-step variance: beta | posterior")
                     ->capture_default_str();
  auto* opt_sseed = sm->add_option("--seed", sa_seed, "Root seed")->capture_default_str();
  sm->add_option("--out", sa.out, "Output LTDS1 path")->capture_default_str();
  sm->add_option("--config", sa.config_path, "JSON config with flat dotted keys");

  EvalArgs ea;
  auto* ev = app.add_subcommand("eval", "Score a generated set against a real set");
  ev->add_option("--real", ea.real_path, "Real dataset (LTDS1)")->required();
  ev->add_option("--gen", ea.gen_path, "Generated dataset (LTDS1)")->required();
  ev->add_option("--checkpoint", ea.checkpoint, "Checkpoint for latent diagnostics");
  int ea_knn_k = 3, ea_clusters = 0, ea_purity_k = 10, ea_latent_t = -1;
  std::uint64_t ea_seed = 0;
  auto* opt_knn = ev->add_option("--knn-k", ea_knn_k, "k for improved precision/recall")->capture_default_str();
  auto* opt_cl = ev->add_option("--clusters", ea_clusters, "PRD clusters (0: 20x classes)")->capture_default_str();
  auto* opt_pk = ev->add_option("--purity-k", ea_purity_k, "k for latent kNN purity")->capture_default_str();
  auto* opt_lt = ev->add_option("--latent-t", ea_latent_t, "Noise level for latent extraction (-1: 5% of T)")
                     ->capture_default_str();
  auto* opt_eseed = ev->add_option("--seed", ea_seed, "Root seed")->capture_default_str();
  ev->add_option("--out", ea.out, "Report JSON path")->capture_default_str();
  ev->add_option("--latents-out", ea.latents_out, "Latent FeatureSet CSV path")->capture_default_str();
  ev->add_option("--config", ea.config_path, "JSON config with flat dotted keys");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (mk->parsed()) return cmd_make_data(md);
    if (tr->parsed()) {
      ta.has_data = opt_data->count() > 0;
      ta.has_out = opt_out->count() > 0;
      if (opt_seed->count() > 0) ta.seed = ta_seed;
      if (opt_steps->count() > 0) ta.steps = ta_steps;
      return cmd_train(ta);
    }
    if (sm->parsed()) {
      if (opt_omega->count() > 0) sa.omega = sa_omega;
      if (opt_pc->count() > 0) sa.per_class = sa_per_class;
      if (opt_sr->count() > 0) sa.sigma_rule = sa_sigma_rule;
      if (opt_sseed->count() > 0) sa.seed = sa_seed;
      return cmd_sample(sa);
    }
    if (ev->parsed()) {
      if (opt_knn->count() > 0) ea.knn_k = ea_knn_k;
      if (opt_cl->count() > 0) ea.clusters = ea_clusters;
      if (opt_pk->count() > 0) ea.purity_k = ea_purity_k;
      if (opt_lt->count() > 0) ea.latent_t = ea_latent_t;
      if (opt_eseed->count() > 0) ea.seed = ea_seed;
      return cmd_eval(ea);
    }
  } catch (const coral::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitConfig;
}

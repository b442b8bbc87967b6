#include "coral/training.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include "coral/errors.hpp"
#include "coral/forward_process.hpp"
#include "coral/objective.hpp"

namespace coral {

void TrainConfig::validate() const {
  require(steps >= 0, Errc::kConfig, "TrainConfig: steps must be nonnegative");
  require(batch_size >= 2, Errc::kConfig, "TrainConfig: batch_size must be >= 2");
  require(lr > 0.0, Errc::kConfig, "TrainConfig: lr must be positive");
  require(adam_beta1 >= 0.0 && adam_beta1 < 1.0, Errc::kConfig, "TrainConfig: beta1 in [0,1)");
  require(adam_beta2 >= 0.0 && adam_beta2 < 1.0, Errc::kConfig, "TrainConfig: beta2 in [0,1)");
  require(adam_eps > 0.0, Errc::kConfig, "TrainConfig: adam_eps must be positive");
  require(p_uncond >= 0.0 && p_uncond < 1.0, Errc::kConfig, "TrainConfig: p_uncond in [0,1)");
  require(contrastive.w >= 0.0, Errc::kConfig, "TrainConfig: w must be nonnegative");
  require(contrastive.tau_r > 0.0, Errc::kConfig, "TrainConfig: tau_r must be positive");
  require(tau_sc > 0.0, Errc::kConfig, "TrainConfig: tau_sc must be positive");
  require(schedule_T >= 1, Errc::kConfig, "TrainConfig: schedule T must be >= 1");
}

void TrainLog::write_csv(const std::string& path) const {
  std::ofstream os(path, std::ios::trunc);
  require(os.good(), Errc::kIo, "TrainLog: cannot open " + path);
  os << "step,l_diff,l_con,lambda_bar,grad_norm\n";
  char buf[256];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof(buf), "%lld,%.17g,%.17g,%.17g,%.17g\n", r.step, r.l_diff, r.l_con,
                  r.lambda_bar, r.grad_norm);
    os << buf;
  }
  os.flush();
  require(os.good(), Errc::kIo, "TrainLog: write failed for " + path);
}

void adam_step(std::span<double> params, std::span<const double> grad, AdamState& state,
               double lr, double beta1, double beta2, double eps) {
  require(params.size() == grad.size(), Errc::kConfig, "adam_step: shape mismatch");
  if (state.m.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  require(state.m.size() == params.size() && state.v.size() == params.size(), Errc::kConfig,
          "adam_step: state shape mismatch");

  for (double gv : grad) {
    if (!std::isfinite(gv)) {
      fail(Errc::kNumeric,
           "adam_step: non-finite gradient at step " + std::to_string(state.step + 1));
    }
  }

  ++state.step;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double gv = grad[i];
    state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * gv;
    state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * gv * gv;
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

std::vector<std::optional<int>> label_dropout(const std::vector<int>& labels, double p_uncond,
                                              Rng& rng) {
  require(p_uncond >= 0.0 && p_uncond < 1.0, Errc::kConfig, "label_dropout: p_uncond in [0,1)");
  std::vector<std::optional<int>> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (p_uncond > 0.0 && rng.uniform() < p_uncond) {
      out[i] = std::nullopt;
    } else {
      out[i] = labels[i];
    }
  }
  return out;
}

TrainState init_train_state(const TrainConfig& cfg, const ArchConfig& arch) {
  cfg.validate();
  TrainState st;
  auto rng = keyed_rng(cfg.seed, Stream::kInit);
  st.model = init_model(arch, rng);
  st.adam.m.assign(st.model.params.size(), 0.0);
  st.adam.v.assign(st.model.params.size(), 0.0);
  return st;
}

void train(const TrainConfig& cfg, const LabeledDataset& data, TrainState& state, TrainLog& log) {
  cfg.validate();
  require(data.size() > 0, Errc::kConfig, "train: empty dataset");
  require(static_cast<std::int64_t>(cfg.batch_size) <= data.size(), Errc::kConfig,
          "train: batch_size exceeds dataset size");
  require(data.dim == state.model.arch.dim, Errc::kConfig, "train: dataset dim != model dim");
  require(data.num_classes == state.model.arch.num_classes, Errc::kConfig,
          "train: dataset classes != model classes");

  const auto schedule = make_linear_schedule(cfg.schedule_T, cfg.beta_min, cfg.beta_max);
  const bool contrastive_on = cfg.contrastive.w > 0.0;
  const int B = cfg.batch_size;
  const int dim = data.dim;

  std::vector<double> grad(state.model.params.size(), 0.0);

  for (long long step = state.step; step < cfg.steps; ++step) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto ustep = static_cast<std::uint64_t>(step);

    BatchInputs in;
    in.batch = B;
    in.dim = dim;
    in.x_t.resize(static_cast<std::size_t>(B) * static_cast<std::size_t>(dim));
    in.eps_target.resize(in.x_t.size());
    in.y_orig.resize(static_cast<std::size_t>(B));

    // Batch indices, uniform with replacement.
    std::vector<std::int64_t> idx(static_cast<std::size_t>(B));
    {
      auto rng = keyed_rng(cfg.seed, Stream::kBatch, ustep);
      for (auto& i : idx) i = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(data.size())));
    }

    // Timesteps: per sample, or one shared draw per batch.
    {
      auto rng = keyed_rng(cfg.seed, Stream::kTimestep, ustep);
      if (cfg.lambda_mode == LambdaMode::kSharedT) {
        const int t = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.schedule_T)));
        in.t.assign(static_cast<std::size_t>(B), t);
      } else {
        in.t = sample_timesteps(B, cfg.schedule_T, rng);
      }
    }

    // Noise draws and noised inputs.
    for (int i = 0; i < B; ++i) {
      auto rng = keyed_rng(cfg.seed, Stream::kNoise, ustep, static_cast<std::uint64_t>(i));
      const auto row = static_cast<std::size_t>(i) * static_cast<std::size_t>(dim);
      const auto x0 = data.row(idx[static_cast<std::size_t>(i)]);
      for (int d = 0; d < dim; ++d) in.eps_target[row + static_cast<std::size_t>(d)] = rng.normal();
      const auto xt = q_sample(x0, in.t[static_cast<std::size_t>(i)],
                               std::span<const double>(in.eps_target.data() + row,
                                                       static_cast<std::size_t>(dim)),
                               schedule);
      std::copy(xt.begin(), xt.end(), in.x_t.begin() + static_cast<std::ptrdiff_t>(row));
    }

    for (int i = 0; i < B; ++i) {
      in.y_orig[static_cast<std::size_t>(i)] =
          static_cast<int>(data.labels[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])]);
    }

    // CFG label dropout; the contrastive term always sees y_orig.
    if (cfg.p_uncond > 0.0) {
      auto rng = keyed_rng(cfg.seed, Stream::kLabelMask, ustep);
      in.y_cond = label_dropout(in.y_orig, cfg.p_uncond, rng);
    } else {
      in.y_cond.assign(in.y_orig.begin(), in.y_orig.end());
    }

    ObjectiveSpec spec;
    spec.tau_sc = cfg.tau_sc;
    spec.reduction = cfg.reduction;
    double lambda_bar = 0.0;
    if (contrastive_on) {
      spec.objective = Objective::kCoral;
      if (cfg.lambda_mode == LambdaMode::kSharedT) {
        lambda_bar = contrastive_weight(cfg.contrastive, in.t[0], cfg.schedule_T);
      } else {
        double acc = 0.0;
        for (int t : in.t) acc += contrastive_weight(cfg.contrastive, t, cfg.schedule_T);
        lambda_bar = acc / static_cast<double>(B);
      }
      spec.lambda_bar = lambda_bar;
    } else {
      spec.objective = Objective::kDiffusion;
    }

    BatchEval ev;
    batch_gradients(state.model, schedule, in, spec, &ev, grad);
    if (!std::isfinite(ev.total)) {
      fail(Errc::kNumeric, "train: non-finite loss at step " + std::to_string(step));
    }

    double gn = 0.0;
    for (double gv : grad) gn += gv * gv;
    gn = std::sqrt(gn);

    adam_step(state.model.params, grad, state.adam, cfg.lr, cfg.adam_beta1, cfg.adam_beta2,
              cfg.adam_eps);
    state.step = step + 1;

    const auto t1 = std::chrono::steady_clock::now();
    TrainRecord rec;
    rec.step = step;
    rec.l_diff = ev.l_diff;
    rec.l_con = ev.l_con;
    rec.lambda_bar = lambda_bar;
    rec.grad_norm = gn;
    rec.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    log.records.push_back(rec);
  }
}

}  // namespace coral

#include "coral/objective.hpp"

#include <algorithm>
#include <cmath>

#include "coral/errors.hpp"

namespace coral {

namespace {

void validate_inputs(const DenoiserModel& model, const BatchInputs& in) {
  const int B = in.batch;
  require(B >= 1, Errc::kConfig, "batch objective: empty batch");
  require(in.dim == model.arch.dim, Errc::kConfig, "batch objective: dim mismatch");
  const auto n = static_cast<std::size_t>(B) * static_cast<std::size_t>(in.dim);
  require(in.x_t.size() == n && in.eps_target.size() == n, Errc::kConfig,
          "batch objective: x_t/eps shape mismatch");
  require(in.t.size() == static_cast<std::size_t>(B) &&
              in.y_cond.size() == static_cast<std::size_t>(B) &&
              in.y_orig.size() == static_cast<std::size_t>(B),
          Errc::kConfig, "batch objective: per-sample field size mismatch");
}

// Forward passes for the whole batch; fills traces and the flattened
// predictions, returns the diffusion loss.
double run_forward(const DenoiserModel& model, const NoiseSchedule& schedule,
                   const BatchInputs& in, std::vector<ForwardTrace>& traces,
                   std::vector<double>& eps_hat) {
  traces.clear();
  traces.reserve(static_cast<std::size_t>(in.batch));
  eps_hat.resize(in.x_t.size());
  for (int i = 0; i < in.batch; ++i) {
    const auto row = static_cast<std::size_t>(i) * static_cast<std::size_t>(in.dim);
    auto tr = forward(model,
                      std::span<const double>(in.x_t.data() + row, static_cast<std::size_t>(in.dim)),
                      in.t[static_cast<std::size_t>(i)], in.y_cond[static_cast<std::size_t>(i)],
                      schedule);
    std::copy(tr.eps_hat.begin(), tr.eps_hat.end(), eps_hat.begin() + static_cast<std::ptrdiff_t>(row));
    traces.push_back(std::move(tr));
  }
  return diffusion_loss(in.eps_target, eps_hat, in.batch, in.dim);
}

ContrastiveBatch gather_contrastive(const BatchInputs& in, const std::vector<ForwardTrace>& traces,
                                    int proj_dim, double tau_sc) {
  ContrastiveBatch cb;
  cb.batch = in.batch;
  cb.proj_dim = proj_dim;
  cb.tau_sc = tau_sc;
  cb.labels = in.y_orig;
  cb.z.resize(static_cast<std::size_t>(in.batch) * static_cast<std::size_t>(proj_dim));
  for (int i = 0; i < in.batch; ++i) {
    std::copy(traces[static_cast<std::size_t>(i)].z.begin(),
              traces[static_cast<std::size_t>(i)].z.end(),
              cb.z.begin() + static_cast<std::size_t>(i) * static_cast<std::size_t>(proj_dim));
  }
  return cb;
}

double assemble_total(Objective objective, double l_diff, double l_con, double lambda_bar) {
  switch (objective) {
    case Objective::kDiffusion: return l_diff;
    case Objective::kSupCon: return l_con;
    case Objective::kCoral: return coral_loss(l_diff, l_con, lambda_bar);
  }
  return l_diff;
}

}  // namespace

BatchEval eval_batch(const DenoiserModel& model, const NoiseSchedule& schedule,
                     const BatchInputs& in, const ObjectiveSpec& spec) {
  validate_inputs(model, in);
  BatchEval ev;
  std::vector<double> eps_hat;
  ev.l_diff = run_forward(model, schedule, in, ev.traces, eps_hat);
  if (spec.objective != Objective::kDiffusion) {
    const auto sc = supcon_loss(gather_contrastive(in, ev.traces, model.arch.proj_dim, spec.tau_sc),
                                spec.reduction);
    ev.l_con = sc.value;
    ev.no_positive_pairs = sc.no_positive_pairs;
  }
  ev.total = assemble_total(spec.objective, ev.l_diff, ev.l_con, spec.lambda_bar);
  return ev;
}

void batch_gradients(const DenoiserModel& model, const NoiseSchedule& schedule,
                     const BatchInputs& in, const ObjectiveSpec& spec, BatchEval* out_eval,
                     std::span<double> grad) {
  validate_inputs(model, in);
  require(grad.size() == model.layout().total(), Errc::kConfig,
          "batch_gradients: grad size mismatch");
  std::fill(grad.begin(), grad.end(), 0.0);

  BatchEval ev;
  std::vector<double> eps_hat;
  ev.l_diff = run_forward(model, schedule, in, ev.traces, eps_hat);

  const int B = in.batch;
  const int dim = in.dim;
  const int p = model.arch.proj_dim;

  // Contrastive value and z-gradient, scaled by the objective weight.
  std::vector<double> dz;
  bool use_z = false;
  if (spec.objective != Objective::kDiffusion) {
    auto sc = supcon_loss(gather_contrastive(in, ev.traces, p, spec.tau_sc), spec.reduction);
    ev.l_con = sc.value;
    ev.no_positive_pairs = sc.no_positive_pairs;
    const double wz = spec.objective == Objective::kSupCon ? 1.0 : spec.lambda_bar;
    dz = std::move(sc.dz);
    for (auto& g : dz) g *= wz;
    use_z = true;
  }
  ev.total = assemble_total(spec.objective, ev.l_diff, ev.l_con, spec.lambda_bar);

  std::vector<double> d_eps(static_cast<std::size_t>(dim), 0.0);
  const double diff_scale = spec.objective == Objective::kSupCon ? 0.0 : 2.0 / static_cast<double>(B);
  for (int i = 0; i < B; ++i) {
    const auto row = static_cast<std::size_t>(i) * static_cast<std::size_t>(dim);
    const auto& tr = ev.traces[static_cast<std::size_t>(i)];
    for (int d = 0; d < dim; ++d) {
      d_eps[static_cast<std::size_t>(d)] =
          diff_scale * (tr.eps_hat[static_cast<std::size_t>(d)] - in.eps_target[row + static_cast<std::size_t>(d)]);
    }
    std::span<const double> dzi;
    if (use_z) {
      dzi = std::span<const double>(dz.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(p),
                                    static_cast<std::size_t>(p));
    }
    backward(model, tr, d_eps, dzi, grad);
  }

  if (out_eval) *out_eval = std::move(ev);
}

}  // namespace coral

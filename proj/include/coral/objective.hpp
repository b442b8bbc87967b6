#pragma once

#include <optional>
#include <span>
#include <vector>

#include "coral/denoiser.hpp"
#include "coral/losses.hpp"
#include "coral/schedule.hpp"

namespace coral {

enum class Objective { kDiffusion, kSupCon, kCoral };

// One training mini-batch, fully materialized. y_cond carries the possibly
// masked labels fed to the denoiser; y_orig the unmasked labels consumed by
// the contrastive term.
struct BatchInputs {
  int batch = 0;
  int dim = 0;
  std::vector<double> x_t;         // [batch x dim]
  std::vector<double> eps_target;  // [batch x dim]
  std::vector<int> t;
  std::vector<std::optional<int>> y_cond;
  std::vector<int> y_orig;
};

struct ObjectiveSpec {
  Objective objective = Objective::kCoral;
  double tau_sc = 0.12;
  SupconReduction reduction = SupconReduction::kMeanAnchors;
  double lambda_bar = 0.0;  // weight applied to the contrastive term (kCoral)
};

struct BatchEval {
  double total = 0.0;
  double l_diff = 0.0;
  double l_con = 0.0;
  bool no_positive_pairs = false;
  std::vector<ForwardTrace> traces;
};

// Forward passes plus loss assembly for a whole batch.
BatchEval eval_batch(const DenoiserModel& model, const NoiseSchedule& schedule,
                     const BatchInputs& in, const ObjectiveSpec& spec);

// Exact reverse-mode gradients of the batch objective for every parameter.
// grad is overwritten (size param_count). When out_eval is non-null the
// forward evaluation is stored there.
void batch_gradients(const DenoiserModel& model, const NoiseSchedule& schedule,
                     const BatchInputs& in, const ObjectiveSpec& spec, BatchEval* out_eval,
                     std::span<double> grad);

}  // namespace coral

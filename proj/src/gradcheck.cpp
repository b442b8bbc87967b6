#include "coral/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace coral {

GradCheckReport grad_check(const DenoiserModel& model, const NoiseSchedule& schedule,
                           const BatchInputs& in, const ObjectiveSpec& spec, double fd_step,
                           double tolerance) {
  std::vector<double> analytic(model.layout().total(), 0.0);
  batch_gradients(model, schedule, in, spec, nullptr, analytic);

  DenoiserModel probe = model;
  GradCheckReport rep;
  rep.tolerance = tolerance;

  for (const auto& ti : model.layout().all()) {
    double worst = 0.0;
    for (std::size_t k = 0; k < ti.count(); ++k) {
      const std::size_t idx = ti.offset + k;
      const double saved = probe.params[idx];

      probe.params[idx] = saved + fd_step;
      const double up = eval_batch(probe, schedule, in, spec).total;
      probe.params[idx] = saved - fd_step;
      const double down = eval_batch(probe, schedule, in, spec).total;
      probe.params[idx] = saved;

      const double fd = (up - down) / (2.0 * fd_step);
      const double a = analytic[idx];
      const double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-6});
      worst = std::max(worst, rel);
    }
    rep.per_tensor.emplace_back(ti.name, worst);
    rep.max_rel_error = std::max(rep.max_rel_error, worst);
  }
  rep.passed = rep.max_rel_error < tolerance;
  return rep;
}

}  // namespace coral

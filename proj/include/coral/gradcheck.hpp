#pragma once

#include <string>
#include <utility>
#include <vector>

#include "coral/objective.hpp"

namespace coral {

struct GradCheckReport {
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  // Worst relative error per tensor, in layout order.
  std::vector<std::pair<std::string, double>> per_tensor;
};

// Compares analytic batch gradients against central finite differences of
// the same objective, parameter by parameter.
GradCheckReport grad_check(const DenoiserModel& model, const NoiseSchedule& schedule,
                           const BatchInputs& in, const ObjectiveSpec& spec,
                           double fd_step = 1e-5, double tolerance = 1e-4);

}  // namespace coral

#pragma once

#include <optional>
#include <string>

#include "coral/denoiser.hpp"
#include "coral/training.hpp"

namespace coral {

// Checkpoint files start with a format-version byte followed by the
// serialized ArchConfig, then the parameter blob:
//   v1: little-endian f32 parameters only (interchange form)
//   v2: schedule params, completed step count, and f64 parameters plus Adam
//       moments, so a resumed run continues bit-for-bit.
struct ScheduleParams {
  int T = 100;
  double beta_min = 1e-4;
  double beta_max = 0.02;
};

struct LoadedCheckpoint {
  int version = 0;
  DenoiserModel model;
  std::optional<ScheduleParams> schedule;  // v2 only
  std::optional<AdamState> adam;           // v2 only
  long long step = 0;                      // v2 only
};

void save_checkpoint_v1(const DenoiserModel& model, const std::string& path);
void save_checkpoint_v2(const TrainState& state, const ScheduleParams& schedule,
                        const std::string& path);
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace coral

#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coral/rng.hpp"
#include "coral/schedule.hpp"

namespace coral {

struct ArchConfig {
  int dim = 2;
  int hidden = 64;
  int bottleneck = 16;
  int proj_dim = 8;
  int time_embed_dim = 32;
  int num_classes = 2;

  void validate() const;
  bool operator==(const ArchConfig&) const = default;
};

// Tensors inside the flat parameter vector, in storage order.
enum class Tensor : int {
  kEnc1W,       // hidden x dim
  kEnc1B,       // hidden
  kTimeW,       // hidden x time_embed_dim
  kTimeB,       // hidden
  kClassEmbed,  // (num_classes + 1) x hidden, row num_classes = null label
  kEnc2W,       // hidden x hidden
  kEnc2B,       // hidden
  kBnW,         // bottleneck x hidden
  kBnB,         // bottleneck
  kProjW,       // proj_dim x bottleneck
  kProjB,       // proj_dim
  kDec1W,       // hidden x bottleneck
  kDec1B,       // hidden
  kDec2W,       // dim x 2*hidden (decoder hidden concatenated with the skip)
  kDec2B,       // dim
};
constexpr int kTensorCount = 15;

struct TensorInfo {
  const char* name;
  std::size_t offset;
  int rows;
  int cols;    // 1 for biases
  int fan_in;  // inputs per output unit; governs the init scale
  std::size_t count() const { return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols); }
};

// Parameter bookkeeping is a pure function of the architecture.
class ParamLayout {
 public:
  explicit ParamLayout(const ArchConfig& arch);
  const TensorInfo& info(Tensor t) const { return infos_[static_cast<std::size_t>(t)]; }
  std::size_t total() const { return total_; }
  const std::array<TensorInfo, kTensorCount>& all() const { return infos_; }

 private:
  std::array<TensorInfo, kTensorCount> infos_;
  std::size_t total_ = 0;
};

// MLP stand-in for the denoising U-Net: encoder -> bottleneck -> decoder with
// one skip connection, conditioned on sinusoidal time features and a learned
// class embedding (row C reserved for the null label), plus a projection head
// mapping the bottleneck to unit-norm embeddings. x*sigmoid(x) throughout.
struct DenoiserModel {
  ArchConfig arch;
  std::vector<double> params;

  std::span<double> tensor(Tensor t);
  std::span<const double> tensor(Tensor t) const;
  const ParamLayout& layout() const;

 private:
  mutable std::optional<ParamLayout> layout_;
};

// Per-sample activations cached for backprop.
struct ForwardTrace {
  int t = 0;
  int embed_row = 0;
  std::vector<double> x;          // dim
  std::vector<double> time_feat;  // time_embed_dim
  std::vector<double> a1, h1;     // hidden
  std::vector<double> a2, h2;     // hidden (skip source)
  std::vector<double> a3, hb;     // bottleneck
  std::vector<double> u, z;       // proj_dim; z = u / |u|
  double u_norm = 0.0;
  std::vector<double> a4, d1;     // hidden
  std::vector<double> eps_hat;    // dim
};

// Weights ~ N(0, 1/fan_in), biases zero; deterministic given the generator.
DenoiserModel init_model(const ArchConfig& arch, Rng& rng);

std::size_t param_count(const ArchConfig& arch);

// Sinusoidal features of the integer timestep, width time_embed_dim.
std::vector<double> time_features(int t, int width);

// y = nullopt selects the null-label embedding row. t in 0..T (t = 0 is the
// clean-input level used by latent extraction; training draws t from 1..T).
ForwardTrace forward(const DenoiserModel& model, std::span<const double> x_t, int t,
                     std::optional<int> y, const NoiseSchedule& schedule);

// Accumulates exact parameter gradients for one sample into grad (size
// param_count). d_eps = dL/d eps_hat; d_z = dL/dz, or empty to skip the
// projection branch entirely.
void backward(const DenoiserModel& model, const ForwardTrace& trace,
              std::span<const double> d_eps, std::span<const double> d_z, std::span<double> grad);

}  // namespace coral

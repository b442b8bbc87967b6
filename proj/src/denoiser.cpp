#include "coral/denoiser.hpp"

#include <cmath>
#include <string>

#include "coral/errors.hpp"

namespace coral {

namespace {

double silu(double x) { return x / (1.0 + std::exp(-x)); }

double silu_grad(double x) {
  const double s = 1.0 / (1.0 + std::exp(-x));
  return s * (1.0 + x * (1.0 - s));
}

// out[r] = sum_c W[r,c] * x[c] + b[r]
void affine(std::span<const double> W, std::span<const double> b, std::span<const double> x,
            std::span<double> out) {
  const std::size_t rows = out.size();
  const std::size_t cols = x.size();
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = b[r];
    const double* wr = W.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) acc += wr[c] * x[c];
    out[r] = acc;
  }
}

// grad_W += d_out x^T, grad_b += d_out, d_x += W^T d_out
void affine_backward(std::span<const double> W, std::span<const double> d_out,
                     std::span<const double> x, std::span<double> grad_W,
                     std::span<double> grad_b, std::span<double> d_x) {
  const std::size_t rows = d_out.size();
  const std::size_t cols = x.size();
  for (std::size_t r = 0; r < rows; ++r) {
    const double g = d_out[r];
    grad_b[r] += g;
    double* gw = grad_W.data() + r * cols;
    const double* wr = W.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) {
      gw[c] += g * x[c];
      if (!d_x.empty()) d_x[c] += wr[c] * g;
    }
  }
}

void check_finite(std::span<const double> v, const char* layer) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      fail(Errc::kNumeric, std::string("forward: non-finite activation in layer ") + layer);
    }
  }
}

}  // namespace

void ArchConfig::validate() const {
  require(dim >= 1, Errc::kConfig, "ArchConfig: dim must be >= 1");
  require(hidden >= 1, Errc::kConfig, "ArchConfig: hidden must be >= 1");
  require(bottleneck >= 1, Errc::kConfig, "ArchConfig: bottleneck must be >= 1");
  require(proj_dim >= 2, Errc::kConfig, "ArchConfig: proj_dim must be >= 2");
  require(time_embed_dim >= 1, Errc::kConfig, "ArchConfig: time_embed_dim must be >= 1");
  require(num_classes >= 1, Errc::kConfig, "ArchConfig: num_classes must be >= 1");
}

ParamLayout::ParamLayout(const ArchConfig& a) {
  a.validate();
  const int h = a.hidden, b = a.bottleneck, p = a.proj_dim, te = a.time_embed_dim;
  int i = 0;
  std::size_t off = 0;
  auto add = [&](const char* name, int rows, int cols, int fan_in) {
    infos_[static_cast<std::size_t>(i)] = TensorInfo{name, off, rows, cols, fan_in};
    off += static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
    ++i;
  };
  add("enc1.W", h, a.dim, a.dim);
  add("enc1.b", h, 1, 0);
  add("time.W", h, te, te);
  add("time.b", h, 1, 0);
  add("class_embed", a.num_classes + 1, h, 1);  // one-hot input: fan_in 1
  add("enc2.W", h, h, h);
  add("enc2.b", h, 1, 0);
  add("bottleneck.W", b, h, h);
  add("bottleneck.b", b, 1, 0);
  add("proj.W", p, b, b);
  add("proj.b", p, 1, 0);
  add("dec1.W", h, b, b);
  add("dec1.b", h, 1, 0);
  add("dec2.W", a.dim, 2 * h, 2 * h);
  add("dec2.b", a.dim, 1, 0);
  total_ = off;
}

std::span<double> DenoiserModel::tensor(Tensor t) {
  const auto& ti = layout().info(t);
  return std::span<double>(params.data() + ti.offset, ti.count());
}

std::span<const double> DenoiserModel::tensor(Tensor t) const {
  const auto& ti = layout().info(t);
  return std::span<const double>(params.data() + ti.offset, ti.count());
}

const ParamLayout& DenoiserModel::layout() const {
  if (!layout_) layout_.emplace(arch);
  return *layout_;
}

std::size_t param_count(const ArchConfig& arch) { return ParamLayout(arch).total(); }

DenoiserModel init_model(const ArchConfig& arch, Rng& rng) {
  arch.validate();
  DenoiserModel m;
  m.arch = arch;
  m.params.assign(param_count(arch), 0.0);
  for (const auto& ti : m.layout().all()) {
    if (ti.fan_in == 0) continue;  // biases stay zero
    const double scale = 1.0 / std::sqrt(static_cast<double>(ti.fan_in));
    double* p = m.params.data() + ti.offset;
    for (std::size_t k = 0; k < ti.count(); ++k) p[k] = scale * rng.normal();
  }
  return m;
}

std::vector<double> time_features(int t, int width) {
  std::vector<double> f(static_cast<std::size_t>(width));
  const int npairs = (width + 1) / 2;
  for (int k = 0; k < npairs; ++k) {
    const double expo = npairs > 1 ? static_cast<double>(k) / static_cast<double>(npairs - 1) : 0.0;
    const double freq = std::pow(10000.0, -expo);
    f[static_cast<std::size_t>(2 * k)] = std::sin(freq * static_cast<double>(t));
    if (2 * k + 1 < width) f[static_cast<std::size_t>(2 * k + 1)] = std::cos(freq * static_cast<double>(t));
  }
  return f;
}

ForwardTrace forward(const DenoiserModel& model, std::span<const double> x_t, int t,
                     std::optional<int> y, const NoiseSchedule& schedule) {
  const auto& a = model.arch;
  require(static_cast<int>(x_t.size()) == a.dim, Errc::kConfig, "forward: input size != dim");
  require(t >= 0 && t <= schedule.T, Errc::kConfig,
          "forward: t = " + std::to_string(t) + " outside 0.." + std::to_string(schedule.T));
  if (y) {
    require(*y >= 0 && *y < a.num_classes, Errc::kConfig,
            "forward: class label " + std::to_string(*y) + " >= num_classes");
  }

  ForwardTrace tr;
  tr.t = t;
  tr.embed_row = y ? *y : a.num_classes;
  tr.x.assign(x_t.begin(), x_t.end());
  check_finite(tr.x, "input");
  tr.time_feat = time_features(t, a.time_embed_dim);

  const std::size_t h = static_cast<std::size_t>(a.hidden);
  tr.a1.resize(h);
  affine(model.tensor(Tensor::kEnc1W), model.tensor(Tensor::kEnc1B), tr.x, tr.a1);
  {
    std::vector<double> tproj(h);
    affine(model.tensor(Tensor::kTimeW), model.tensor(Tensor::kTimeB), tr.time_feat, tproj);
    const auto embed = model.tensor(Tensor::kClassEmbed);
    const double* erow = embed.data() + static_cast<std::size_t>(tr.embed_row) * h;
    for (std::size_t i = 0; i < h; ++i) tr.a1[i] += tproj[i] + erow[i];
  }
  check_finite(tr.a1, "enc1");
  tr.h1.resize(h);
  for (std::size_t i = 0; i < h; ++i) tr.h1[i] = silu(tr.a1[i]);

  tr.a2.resize(h);
  affine(model.tensor(Tensor::kEnc2W), model.tensor(Tensor::kEnc2B), tr.h1, tr.a2);
  check_finite(tr.a2, "enc2");
  tr.h2.resize(h);
  for (std::size_t i = 0; i < h; ++i) tr.h2[i] = silu(tr.a2[i]);

  const std::size_t b = static_cast<std::size_t>(a.bottleneck);
  tr.a3.resize(b);
  affine(model.tensor(Tensor::kBnW), model.tensor(Tensor::kBnB), tr.h2, tr.a3);
  check_finite(tr.a3, "bottleneck");
  tr.hb.resize(b);
  for (std::size_t i = 0; i < b; ++i) tr.hb[i] = silu(tr.a3[i]);

  const std::size_t p = static_cast<std::size_t>(a.proj_dim);
  tr.u.resize(p);
  affine(model.tensor(Tensor::kProjW), model.tensor(Tensor::kProjB), tr.hb, tr.u);
  check_finite(tr.u, "projection");
  double norm_sq = 0.0;
  for (double v : tr.u) norm_sq += v * v;
  tr.u_norm = std::sqrt(norm_sq);
  require(tr.u_norm > 1e-30, Errc::kNumeric,
          "forward: projection output is zero, cannot normalize");
  tr.z.resize(p);
  for (std::size_t i = 0; i < p; ++i) tr.z[i] = tr.u[i] / tr.u_norm;

  tr.a4.resize(h);
  affine(model.tensor(Tensor::kDec1W), model.tensor(Tensor::kDec1B), tr.hb, tr.a4);
  check_finite(tr.a4, "dec1");
  tr.d1.resize(h);
  for (std::size_t i = 0; i < h; ++i) tr.d1[i] = silu(tr.a4[i]);

  // Decoder output consumes [d1 ; h2] (skip from the last encoder layer).
  std::vector<double> cat(2 * h);
  for (std::size_t i = 0; i < h; ++i) {
    cat[i] = tr.d1[i];
    cat[h + i] = tr.h2[i];
  }
  tr.eps_hat.resize(static_cast<std::size_t>(a.dim));
  affine(model.tensor(Tensor::kDec2W), model.tensor(Tensor::kDec2B), cat, tr.eps_hat);
  check_finite(tr.eps_hat, "dec2");
  return tr;
}

void backward(const DenoiserModel& model, const ForwardTrace& tr, std::span<const double> d_eps,
              std::span<const double> d_z, std::span<double> grad) {
  const auto& a = model.arch;
  const auto& layout = model.layout();
  require(grad.size() == layout.total(), Errc::kConfig, "backward: grad size mismatch");
  require(d_eps.size() == static_cast<std::size_t>(a.dim), Errc::kConfig,
          "backward: d_eps size mismatch");
  require(d_z.empty() || d_z.size() == static_cast<std::size_t>(a.proj_dim), Errc::kConfig,
          "backward: d_z size mismatch");

  auto g = [&](Tensor t) {
    const auto& ti = layout.info(t);
    return std::span<double>(grad.data() + ti.offset, ti.count());
  };

  const std::size_t h = static_cast<std::size_t>(a.hidden);
  const std::size_t b = static_cast<std::size_t>(a.bottleneck);
  const std::size_t p = static_cast<std::size_t>(a.proj_dim);

  // dec2: split the concatenated input gradient into decoder and skip parts.
  std::vector<double> d_cat(2 * h, 0.0);
  {
    std::vector<double> cat(2 * h);
    for (std::size_t i = 0; i < h; ++i) {
      cat[i] = tr.d1[i];
      cat[h + i] = tr.h2[i];
    }
    affine_backward(model.tensor(Tensor::kDec2W), d_eps, cat, g(Tensor::kDec2W), g(Tensor::kDec2B),
                    d_cat);
  }
  std::vector<double> d_h2(h);
  for (std::size_t i = 0; i < h; ++i) d_h2[i] = d_cat[h + i];

  // dec1
  std::vector<double> d_a4(h);
  for (std::size_t i = 0; i < h; ++i) d_a4[i] = d_cat[i] * silu_grad(tr.a4[i]);
  std::vector<double> d_hb(b, 0.0);
  affine_backward(model.tensor(Tensor::kDec1W), d_a4, tr.hb, g(Tensor::kDec1W), g(Tensor::kDec1B),
                  d_hb);

  // projection head (through the L2 normalization): du = (dz - z (z.dz)) / |u|
  if (!d_z.empty()) {
    double zdz = 0.0;
    for (std::size_t i = 0; i < p; ++i) zdz += tr.z[i] * d_z[i];
    std::vector<double> d_u(p);
    for (std::size_t i = 0; i < p; ++i) d_u[i] = (d_z[i] - tr.z[i] * zdz) / tr.u_norm;
    affine_backward(model.tensor(Tensor::kProjW), d_u, tr.hb, g(Tensor::kProjW), g(Tensor::kProjB),
                    d_hb);
  }

  // bottleneck
  std::vector<double> d_a3(b);
  for (std::size_t i = 0; i < b; ++i) d_a3[i] = d_hb[i] * silu_grad(tr.a3[i]);
  affine_backward(model.tensor(Tensor::kBnW), d_a3, tr.h2, g(Tensor::kBnW), g(Tensor::kBnB), d_h2);

  // enc2
  std::vector<double> d_a2(h);
  for (std::size_t i = 0; i < h; ++i) d_a2[i] = d_h2[i] * silu_grad(tr.a2[i]);
  std::vector<double> d_h1(h, 0.0);
  affine_backward(model.tensor(Tensor::kEnc2W), d_a2, tr.h1, g(Tensor::kEnc2W), g(Tensor::kEnc2B),
                  d_h1);

  // enc1 + time projection + class embedding all feed a1.
  std::vector<double> d_a1(h);
  for (std::size_t i = 0; i < h; ++i) d_a1[i] = d_h1[i] * silu_grad(tr.a1[i]);
  affine_backward(model.tensor(Tensor::kEnc1W), d_a1, tr.x, g(Tensor::kEnc1W), g(Tensor::kEnc1B),
                  {});
  affine_backward(model.tensor(Tensor::kTimeW), d_a1, tr.time_feat, g(Tensor::kTimeW),
                  g(Tensor::kTimeB), {});
  {
    auto ge = g(Tensor::kClassEmbed);
    double* row = ge.data() + static_cast<std::size_t>(tr.embed_row) * h;
    for (std::size_t i = 0; i < h; ++i) row[i] += d_a1[i];
  }
}

}  // namespace coral

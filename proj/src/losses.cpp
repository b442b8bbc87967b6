#include "coral/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "coral/errors.hpp"

namespace coral {

double diffusion_loss(std::span<const double> eps, std::span<const double> eps_hat, int batch,
                      int dim) {
  require(batch >= 1 && dim >= 1, Errc::kConfig, "diffusion_loss: empty batch");
  const auto n = static_cast<std::size_t>(batch) * static_cast<std::size_t>(dim);
  require(eps.size() == n && eps_hat.size() == n, Errc::kConfig,
          "diffusion_loss: shape mismatch");
  double acc = 0.0;
  for (int i = 0; i < batch; ++i) {
    double sq = 0.0;
    const double* e = eps.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(dim);
    const double* eh = eps_hat.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(dim);
    for (int d = 0; d < dim; ++d) {
      const double diff = e[d] - eh[d];
      sq += diff * diff;
    }
    acc += sq;
  }
  return acc / static_cast<double>(batch);
}

SupConResult supcon_loss(const ContrastiveBatch& cb, SupconReduction reduction) {
  const int B = cb.batch;
  const int p = cb.proj_dim;
  require(B >= 2, Errc::kConfig, "supcon_loss: batch must be >= 2");
  require(p >= 1, Errc::kConfig, "supcon_loss: proj_dim must be >= 1");
  require(cb.tau_sc > 0.0, Errc::kConfig, "supcon_loss: tau_sc must be positive");
  require(cb.z.size() == static_cast<std::size_t>(B) * static_cast<std::size_t>(p),
          Errc::kConfig, "supcon_loss: z shape mismatch");
  require(cb.labels.size() == static_cast<std::size_t>(B), Errc::kConfig,
          "supcon_loss: labels size mismatch");

  auto zrow = [&](int i) { return cb.z.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(p); };

  // Scaled similarities s[i][j] = z_i . z_j / tau.
  std::vector<double> sim(static_cast<std::size_t>(B) * static_cast<std::size_t>(B), 0.0);
  for (int i = 0; i < B; ++i) {
    for (int j = i + 1; j < B; ++j) {
      double d = 0.0;
      const double* zi = zrow(i);
      const double* zj = zrow(j);
      for (int k = 0; k < p; ++k) d += zi[k] * zj[k];
      d /= cb.tau_sc;
      sim[static_cast<std::size_t>(i) * B + j] = d;
      sim[static_cast<std::size_t>(j) * B + i] = d;
    }
  }

  SupConResult res;
  res.dz.assign(cb.z.size(), 0.0);
  double loss_sum = 0.0;

  // Per-anchor softmax weights q over S(i); filled per anchor below.
  std::vector<double> q(static_cast<std::size_t>(B), 0.0);

  for (int i = 0; i < B; ++i) {
    int npos = 0;
    for (int j = 0; j < B; ++j) {
      if (j != i && cb.labels[static_cast<std::size_t>(j)] == cb.labels[static_cast<std::size_t>(i)]) ++npos;
    }
    if (npos == 0) continue;
    ++res.contributing_anchors;

    double mx = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < B; ++j) {
      if (j != i) mx = std::max(mx, sim[static_cast<std::size_t>(i) * B + j]);
    }
    double denom = 0.0;
    for (int j = 0; j < B; ++j) {
      if (j == i) {
        q[static_cast<std::size_t>(j)] = 0.0;
        continue;
      }
      q[static_cast<std::size_t>(j)] = std::exp(sim[static_cast<std::size_t>(i) * B + j] - mx);
      denom += q[static_cast<std::size_t>(j)];
    }
    const double log_denom = std::log(denom) + mx;

    double anchor_loss = 0.0;
    for (int j = 0; j < B; ++j) {
      if (j == i || cb.labels[static_cast<std::size_t>(j)] != cb.labels[static_cast<std::size_t>(i)]) continue;
      anchor_loss += log_denom - sim[static_cast<std::size_t>(i) * B + j];
    }
    anchor_loss /= static_cast<double>(npos);
    loss_sum += anchor_loss;

    // d anchor_loss / d sim(i,j) = q_j/denom - [j in P(i)]/npos; chain through
    // sim = z_i . z_j / tau into both rows.
    const double inv_np = 1.0 / static_cast<double>(npos);
    const double* zi = zrow(i);
    double* dzi = res.dz.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(p);
    for (int j = 0; j < B; ++j) {
      if (j == i) continue;
      double coef = q[static_cast<std::size_t>(j)] / denom;
      if (cb.labels[static_cast<std::size_t>(j)] == cb.labels[static_cast<std::size_t>(i)]) coef -= inv_np;
      coef /= cb.tau_sc;
      const double* zj = zrow(j);
      double* dzj = res.dz.data() + static_cast<std::size_t>(j) * static_cast<std::size_t>(p);
      for (int k = 0; k < p; ++k) {
        dzi[k] += coef * zj[k];
        dzj[k] += coef * zi[k];
      }
    }
  }

  if (res.contributing_anchors == 0) {
    res.no_positive_pairs = true;
    res.value = 0.0;
    return res;
  }

  double scale = 1.0;
  if (reduction == SupconReduction::kMeanAnchors) {
    scale = 1.0 / static_cast<double>(res.contributing_anchors);
  }
  res.value = loss_sum * scale;
  if (scale != 1.0) {
    for (auto& g : res.dz) g *= scale;
  }
  return res;
}

double coral_loss(double diff, double con, double lambda_t) {
  require(lambda_t >= 0.0, Errc::kConfig, "coral_loss: lambda_t must be nonnegative");
  return diff + lambda_t * con;
}

}  // namespace coral

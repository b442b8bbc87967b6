#pragma once

#include <span>
#include <vector>

namespace coral {

// Reduction over anchors for the supervised contrastive loss. The mean keeps
// the effective contrastive weight independent of batch size; the raw sum
// matches the literal formula.
enum class SupconReduction { kMeanAnchors, kSumAnchors };

// A batch of unit-norm projected embeddings with their (original, never
// masked) class labels.
struct ContrastiveBatch {
  int batch = 0;
  int proj_dim = 0;
  std::vector<double> z;  // row-major [batch x proj_dim], rows unit-norm
  std::vector<int> labels;
  double tau_sc = 0.1;
};

struct SupConResult {
  double value = 0.0;
  std::vector<double> dz;  // [batch x proj_dim], gradient w.r.t. z
  bool no_positive_pairs = false;
  int contributing_anchors = 0;
};

// Mean over the batch of the squared L2 distance between target and
// predicted noise.
double diffusion_loss(std::span<const double> eps, std::span<const double> eps_hat, int batch,
                      int dim);

// Supervised contrastive loss over all anchors with at least one same-class
// positive; anchors without positives are skipped. Log-sum-exp terms are
// max-subtracted per anchor. Returns 0 with the no_positive_pairs flag when
// every anchor is skipped.
SupConResult supcon_loss(const ContrastiveBatch& batch,
                         SupconReduction reduction = SupconReduction::kMeanAnchors);

// Combined objective: diff + lambda_t * con.
double coral_loss(double diff, double con, double lambda_t);

}  // namespace coral

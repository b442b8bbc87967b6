#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "coral/rng.hpp"

namespace coral {

// Flat-vector samples with integer class labels. Rows are stored as f32 (the
// on-disk precision of the LTDS1 format) and widened to double at point of
// use, so a write/read round trip is the identity on all fields.
struct LabeledDataset {
  int dim = 0;
  int num_classes = 0;
  std::vector<float> samples;  // row-major [n_total x dim]
  std::vector<std::uint16_t> labels;
  std::vector<std::int64_t> class_counts;

  std::int64_t size() const { return static_cast<std::int64_t>(labels.size()); }
  std::vector<double> row(std::int64_t i) const;
};

// Geometric long-tail class sizes: n_i = floor(N * rho^(i / (C-1))).
// n_0 = N, n_{C-1} = floor(rho * N), non-increasing. C = 1 yields [N].
std::vector<std::int64_t> class_counts(std::int64_t head_count, double rho, int num_classes);

// Synthetic stand-in for a long-tailed image corpus: class i is an isotropic
// Gaussian blob centered at radius * (cos 2*pi*i/C, sin 2*pi*i/C, 0, ...).
LabeledDataset make_ring_gaussians(int num_classes, const std::vector<std::int64_t>& counts,
                                   double radius, double sigma, int dim, Rng& rng);

// Keeps class_counts(N, rho, C) samples per class from a balanced input,
// chosen without replacement.
LabeledDataset subsample_longtail(const LabeledDataset& balanced, double rho, Rng& rng);

// LTDS1 binary format: magic "LTDS1", then little-endian u32 n_total, u32
// dim, u32 num_classes, then n_total records of (f32[dim], u16 label).
void write_dataset(const LabeledDataset& data, const std::string& path);
LabeledDataset read_dataset(const std::string& path);

}  // namespace coral

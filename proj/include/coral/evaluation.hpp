#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "coral/dataset.hpp"
#include "coral/denoiser.hpp"
#include "coral/rng.hpp"
#include "coral/schedule.hpp"

namespace coral {

struct FeatureSet {
  int n = 0;
  int d = 0;
  std::vector<double> features;  // row-major [n x d]
  std::vector<int> labels;       // empty when unlabeled

  bool has_labels() const { return !labels.empty(); }
  std::span<const double> row(int i) const {
    return {features.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(d),
            static_cast<std::size_t>(d)};
  }
};

FeatureSet features_from_dataset(const LabeledDataset& data);

struct EvalReport {
  double frechet = 0.0;
  std::vector<std::optional<double>> per_class_frechet;
  double classifier_score = 1.0;
  double f8 = 0.0;
  double f_inv8 = 0.0;
  double improved_precision = 0.0;
  double improved_recall = 0.0;
  std::vector<double> latent_knn_purity;
  std::optional<double> silhouette;
};

struct Gaussian {
  int d = 0;
  std::vector<double> mean;  // d
  std::vector<double> cov;   // row-major [d x d], unbiased
};

// Sample mean and unbiased sample covariance; requires n >= 2.
Gaussian fit_gaussian(const FeatureSet& fs);

// Squared 2-Wasserstein distance between Gaussians:
// |m1-m2|^2 + tr(S1 + S2 - 2 (S1^1/2 S2 S1^1/2)^1/2), matrix square roots by
// symmetric eigendecomposition with eigenvalues clamped at zero.
double frechet_distance(const Gaussian& a, const Gaussian& b);

// F_8 and F_1/8 over the PRD curve between two histograms.
// lambda_j = tan(j pi / (2(m+1))), alpha_j = sum_i min(lambda_j P_i, Q_i),
// beta_j = alpha_j / lambda_j, F_b = max_j (1+b^2) a b / (b^2 a + b).
std::pair<double, double> prd_from_histograms(std::span<const double> P,
                                              std::span<const double> Q, int angles = 1001);

struct KMeansResult {
  int k = 0;
  std::vector<double> centers;  // [k x d]
  std::vector<int> assign;      // per point
  int iterations = 0;
  double inertia = 0.0;
};

// Seeded k-means++ initialization, Lloyd iterations capped at 100 or until
// the relative inertia change drops below 1e-6.
KMeansResult kmeans(const FeatureSet& points, int k, std::uint64_t seed);

// Cluster the union of both sets, histogram memberships, and score the PRD
// curve of the two histograms.
std::pair<double, double> prd_f_scores(const FeatureSet& real, const FeatureSet& gen,
                                       int num_clusters, std::uint64_t seed, int angles = 1001);

// k-NN manifold estimates: a point's radius is the distance to its k-th
// nearest neighbor within its own set; precision is the covered fraction of
// generated points, recall the covered fraction of real points.
std::pair<double, double> improved_precision_recall(const FeatureSet& real, const FeatureSet& gen,
                                                    int k);

// exp(mean_x KL(p(y|x) || mean posterior)); posteriors is [n x c], rows
// summing to 1.
double classifier_score(std::span<const double> posteriors, int n, int c);

// Bottleneck features of every sample, noised to level t with seeded draws
// (t = 0 passes clean inputs). Labels are carried over.
FeatureSet extract_latents(const DenoiserModel& model, const LabeledDataset& data, int t,
                           const NoiseSchedule& schedule, Rng& rng);

struct SeparationReport {
  std::vector<double> purity;        // per class
  std::optional<double> silhouette;  // absent when fewer than two classes
};

// Per-class k-NN label purity and the mean silhouette coefficient.
SeparationReport latent_separation(const FeatureSet& fs, int k);

// Frechet distance restricted to each class; classes with fewer than two
// samples on either side are reported absent.
std::vector<std::optional<double>> per_class_frechet(const FeatureSet& real,
                                                     const FeatureSet& gen, int num_classes);

// Multinomial logistic probe used for the classifier score. Training is
// full-batch Adam from zero init, so it is deterministic without a seed.
struct ProbeModel {
  int d = 0;
  int c = 0;
  std::vector<double> W;  // [c x d]
  std::vector<double> b;  // c
};

ProbeModel train_probe(const FeatureSet& train, int num_classes, int steps = 500,
                       double lr = 0.05);
std::vector<double> probe_posteriors(const ProbeModel& probe, const FeatureSet& fs);

// One row per sample, label column last.
void write_features_csv(const FeatureSet& fs, const std::string& path);

}  // namespace coral

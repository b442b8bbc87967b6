#include "coral/evaluation.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include "coral/errors.hpp"
#include "coral/forward_process.hpp"

namespace coral {

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

Eigen::MatrixXd to_eigen(const std::vector<double>& cov, int d) {
  Eigen::MatrixXd m(d, d);
  for (int r = 0; r < d; ++r) {
    for (int c = 0; c < d; ++c) m(r, c) = cov[static_cast<std::size_t>(r) * static_cast<std::size_t>(d) + static_cast<std::size_t>(c)];
  }
  return m;
}

// PSD square root by symmetric eigendecomposition, eigenvalues clamped at 0.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  require(es.info() == Eigen::Success, Errc::kNumeric, "psd_sqrt: eigendecomposition failed");
  Eigen::VectorXd ev = es.eigenvalues();
  for (int i = 0; i < ev.size(); ++i) ev(i) = ev(i) > 0.0 ? std::sqrt(ev(i)) : 0.0;
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

FeatureSet features_from_dataset(const LabeledDataset& data) {
  FeatureSet fs;
  fs.n = static_cast<int>(data.size());
  fs.d = data.dim;
  fs.features.resize(data.samples.size());
  for (std::size_t i = 0; i < data.samples.size(); ++i) fs.features[i] = data.samples[i];
  fs.labels.assign(data.labels.begin(), data.labels.end());
  return fs;
}

Gaussian fit_gaussian(const FeatureSet& fs) {
  require(fs.n >= 2, Errc::kConfig, "fit_gaussian: need at least two points");
  Gaussian g;
  g.d = fs.d;
  g.mean.assign(static_cast<std::size_t>(fs.d), 0.0);
  for (int i = 0; i < fs.n; ++i) {
    const auto r = fs.row(i);
    for (int k = 0; k < fs.d; ++k) g.mean[static_cast<std::size_t>(k)] += r[static_cast<std::size_t>(k)];
  }
  for (auto& m : g.mean) m /= static_cast<double>(fs.n);

  g.cov.assign(static_cast<std::size_t>(fs.d) * static_cast<std::size_t>(fs.d), 0.0);
  for (int i = 0; i < fs.n; ++i) {
    const auto r = fs.row(i);
    for (int a = 0; a < fs.d; ++a) {
      const double da = r[static_cast<std::size_t>(a)] - g.mean[static_cast<std::size_t>(a)];
      for (int b = a; b < fs.d; ++b) {
        const double db = r[static_cast<std::size_t>(b)] - g.mean[static_cast<std::size_t>(b)];
        g.cov[static_cast<std::size_t>(a) * static_cast<std::size_t>(fs.d) + static_cast<std::size_t>(b)] += da * db;
      }
    }
  }
  const double denom = static_cast<double>(fs.n - 1);
  for (int a = 0; a < fs.d; ++a) {
    for (int b = a; b < fs.d; ++b) {
      const auto ab = static_cast<std::size_t>(a) * static_cast<std::size_t>(fs.d) + static_cast<std::size_t>(b);
      const auto ba = static_cast<std::size_t>(b) * static_cast<std::size_t>(fs.d) + static_cast<std::size_t>(a);
      g.cov[ab] /= denom;
      g.cov[ba] = g.cov[ab];
    }
  }
  return g;
}

double frechet_distance(const Gaussian& a, const Gaussian& b) {
  require(a.d == b.d && a.d >= 1, Errc::kConfig, "frechet_distance: dimension mismatch");
  const int d = a.d;

  Eigen::MatrixXd s1 = to_eigen(a.cov, d);
  Eigen::MatrixXd s2 = to_eigen(b.cov, d);
  const double asym = std::max((s1 - s1.transpose()).cwiseAbs().maxCoeff(),
                               (s2 - s2.transpose()).cwiseAbs().maxCoeff());
  require(asym <= 1e-8, Errc::kNumeric, "frechet_distance: covariance not symmetric");
  s1 = 0.5 * (s1 + s1.transpose());
  s2 = 0.5 * (s2 + s2.transpose());

  double mean_sq = 0.0;
  for (int i = 0; i < d; ++i) {
    const double diff = a.mean[static_cast<std::size_t>(i)] - b.mean[static_cast<std::size_t>(i)];
    mean_sq += diff * diff;
  }

  const Eigen::MatrixXd r1 = psd_sqrt(s1);
  Eigen::MatrixXd inner = r1 * s2 * r1;
  inner = 0.5 * (inner + inner.transpose());
  const Eigen::MatrixXd cross = psd_sqrt(inner);

  const double value = mean_sq + s1.trace() + s2.trace() - 2.0 * cross.trace();
  // The analytic value is nonnegative; clamp the eigendecomposition noise.
  return value > 0.0 ? value : 0.0;
}

std::pair<double, double> prd_from_histograms(std::span<const double> P,
                                              std::span<const double> Q, int angles) {
  require(P.size() == Q.size() && !P.empty(), Errc::kConfig,
          "prd_from_histograms: histogram shape mismatch");
  require(angles >= 1, Errc::kConfig, "prd_from_histograms: need at least one angle");
  double sp = 0.0, sq = 0.0;
  for (double v : P) {
    require(v >= 0.0, Errc::kConfig, "prd_from_histograms: negative mass in P");
    sp += v;
  }
  for (double v : Q) {
    require(v >= 0.0, Errc::kConfig, "prd_from_histograms: negative mass in Q");
    sq += v;
  }
  require(std::abs(sp - 1.0) <= 1e-6 && std::abs(sq - 1.0) <= 1e-6, Errc::kConfig,
          "prd_from_histograms: histograms must sum to 1");

  // Identical histograms contain the point (1,1), where both F-scores equal
  // 1; the swept formula only reaches it up to grid and rounding noise.
  if (std::equal(P.begin(), P.end(), Q.begin())) return {1.0, 1.0};

  const double half_pi = 1.5707963267948966192313216916398;
  auto f_score = [](double beta, double alpha_v, double beta_v) {
    const double b2 = beta * beta;
    const double denom = b2 * alpha_v + beta_v;
    if (denom <= 0.0) return 0.0;
    return (1.0 + b2) * alpha_v * beta_v / denom;
  };

  double f8 = 0.0, f_inv8 = 0.0;
  for (int j = 1; j <= angles; ++j) {
    const double lambda = std::tan(static_cast<double>(j) / static_cast<double>(angles + 1) * half_pi);
    double alpha_v = 0.0;
    for (std::size_t i = 0; i < P.size(); ++i) alpha_v += std::min(lambda * P[i], Q[i]);
    const double beta_v = alpha_v / lambda;
    f8 = std::max(f8, f_score(8.0, alpha_v, beta_v));
    f_inv8 = std::max(f_inv8, f_score(0.125, alpha_v, beta_v));
  }
  return {f8, f_inv8};
}

KMeansResult kmeans(const FeatureSet& points, int k, std::uint64_t seed) {
  require(points.n >= 1, Errc::kConfig, "kmeans: empty point set");
  require(k >= 1 && k <= points.n, Errc::kConfig,
          "kmeans: cluster count must be in 1..n (" + std::to_string(k) + " vs " +
              std::to_string(points.n) + " points)");
  const int n = points.n;
  const int d = points.d;

  KMeansResult res;
  res.k = k;
  res.centers.assign(static_cast<std::size_t>(k) * static_cast<std::size_t>(d), 0.0);
  res.assign.assign(static_cast<std::size_t>(n), 0);

  auto rng = keyed_rng(seed, Stream::kKmeans);

  // k-means++ seeding.
  std::vector<double> min_d2(static_cast<std::size_t>(n), std::numeric_limits<double>::max());
  {
    const auto first = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    std::copy(points.row(first).begin(), points.row(first).end(), res.centers.begin());
    for (int c = 1; c < k; ++c) {
      double total = 0.0;
      const auto prev = std::span<const double>(
          res.centers.data() + static_cast<std::size_t>(c - 1) * static_cast<std::size_t>(d),
          static_cast<std::size_t>(d));
      for (int i = 0; i < n; ++i) {
        min_d2[static_cast<std::size_t>(i)] =
            std::min(min_d2[static_cast<std::size_t>(i)], sq_dist(points.row(i), prev));
        total += min_d2[static_cast<std::size_t>(i)];
      }
      int pick = 0;
      if (total > 0.0) {
        const double target = rng.uniform() * total;
        double acc = 0.0;
        pick = n - 1;
        for (int i = 0; i < n; ++i) {
          acc += min_d2[static_cast<std::size_t>(i)];
          if (acc >= target) {
            pick = i;
            break;
          }
        }
      } else {
        pick = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
      }
      std::copy(points.row(pick).begin(), points.row(pick).end(),
                res.centers.begin() + static_cast<std::ptrdiff_t>(c) * d);
    }
  }

  std::vector<double> sums(res.centers.size());
  std::vector<std::int64_t> counts(static_cast<std::size_t>(k));
  double prev_inertia = std::numeric_limits<double>::max();

  for (int iter = 0; iter < 100; ++iter) {
    res.iterations = iter + 1;
    double inertia = 0.0;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double bestd = std::numeric_limits<double>::max();
      for (int c = 0; c < k; ++c) {
        const auto ctr = std::span<const double>(
            res.centers.data() + static_cast<std::size_t>(c) * static_cast<std::size_t>(d),
            static_cast<std::size_t>(d));
        const double dd = sq_dist(points.row(i), ctr);
        if (dd < bestd) {
          bestd = dd;
          best = c;
        }
      }
      res.assign[static_cast<std::size_t>(i)] = best;
      inertia += bestd;
    }
    res.inertia = inertia;

    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (int i = 0; i < n; ++i) {
      const int c = res.assign[static_cast<std::size_t>(i)];
      ++counts[static_cast<std::size_t>(c)];
      const auto r = points.row(i);
      double* s = sums.data() + static_cast<std::size_t>(c) * static_cast<std::size_t>(d);
      for (int kd = 0; kd < d; ++kd) s[kd] += r[static_cast<std::size_t>(kd)];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] == 0) continue;  // empty cluster keeps its center
      const double inv = 1.0 / static_cast<double>(counts[static_cast<std::size_t>(c)]);
      double* ctr = res.centers.data() + static_cast<std::size_t>(c) * static_cast<std::size_t>(d);
      const double* s = sums.data() + static_cast<std::size_t>(c) * static_cast<std::size_t>(d);
      for (int kd = 0; kd < d; ++kd) ctr[kd] = s[kd] * inv;
    }

    if (prev_inertia < std::numeric_limits<double>::max()) {
      const double rel = std::abs(prev_inertia - inertia) / std::max(prev_inertia, 1e-30);
      if (rel < 1e-6) break;
    }
    prev_inertia = inertia;
  }
  return res;
}

std::pair<double, double> prd_f_scores(const FeatureSet& real, const FeatureSet& gen,
                                       int num_clusters, std::uint64_t seed, int angles) {
  require(real.n >= 1 && gen.n >= 1, Errc::kConfig, "prd_f_scores: empty feature set");
  require(real.d == gen.d, Errc::kConfig, "prd_f_scores: feature dimension mismatch");
  require(num_clusters <= real.n + gen.n, Errc::kConfig,
          "prd_f_scores: more clusters than points");

  FeatureSet all;
  all.n = real.n + gen.n;
  all.d = real.d;
  all.features.reserve(real.features.size() + gen.features.size());
  all.features.insert(all.features.end(), real.features.begin(), real.features.end());
  all.features.insert(all.features.end(), gen.features.begin(), gen.features.end());

  const auto km = kmeans(all, num_clusters, seed);

  std::vector<double> hp(static_cast<std::size_t>(num_clusters), 0.0);
  std::vector<double> hq(static_cast<std::size_t>(num_clusters), 0.0);
  for (int i = 0; i < real.n; ++i) hp[static_cast<std::size_t>(km.assign[static_cast<std::size_t>(i)])] += 1.0;
  for (int i = 0; i < gen.n; ++i) {
    hq[static_cast<std::size_t>(km.assign[static_cast<std::size_t>(real.n + i)])] += 1.0;
  }
  for (auto& v : hp) v /= static_cast<double>(real.n);
  for (auto& v : hq) v /= static_cast<double>(gen.n);
  return prd_from_histograms(hp, hq, angles);
}

std::pair<double, double> improved_precision_recall(const FeatureSet& real, const FeatureSet& gen,
                                                    int k) {
  require(k >= 1, Errc::kConfig, "improved_precision_recall: k must be >= 1");
  require(real.n > k && gen.n > k, Errc::kConfig,
          "improved_precision_recall: each set needs more than k points");
  require(real.d == gen.d, Errc::kConfig, "improved_precision_recall: dimension mismatch");

  auto knn_radii = [k](const FeatureSet& fs) {
    std::vector<double> radii(static_cast<std::size_t>(fs.n));
    std::vector<double> dists;
    dists.reserve(static_cast<std::size_t>(fs.n) - 1);
    for (int i = 0; i < fs.n; ++i) {
      dists.clear();
      for (int j = 0; j < fs.n; ++j) {
        if (j != i) dists.push_back(sq_dist(fs.row(i), fs.row(j)));
      }
      std::nth_element(dists.begin(), dists.begin() + (k - 1), dists.end());
      radii[static_cast<std::size_t>(i)] = dists[static_cast<std::size_t>(k - 1)];
    }
    return radii;  // squared radii
  };

  auto covered_fraction = [](const FeatureSet& pts, const FeatureSet& manifold,
                             const std::vector<double>& radii_sq) {
    std::int64_t covered = 0;
    for (int i = 0; i < pts.n; ++i) {
      for (int j = 0; j < manifold.n; ++j) {
        if (sq_dist(pts.row(i), manifold.row(j)) <= radii_sq[static_cast<std::size_t>(j)]) {
          ++covered;
          break;
        }
      }
    }
    return static_cast<double>(covered) / static_cast<double>(pts.n);
  };

  const auto real_radii = knn_radii(real);
  const auto gen_radii = knn_radii(gen);
  const double precision = covered_fraction(gen, real, real_radii);
  const double recall = covered_fraction(real, gen, gen_radii);
  return {precision, recall};
}

double classifier_score(std::span<const double> posteriors, int n, int c) {
  require(n >= 1 && c >= 1, Errc::kConfig, "classifier_score: empty input");
  require(posteriors.size() == static_cast<std::size_t>(n) * static_cast<std::size_t>(c),
          Errc::kConfig, "classifier_score: shape mismatch");

  std::vector<double> marginal(static_cast<std::size_t>(c), 0.0);
  for (int i = 0; i < n; ++i) {
    double row_sum = 0.0;
    for (int j = 0; j < c; ++j) {
      const double p = posteriors[static_cast<std::size_t>(i) * static_cast<std::size_t>(c) + static_cast<std::size_t>(j)];
      require(p >= 0.0, Errc::kConfig, "classifier_score: negative probability");
      row_sum += p;
    }
    require(std::abs(row_sum - 1.0) <= 1e-6, Errc::kConfig,
            "classifier_score: posterior row does not sum to 1");
    for (int j = 0; j < c; ++j) {
      marginal[static_cast<std::size_t>(j)] +=
          posteriors[static_cast<std::size_t>(i) * static_cast<std::size_t>(c) + static_cast<std::size_t>(j)];
    }
  }
  for (auto& m : marginal) m /= static_cast<double>(n);

  double mean_kl = 0.0;
  for (int i = 0; i < n; ++i) {
    double kl = 0.0;
    for (int j = 0; j < c; ++j) {
      const double p = posteriors[static_cast<std::size_t>(i) * static_cast<std::size_t>(c) + static_cast<std::size_t>(j)];
      if (p > 0.0) kl += p * std::log(p / marginal[static_cast<std::size_t>(j)]);
    }
    mean_kl += kl;
  }
  mean_kl /= static_cast<double>(n);
  return std::exp(mean_kl);
}

FeatureSet extract_latents(const DenoiserModel& model, const LabeledDataset& data, int t,
                           const NoiseSchedule& schedule, Rng& rng) {
  require(t >= 0 && t <= schedule.T, Errc::kConfig, "extract_latents: t outside 0..T");
  require(data.dim == model.arch.dim, Errc::kConfig, "extract_latents: dim mismatch");

  FeatureSet fs;
  fs.n = static_cast<int>(data.size());
  fs.d = model.arch.bottleneck;
  fs.features.resize(static_cast<std::size_t>(fs.n) * static_cast<std::size_t>(fs.d));
  fs.labels.assign(data.labels.begin(), data.labels.end());

  std::vector<double> eps(static_cast<std::size_t>(data.dim), 0.0);
  for (std::int64_t i = 0; i < data.size(); ++i) {
    const auto x0 = data.row(i);
    std::vector<double> xt;
    if (t == 0) {
      xt = x0;
    } else {
      for (auto& e : eps) e = rng.normal();
      xt = q_sample(x0, t, eps, schedule);
    }
    const auto tr = forward(model, xt, t, static_cast<int>(data.labels[static_cast<std::size_t>(i)]),
                            schedule);
    std::copy(tr.hb.begin(), tr.hb.end(),
              fs.features.begin() + static_cast<std::ptrdiff_t>(i) * fs.d);
  }
  return fs;
}

SeparationReport latent_separation(const FeatureSet& fs, int k) {
  require(fs.has_labels(), Errc::kConfig, "latent_separation: labels required");
  require(k >= 1, Errc::kConfig, "latent_separation: k must be >= 1");
  require(fs.n > k, Errc::kConfig, "latent_separation: need more than k points");

  const int n = fs.n;
  int num_classes = 0;
  for (int l : fs.labels) num_classes = std::max(num_classes, l + 1);

  std::vector<std::int64_t> class_sizes(static_cast<std::size_t>(num_classes), 0);
  for (int l : fs.labels) ++class_sizes[static_cast<std::size_t>(l)];

  // k-NN label purity per class.
  std::vector<double> purity_sum(static_cast<std::size_t>(num_classes), 0.0);
  std::vector<std::pair<double, int>> dists(static_cast<std::size_t>(n - 1));
  for (int i = 0; i < n; ++i) {
    std::size_t m = 0;
    for (int j = 0; j < n; ++j) {
      if (j != i) dists[m++] = {sq_dist(fs.row(i), fs.row(j)), j};
    }
    std::partial_sort(dists.begin(), dists.begin() + k, dists.end());
    int same = 0;
    for (int q = 0; q < k; ++q) {
      if (fs.labels[static_cast<std::size_t>(dists[static_cast<std::size_t>(q)].second)] ==
          fs.labels[static_cast<std::size_t>(i)]) {
        ++same;
      }
    }
    purity_sum[static_cast<std::size_t>(fs.labels[static_cast<std::size_t>(i)])] +=
        static_cast<double>(same) / static_cast<double>(k);
  }

  SeparationReport rep;
  rep.purity.assign(static_cast<std::size_t>(num_classes), 0.0);
  for (int c = 0; c < num_classes; ++c) {
    if (class_sizes[static_cast<std::size_t>(c)] > 0) {
      rep.purity[static_cast<std::size_t>(c)] =
          purity_sum[static_cast<std::size_t>(c)] / static_cast<double>(class_sizes[static_cast<std::size_t>(c)]);
    }
  }

  int populated = 0;
  for (auto s : class_sizes) {
    if (s > 0) ++populated;
  }
  if (populated < 2) return rep;  // silhouette undefined with one class

  // Mean silhouette coefficient with Euclidean distance.
  double sil_sum = 0.0;
  std::vector<double> mean_dist(static_cast<std::size_t>(num_classes));
  for (int i = 0; i < n; ++i) {
    std::fill(mean_dist.begin(), mean_dist.end(), 0.0);
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      mean_dist[static_cast<std::size_t>(fs.labels[static_cast<std::size_t>(j)])] +=
          std::sqrt(sq_dist(fs.row(i), fs.row(j)));
    }
    const int own = fs.labels[static_cast<std::size_t>(i)];
    double a = 0.0;
    if (class_sizes[static_cast<std::size_t>(own)] > 1) {
      a = mean_dist[static_cast<std::size_t>(own)] /
          static_cast<double>(class_sizes[static_cast<std::size_t>(own)] - 1);
    } else {
      sil_sum += 0.0;  // singleton convention: s(i) = 0
      continue;
    }
    double b = std::numeric_limits<double>::max();
    for (int c = 0; c < num_classes; ++c) {
      if (c == own || class_sizes[static_cast<std::size_t>(c)] == 0) continue;
      b = std::min(b, mean_dist[static_cast<std::size_t>(c)] /
                          static_cast<double>(class_sizes[static_cast<std::size_t>(c)]));
    }
    const double denom = std::max(a, b);
    sil_sum += denom > 0.0 ? (b - a) / denom : 0.0;
  }
  rep.silhouette = sil_sum / static_cast<double>(n);
  return rep;
}

std::vector<std::optional<double>> per_class_frechet(const FeatureSet& real,
                                                     const FeatureSet& gen, int num_classes) {
  require(real.has_labels() && gen.has_labels(), Errc::kConfig,
          "per_class_frechet: labels required");
  require(real.d == gen.d, Errc::kConfig, "per_class_frechet: dimension mismatch");

  auto restrict_to = [](const FeatureSet& fs, int cls) {
    FeatureSet out;
    out.d = fs.d;
    for (int i = 0; i < fs.n; ++i) {
      if (fs.labels[static_cast<std::size_t>(i)] == cls) {
        const auto r = fs.row(i);
        out.features.insert(out.features.end(), r.begin(), r.end());
        ++out.n;
      }
    }
    return out;
  };

  std::vector<std::optional<double>> out(static_cast<std::size_t>(num_classes));
  for (int c = 0; c < num_classes; ++c) {
    const auto r = restrict_to(real, c);
    const auto g = restrict_to(gen, c);
    if (r.n < 2 || g.n < 2) continue;  // flagged absent
    out[static_cast<std::size_t>(c)] = frechet_distance(fit_gaussian(r), fit_gaussian(g));
  }
  return out;
}

ProbeModel train_probe(const FeatureSet& train, int num_classes, int steps, double lr) {
  require(train.has_labels(), Errc::kConfig, "train_probe: labels required");
  require(train.n >= 1 && num_classes >= 1, Errc::kConfig, "train_probe: empty input");

  const int d = train.d;
  const int c = num_classes;
  ProbeModel pm;
  pm.d = d;
  pm.c = c;
  pm.W.assign(static_cast<std::size_t>(c) * static_cast<std::size_t>(d), 0.0);
  pm.b.assign(static_cast<std::size_t>(c), 0.0);

  // Full-batch Adam on the cross-entropy; zero init keeps it deterministic.
  const std::size_t np = pm.W.size() + pm.b.size();
  std::vector<double> m(np, 0.0), v(np, 0.0), grad(np, 0.0);
  std::vector<double> logits(static_cast<std::size_t>(c));
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  for (int step = 1; step <= steps; ++step) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (int i = 0; i < train.n; ++i) {
      const auto x = train.row(i);
      for (int j = 0; j < c; ++j) {
        double acc = pm.b[static_cast<std::size_t>(j)];
        const double* w = pm.W.data() + static_cast<std::size_t>(j) * static_cast<std::size_t>(d);
        for (int kd = 0; kd < d; ++kd) acc += w[kd] * x[static_cast<std::size_t>(kd)];
        logits[static_cast<std::size_t>(j)] = acc;
      }
      const double mx = *std::max_element(logits.begin(), logits.end());
      double z = 0.0;
      for (auto& l : logits) {
        l = std::exp(l - mx);
        z += l;
      }
      const int label = train.labels[static_cast<std::size_t>(i)];
      for (int j = 0; j < c; ++j) {
        const double p = logits[static_cast<std::size_t>(j)] / z;
        const double gj = (p - (j == label ? 1.0 : 0.0)) / static_cast<double>(train.n);
        double* gw = grad.data() + static_cast<std::size_t>(j) * static_cast<std::size_t>(d);
        for (int kd = 0; kd < d; ++kd) gw[kd] += gj * x[static_cast<std::size_t>(kd)];
        grad[pm.W.size() + static_cast<std::size_t>(j)] += gj;
      }
    }
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
    for (std::size_t p = 0; p < np; ++p) {
      m[p] = beta1 * m[p] + (1.0 - beta1) * grad[p];
      v[p] = beta2 * v[p] + (1.0 - beta2) * grad[p] * grad[p];
      double* target = p < pm.W.size() ? &pm.W[p] : &pm.b[p - pm.W.size()];
      *target -= lr * (m[p] / c1) / (std::sqrt(v[p] / c2) + eps);
    }
  }
  return pm;
}

std::vector<double> probe_posteriors(const ProbeModel& probe, const FeatureSet& fs) {
  require(fs.d == probe.d, Errc::kConfig, "probe_posteriors: dimension mismatch");
  std::vector<double> out(static_cast<std::size_t>(fs.n) * static_cast<std::size_t>(probe.c));
  std::vector<double> logits(static_cast<std::size_t>(probe.c));
  for (int i = 0; i < fs.n; ++i) {
    const auto x = fs.row(i);
    for (int j = 0; j < probe.c; ++j) {
      double acc = probe.b[static_cast<std::size_t>(j)];
      const double* w = probe.W.data() + static_cast<std::size_t>(j) * static_cast<std::size_t>(probe.d);
      for (int kd = 0; kd < probe.d; ++kd) acc += w[kd] * x[static_cast<std::size_t>(kd)];
      logits[static_cast<std::size_t>(j)] = acc;
    }
    const double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (auto& l : logits) {
      l = std::exp(l - mx);
      z += l;
    }
    for (int j = 0; j < probe.c; ++j) {
      out[static_cast<std::size_t>(i) * static_cast<std::size_t>(probe.c) + static_cast<std::size_t>(j)] =
          logits[static_cast<std::size_t>(j)] / z;
    }
  }
  return out;
}

void write_features_csv(const FeatureSet& fs, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  require(os.good(), Errc::kIo, "write_features_csv: cannot open " + path);
  char buf[64];
  for (int i = 0; i < fs.n; ++i) {
    const auto r = fs.row(i);
    for (int k = 0; k < fs.d; ++k) {
      std::snprintf(buf, sizeof(buf), "%.17g,", r[static_cast<std::size_t>(k)]);
      os << buf;
    }
    os << (fs.has_labels() ? fs.labels[static_cast<std::size_t>(i)] : 0) << "\n";
  }
  os.flush();
  require(os.good(), Errc::kIo, "write_features_csv: write failed for " + path);
}

}  // namespace coral

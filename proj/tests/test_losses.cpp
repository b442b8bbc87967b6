#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "coral/errors.hpp"
#include "coral/losses.hpp"
#include "coral/rng.hpp"

using namespace coral;

namespace {

ContrastiveBatch random_unit_batch(int B, int p, double tau, std::uint64_t seed) {
  ContrastiveBatch cb;
  cb.batch = B;
  cb.proj_dim = p;
  cb.tau_sc = tau;
  cb.z.resize(static_cast<std::size_t>(B) * static_cast<std::size_t>(p));
  cb.labels.resize(static_cast<std::size_t>(B));
  auto rng = keyed_rng(seed, Stream::kTest);
  for (int i = 0; i < B; ++i) {
    double norm = 0.0;
    double* row = cb.z.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(p);
    for (int k = 0; k < p; ++k) {
      row[k] = rng.normal();
      norm += row[k] * row[k];
    }
    norm = std::sqrt(norm);
    for (int k = 0; k < p; ++k) row[k] /= norm;
    cb.labels[static_cast<std::size_t>(i)] = static_cast<int>(rng.below(3));
  }
  return cb;
}

// Gram-Schmidt on a random Gaussian matrix.
std::vector<double> random_orthogonal(int p, std::uint64_t seed) {
  auto rng = keyed_rng(seed, Stream::kTest);
  std::vector<double> q(static_cast<std::size_t>(p) * static_cast<std::size_t>(p));
  for (int c = 0; c < p; ++c) {
    std::vector<double> v(static_cast<std::size_t>(p));
    for (auto& x : v) x = rng.normal();
    for (int prev = 0; prev < c; ++prev) {
      double dot = 0.0;
      for (int r = 0; r < p; ++r) dot += v[static_cast<std::size_t>(r)] * q[static_cast<std::size_t>(r) * p + prev];
      for (int r = 0; r < p; ++r) v[static_cast<std::size_t>(r)] -= dot * q[static_cast<std::size_t>(r) * p + prev];
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    for (int r = 0; r < p; ++r) q[static_cast<std::size_t>(r) * p + c] = v[static_cast<std::size_t>(r)] / norm;
  }
  return q;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

TEST_SUITE("losses") {

TEST_CASE("diffusion loss: perfect prediction and hand arithmetic") {
  const std::vector<double> eps{0.0, 0.0};
  CHECK(diffusion_loss(eps, eps, 1, 2) == 0.0);
  const std::vector<double> eps_hat{3.0, 4.0};
  CHECK(diffusion_loss(eps, eps_hat, 1, 2) == 25.0);
}

TEST_CASE("diffusion loss matches a naive double loop") {
  auto rng = keyed_rng(3, Stream::kTest);
  const int B = 13, dim = 7;
  std::vector<double> eps(B * dim), eps_hat(B * dim);
  for (auto& v : eps) v = rng.normal();
  for (auto& v : eps_hat) v = rng.normal();

  double expect = 0.0;
  for (int i = 0; i < B; ++i) {
    for (int d = 0; d < dim; ++d) {
      const double diff = eps[static_cast<std::size_t>(i * dim + d)] -
                          eps_hat[static_cast<std::size_t>(i * dim + d)];
      expect += diff * diff;
    }
  }
  expect /= B;
  CHECK(std::abs(diffusion_loss(eps, eps_hat, B, dim) - expect) <= 1e-12);
}

TEST_CASE("supcon: two-class four-point example") {
  ContrastiveBatch cb;
  cb.batch = 4;
  cb.proj_dim = 2;
  cb.tau_sc = 1.0;
  cb.z = {1, 0, 1, 0, 0, 1, 0, 1};
  cb.labels = {0, 0, 1, 1};
  const auto res = supcon_loss(cb);
  // each anchor: -log(e / (e + 2)) = log(1 + 2/e)
  const double expect = std::log(1.0 + 2.0 / std::exp(1.0));
  CHECK(res.value == doctest::Approx(expect).epsilon(1e-12));
  CHECK(res.value == doctest::Approx(0.551445).epsilon(1e-5));
  CHECK(res.contributing_anchors == 4);
  CHECK_FALSE(res.no_positive_pairs);
}

TEST_CASE("supcon: three identical embeddings, one label") {
  ContrastiveBatch cb;
  cb.batch = 3;
  cb.proj_dim = 2;
  cb.tau_sc = 1.0;
  cb.z = {1, 0, 1, 0, 1, 0};
  cb.labels = {5, 5, 5};
  const auto res = supcon_loss(cb);
  CHECK(std::abs(res.value - std::log(2.0)) <= 1e-9);
}

TEST_CASE("supcon: all labels distinct returns zero with the flag set") {
  ContrastiveBatch cb;
  cb.batch = 3;
  cb.proj_dim = 2;
  cb.tau_sc = 0.5;
  cb.z = {1, 0, 0, 1, -1, 0};
  cb.labels = {0, 1, 2};
  const auto res = supcon_loss(cb);
  CHECK(res.value == 0.0);
  CHECK(res.no_positive_pairs);
  CHECK(res.contributing_anchors == 0);
  CHECK(max_abs(res.dz) == 0.0);
}

TEST_CASE("supcon: sum reduction is anchors times the mean") {
  const auto cb = random_unit_batch(8, 4, 0.3, 71);
  const auto mean = supcon_loss(cb, SupconReduction::kMeanAnchors);
  const auto sum = supcon_loss(cb, SupconReduction::kSumAnchors);
  CHECK(sum.value ==
        doctest::Approx(mean.value * mean.contributing_anchors).epsilon(1e-12));
}

TEST_CASE("supcon rejects B < 2 and bad tau") {
  ContrastiveBatch cb;
  cb.batch = 1;
  cb.proj_dim = 2;
  cb.tau_sc = 1.0;
  cb.z = {1, 0};
  cb.labels = {0};
  CHECK_THROWS_AS(supcon_loss(cb), Error);
  cb.batch = 2;
  cb.z = {1, 0, 0, 1};
  cb.labels = {0, 0};
  cb.tau_sc = 0.0;
  CHECK_THROWS_AS(supcon_loss(cb), Error);
}

TEST_CASE("supcon is invariant under a joint rotation of the embeddings") {
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    const auto cb = random_unit_batch(10, 5, 0.2, seed);
    const auto base = supcon_loss(cb);

    const auto q = random_orthogonal(5, seed + 100);
    ContrastiveBatch rotated = cb;
    for (int i = 0; i < cb.batch; ++i) {
      for (int r = 0; r < 5; ++r) {
        double acc = 0.0;
        for (int c = 0; c < 5; ++c) {
          acc += q[static_cast<std::size_t>(r) * 5 + c] *
                 cb.z[static_cast<std::size_t>(i) * 5 + static_cast<std::size_t>(c)];
        }
        rotated.z[static_cast<std::size_t>(i) * 5 + static_cast<std::size_t>(r)] = acc;
      }
    }
    const auto rot = supcon_loss(rotated);
    CHECK(std::abs(rot.value - base.value) <= 1e-10);
  }
}

TEST_CASE("supcon is invariant under batch permutation") {
  const auto cb = random_unit_batch(9, 4, 0.15, 21);
  const auto base = supcon_loss(cb);

  std::vector<int> perm(9);
  std::iota(perm.begin(), perm.end(), 0);
  auto rng = keyed_rng(22, Stream::kTest);
  for (int i = 8; i > 0; --i) {
    std::swap(perm[static_cast<std::size_t>(i)],
              perm[rng.below(static_cast<std::uint64_t>(i + 1))]);
  }
  ContrastiveBatch shuffled = cb;
  for (int i = 0; i < 9; ++i) {
    shuffled.labels[static_cast<std::size_t>(i)] = cb.labels[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
    for (int k = 0; k < 4; ++k) {
      shuffled.z[static_cast<std::size_t>(i) * 4 + static_cast<std::size_t>(k)] =
          cb.z[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)]) * 4 + static_cast<std::size_t>(k)];
    }
  }
  const auto out = supcon_loss(shuffled);
  CHECK(std::abs(out.value - base.value) <= 1e-12);
}

TEST_CASE("lower temperature sharpens the gradient") {
  for (std::uint64_t seed : {31u, 32u, 33u}) {
    auto cb = random_unit_batch(12, 6, 0.5, seed);
    const double g_half = max_abs(supcon_loss(cb).dz);
    cb.tau_sc = 0.05;
    const double g_sharp = max_abs(supcon_loss(cb).dz);
    CHECK(g_sharp > g_half);
  }
}

TEST_CASE("supcon analytic z-gradient matches central finite differences") {
  for (std::uint64_t seed : {41u, 42u}) {
    auto cb = random_unit_batch(7, 5, 0.25, seed);
    const auto res = supcon_loss(cb);
    const double h = 1e-6;
    for (std::size_t idx = 0; idx < cb.z.size(); ++idx) {
      const double saved = cb.z[idx];
      cb.z[idx] = saved + h;
      const double up = supcon_loss(cb).value;
      cb.z[idx] = saved - h;
      const double down = supcon_loss(cb).value;
      cb.z[idx] = saved;
      const double fd = (up - down) / (2.0 * h);
      const double a = res.dz[idx];
      const double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-8});
      CHECK(rel < 1e-6);
    }
  }
}

TEST_CASE("coral loss assembly") {
  CHECK(coral_loss(1.25, 99.0, 0.0) == 1.25);
  CHECK(coral_loss(0.7, 0.0, 0.3) == 0.7);
  CHECK(coral_loss(1.0, 0.5, 0.0349034) == doctest::Approx(1.0174517).epsilon(1e-7));
  CHECK_THROWS_AS(coral_loss(1.0, 1.0, -0.1), Error);
}

}  // TEST_SUITE

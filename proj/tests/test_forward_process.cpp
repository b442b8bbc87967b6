#include <doctest.h>

#include <cmath>
#include <vector>

#include "coral/errors.hpp"
#include "coral/forward_process.hpp"
#include "coral/rng.hpp"

using namespace coral;

TEST_SUITE("forward_process") {

TEST_CASE("t = 0 is the identity") {
  const auto s = make_linear_schedule(50, 1e-4, 0.02);
  const std::vector<double> x0{1.5, -2.25, 0.0};
  const std::vector<double> eps{3.0, 3.0, 3.0};
  const auto xt = q_sample(x0, 0, eps, s);
  CHECK(xt == x0);
}

TEST_CASE("zero noise scales by sqrt(alpha_bar)") {
  const auto s = make_linear_schedule(50, 1e-3, 0.05);
  const std::vector<double> x0{2.0, -4.0};
  const std::vector<double> eps{0.0, 0.0};
  for (int t : {1, 17, 50}) {
    const auto xt = q_sample(x0, t, eps, s);
    const double scale = std::sqrt(s.alpha_bar_at(t));
    CHECK(xt[0] == doctest::Approx(scale * 2.0).epsilon(1e-15));
    CHECK(xt[1] == doctest::Approx(scale * -4.0).epsilon(1e-15));
  }
}

TEST_CASE("t beyond T is rejected, non-finite eps is rejected") {
  const auto s = make_linear_schedule(10, 1e-3, 0.05);
  const std::vector<double> x0{1.0};
  CHECK_THROWS_AS(q_sample(x0, 11, std::vector<double>{0.0}, s), Error);
  CHECK_THROWS_AS(q_sample(x0, 2, std::vector<double>{std::nan("")}, s), Error);
}

TEST_CASE("empirical variance at x0 = 0 matches 1 - alpha_bar within 2%") {
  const auto s = make_linear_schedule(100, 1e-4, 0.02);
  const std::vector<double> x0{0.0, 0.0};
  auto rng = keyed_rng(7, Stream::kTest);
  for (int t : {25, 50, 100}) {
    const int n = 100000;
    std::vector<double> acc(2, 0.0), acc2(2, 0.0);
    std::vector<double> eps(2);
    for (int i = 0; i < n; ++i) {
      eps[0] = rng.normal();
      eps[1] = rng.normal();
      const auto xt = q_sample(x0, t, eps, s);
      for (int d = 0; d < 2; ++d) {
        acc[d] += xt[d];
        acc2[d] += xt[d] * xt[d];
      }
    }
    const double expect = 1.0 - s.alpha_bar_at(t);
    for (int d = 0; d < 2; ++d) {
      const double mean = acc[d] / n;
      const double var = acc2[d] / n - mean * mean;
      CHECK(std::abs(var - expect) <= 0.02 * expect);
    }
  }
}

TEST_CASE("q_sample is linear in x0 and eps") {
  const auto s = make_linear_schedule(64, 1e-4, 0.03);
  auto rng = keyed_rng(11, Stream::kTest);
  for (int rep = 0; rep < 20; ++rep) {
    const int t = 1 + static_cast<int>(rng.below(64));
    std::vector<double> a(5), b(5), ea(5), eb(5);
    for (int i = 0; i < 5; ++i) {
      a[i] = rng.normal();
      b[i] = rng.normal();
      ea[i] = rng.normal();
      eb[i] = rng.normal();
    }
    const double ca = rng.uniform() * 4.0 - 2.0;
    const double cb = rng.uniform() * 4.0 - 2.0;
    std::vector<double> xs(5), es(5);
    for (int i = 0; i < 5; ++i) {
      xs[i] = ca * a[i] + cb * b[i];
      es[i] = ca * ea[i] + cb * eb[i];
    }
    const auto lhs = q_sample(xs, t, es, s);
    const auto ra = q_sample(a, t, ea, s);
    const auto rb = q_sample(b, t, eb, s);
    for (int i = 0; i < 5; ++i) {
      CHECK(std::abs(lhs[i] - (ca * ra[i] + cb * rb[i])) <= 1e-12);
    }
  }
}

TEST_CASE("T = 1 timesteps are all 1") {
  auto rng = keyed_rng(3, Stream::kTest);
  const auto ts = sample_timesteps(100, 1, rng);
  for (int t : ts) CHECK(t == 1);
}

TEST_CASE("timesteps are deterministic given the seed") {
  auto r1 = keyed_rng(123, Stream::kTimestep, 5);
  auto r2 = keyed_rng(123, Stream::kTimestep, 5);
  CHECK(sample_timesteps(64, 100, r1) == sample_timesteps(64, 100, r2));
}

TEST_CASE("timestep frequencies stay within 4 sigma of uniform") {
  const int T = 100;
  const int n = 100000;
  auto rng = keyed_rng(17, Stream::kTest);
  const auto ts = sample_timesteps(n, T, rng);
  std::vector<int> freq(static_cast<std::size_t>(T) + 1, 0);
  for (int t : ts) {
    REQUIRE(t >= 1);
    REQUIRE(t <= T);
    ++freq[static_cast<std::size_t>(t)];
  }
  const double p = 1.0 / T;
  const double sigma = std::sqrt(n * p * (1.0 - p));
  for (int t = 1; t <= T; ++t) {
    CHECK(std::abs(freq[static_cast<std::size_t>(t)] - n * p) <= 4.0 * sigma);
  }
}

}  // TEST_SUITE

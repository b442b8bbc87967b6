#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include "coral/dataset.hpp"
#include "coral/errors.hpp"

using namespace coral;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("class_counts reproduces the C = 10 long-tail split") {
  const auto counts = class_counts(5000, 0.01, 10);
  const std::vector<std::int64_t> expect{5000, 2997, 1796, 1077, 645, 387, 232, 139, 83, 50};
  CHECK(counts == expect);
  CHECK(std::accumulate(counts.begin(), counts.end(), std::int64_t{0}) == 12406);
}

TEST_CASE("class_counts reproduces the C = 100 long-tail split") {
  const auto counts = class_counts(500, 0.01, 100);
  CHECK(counts.front() == 500);
  CHECK(counts.back() == 5);
  CHECK(std::accumulate(counts.begin(), counts.end(), std::int64_t{0}) == 10847);
}

TEST_CASE("class_counts matches a long-double oracle on random inputs") {
  auto rng = keyed_rng(5, Stream::kTest);
  for (int rep = 0; rep < 200; ++rep) {
    const auto N = static_cast<std::int64_t>(1 + rng.below(20000));
    const double rho = 0.001 + 0.999 * rng.uniform();
    const int C = 2 + static_cast<int>(rng.below(64));
    const auto counts = class_counts(N, rho, C);
    for (int i = 0; i < C; ++i) {
      const long double v =
          static_cast<long double>(N) * std::pow(static_cast<long double>(rho),
                                                 static_cast<long double>(i) / (C - 1));
      CHECK(counts[static_cast<std::size_t>(i)] == static_cast<std::int64_t>(std::floor(v)));
    }
  }
}

TEST_CASE("class_counts is non-increasing with head N and tail floor(rho N)") {
  const auto counts = class_counts(2000, 0.01, 8);
  CHECK(counts.front() == 2000);
  CHECK(counts.back() == 20);
  for (std::size_t i = 1; i < counts.size(); ++i) CHECK(counts[i] <= counts[i - 1]);
}

TEST_CASE("rho = 1 keeps every class at N; C = 1 is just [N]") {
  CHECK(class_counts(123, 1.0, 7) == std::vector<std::int64_t>(7, 123));
  CHECK(class_counts(42, 0.5, 1) == std::vector<std::int64_t>{42});
}

TEST_CASE("class_counts rejects bad rho") {
  CHECK_THROWS_AS(class_counts(10, 0.0, 3), Error);
  CHECK_THROWS_AS(class_counts(10, -0.5, 3), Error);
  CHECK_THROWS_AS(class_counts(10, 1.5, 3), Error);
}

TEST_CASE("ring gaussians collapse to class centers as sigma tends to zero") {
  auto rng = keyed_rng(9, Stream::kDataGen);
  const auto data = make_ring_gaussians(4, {5, 5, 5, 5}, 2.0, 1e-9, 3, rng);
  REQUIRE(data.size() == 20);
  const double two_pi = 6.283185307179586;
  for (std::int64_t i = 0; i < data.size(); ++i) {
    const int c = data.labels[static_cast<std::size_t>(i)];
    const auto r = data.row(i);
    const double angle = two_pi * c / 4.0;
    CHECK(std::abs(r[0] - 2.0 * std::cos(angle)) <= 1e-6);
    CHECK(std::abs(r[1] - 2.0 * std::sin(angle)) <= 1e-6);
    CHECK(std::abs(r[2]) <= 1e-6);
  }
}

TEST_CASE("ring gaussians honor class_counts including the 20-sample tail") {
  const auto counts = class_counts(2000, 0.01, 8);
  auto rng = keyed_rng(1, Stream::kDataGen);
  const auto data = make_ring_gaussians(8, counts, 3.0, 0.5, 2, rng);
  CHECK(data.class_counts == counts);
  std::int64_t tail = 0;
  for (auto l : data.labels) {
    if (l == 7) ++tail;
  }
  CHECK(tail == 20);
}

TEST_CASE("ring gaussians are deterministic given the seed") {
  auto r1 = keyed_rng(77, Stream::kDataGen);
  auto r2 = keyed_rng(77, Stream::kDataGen);
  const auto a = make_ring_gaussians(3, {10, 7, 4}, 1.5, 0.3, 2, r1);
  const auto b = make_ring_gaussians(3, {10, 7, 4}, 1.5, 0.3, 2, r2);
  CHECK(a.samples == b.samples);
  CHECK(a.labels == b.labels);
}

TEST_CASE("ring gaussians reject all-zero counts and bad sigma") {
  auto rng = keyed_rng(0, Stream::kDataGen);
  CHECK_THROWS_AS(make_ring_gaussians(2, {0, 0}, 1.0, 0.1, 2, rng), Error);
  CHECK_THROWS_AS(make_ring_gaussians(2, {1, 1}, 1.0, 0.0, 2, rng), Error);
}

TEST_CASE("subsample_longtail with rho = 1 is a permutation of the input") {
  auto gen = keyed_rng(4, Stream::kDataGen);
  const auto balanced = make_ring_gaussians(3, {6, 6, 6}, 1.0, 0.4, 2, gen);
  auto rng = keyed_rng(4, Stream::kSubsample);
  const auto out = subsample_longtail(balanced, 1.0, rng);
  REQUIRE(out.size() == balanced.size());

  auto key = [&](const LabeledDataset& d, std::int64_t i) {
    std::string k;
    const auto r = d.row(i);
    for (double v : r) k += std::to_string(v) + ",";
    k += std::to_string(d.labels[static_cast<std::size_t>(i)]);
    return k;
  };
  std::multiset<std::string> a, b;
  for (std::int64_t i = 0; i < out.size(); ++i) {
    a.insert(key(balanced, i));
    b.insert(key(out, i));
  }
  CHECK(a == b);
}

TEST_CASE("subsample_longtail totals match the known corpus sizes") {
  // balanced 10 x 5000 at rho = 0.01 -> 12,406 kept
  {
    LabeledDataset balanced;
    balanced.dim = 1;
    balanced.num_classes = 10;
    balanced.class_counts.assign(10, 5000);
    for (int c = 0; c < 10; ++c) {
      for (int i = 0; i < 5000; ++i) {
        balanced.samples.push_back(static_cast<float>(i));
        balanced.labels.push_back(static_cast<std::uint16_t>(c));
      }
    }
    auto rng = keyed_rng(2, Stream::kSubsample);
    const auto out = subsample_longtail(balanced, 0.01, rng);
    CHECK(out.size() == 12406);
  }
  // balanced 100 x 500 at rho = 0.01 -> 10,847 kept
  {
    LabeledDataset balanced;
    balanced.dim = 1;
    balanced.num_classes = 100;
    balanced.class_counts.assign(100, 500);
    for (int c = 0; c < 100; ++c) {
      for (int i = 0; i < 500; ++i) {
        balanced.samples.push_back(static_cast<float>(i));
        balanced.labels.push_back(static_cast<std::uint16_t>(c));
      }
    }
    auto rng = keyed_rng(2, Stream::kSubsample);
    const auto out = subsample_longtail(balanced, 0.01, rng);
    CHECK(out.size() == 10847);
    CHECK(out.class_counts.front() == 500);
    CHECK(out.class_counts.back() == 5);
  }
}

TEST_CASE("subsample_longtail never duplicates a sample") {
  // distinct coordinates so duplicates are detectable
  LabeledDataset balanced;
  balanced.dim = 1;
  balanced.num_classes = 4;
  balanced.class_counts.assign(4, 50);
  float v = 0.0f;
  for (int c = 0; c < 4; ++c) {
    for (int i = 0; i < 50; ++i) {
      balanced.samples.push_back(v += 1.0f);
      balanced.labels.push_back(static_cast<std::uint16_t>(c));
    }
  }
  auto rng = keyed_rng(31, Stream::kSubsample);
  const auto out = subsample_longtail(balanced, 0.1, rng);
  std::set<float> seen;
  for (float s : out.samples) CHECK(seen.insert(s).second);
}

TEST_CASE("subsample_longtail rejects imbalanced input") {
  auto gen = keyed_rng(4, Stream::kDataGen);
  const auto uneven = make_ring_gaussians(2, {5, 3}, 1.0, 0.4, 2, gen);
  auto rng = keyed_rng(4, Stream::kSubsample);
  CHECK_THROWS_AS(subsample_longtail(uneven, 0.5, rng), Error);
}

TEST_CASE("dataset file round-trip is the identity") {
  auto gen = keyed_rng(8, Stream::kDataGen);
  const auto data = make_ring_gaussians(5, {9, 7, 5, 3, 2}, 2.5, 0.7, 4, gen);
  const auto path = temp_path("coral_test_roundtrip.ltds");
  write_dataset(data, path);
  const auto back = read_dataset(path);
  CHECK(back.dim == data.dim);
  CHECK(back.num_classes == data.num_classes);
  CHECK(back.samples == data.samples);
  CHECK(back.labels == data.labels);
  CHECK(back.class_counts == data.class_counts);
  std::remove(path.c_str());
}

TEST_CASE("empty dataset writes and reads back empty") {
  LabeledDataset empty;
  empty.dim = 3;
  empty.num_classes = 2;
  empty.class_counts = {0, 0};
  const auto path = temp_path("coral_test_empty.ltds");
  write_dataset(empty, path);
  const auto back = read_dataset(path);
  CHECK(back.size() == 0);
  CHECK(back.dim == 3);
  CHECK(back.num_classes == 2);
  std::remove(path.c_str());
}

TEST_CASE("corrupted magic, truncation and bad labels give distinct errors") {
  auto gen = keyed_rng(8, Stream::kDataGen);
  const auto data = make_ring_gaussians(2, {3, 3}, 1.0, 0.5, 2, gen);
  const auto path = temp_path("coral_test_corrupt.ltds");

  write_dataset(data, path);
  {
    std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
    f.seekp(0);
    f.write("XXXXX", 5);
  }
  try {
    read_dataset(path);
    FAIL("expected bad magic");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kBadMagic);
  }

  write_dataset(data, path);
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 3);
  try {
    read_dataset(path);
    FAIL("expected truncation");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kTruncated);
  }

  write_dataset(data, path);
  {
    // last two bytes are the final record's label
    std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
    f.seekp(static_cast<std::streamoff>(std::filesystem::file_size(path)) - 2);
    const unsigned char bad[2] = {0xFF, 0xFF};
    f.write(reinterpret_cast<const char*>(bad), 2);
  }
  try {
    read_dataset(path);
    FAIL("expected bad label");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kBadLabel);
  }
  std::remove(path.c_str());
}

}  // TEST_SUITE

#include "coral/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "coral/errors.hpp"

namespace coral {

namespace {

constexpr char kMagic[5] = {'L', 'T', 'D', 'S', '1'};

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u16(std::ostream& os, std::uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
  os.write(reinterpret_cast<const char*>(b), 2);
}

void put_f32(std::ostream& os, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(os, bits);
}

bool get_u32(std::istream& is, std::uint32_t& v) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) return false;
  v = static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
      static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
  return true;
}

bool get_u16(std::istream& is, std::uint16_t& v) {
  unsigned char b[2];
  if (!is.read(reinterpret_cast<char*>(b), 2)) return false;
  v = static_cast<std::uint16_t>(b[0] | b[1] << 8);
  return true;
}

bool get_f32(std::istream& is, float& v) {
  std::uint32_t bits;
  if (!get_u32(is, bits)) return false;
  std::memcpy(&v, &bits, 4);
  return true;
}

std::vector<std::int64_t> count_labels(const std::vector<std::uint16_t>& labels, int num_classes) {
  std::vector<std::int64_t> counts(static_cast<std::size_t>(num_classes), 0);
  for (auto l : labels) ++counts[l];
  return counts;
}

}  // namespace

std::vector<double> LabeledDataset::row(std::int64_t i) const {
  const auto* p = samples.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(dim);
  return std::vector<double>(p, p + dim);
}

std::vector<std::int64_t> class_counts(std::int64_t head_count, double rho, int num_classes) {
  require(head_count >= 1, Errc::kConfig, "class_counts: head count must be >= 1");
  require(rho > 0.0 && rho <= 1.0, Errc::kConfig, "class_counts: rho must be in (0, 1]");
  require(num_classes >= 1, Errc::kConfig, "class_counts: need at least one class");

  std::vector<std::int64_t> counts(static_cast<std::size_t>(num_classes));
  if (num_classes == 1) {
    counts[0] = head_count;  // a single class has no tail
    return counts;
  }
  for (int i = 0; i < num_classes; ++i) {
    const double expo = static_cast<double>(i) / static_cast<double>(num_classes - 1);
    counts[static_cast<std::size_t>(i)] =
        static_cast<std::int64_t>(std::floor(static_cast<double>(head_count) * std::pow(rho, expo)));
  }
  return counts;
}

LabeledDataset make_ring_gaussians(int num_classes, const std::vector<std::int64_t>& counts,
                                   double radius, double sigma, int dim, Rng& rng) {
  require(num_classes >= 1, Errc::kConfig, "make_ring_gaussians: need at least one class");
  require(static_cast<int>(counts.size()) == num_classes, Errc::kConfig,
          "make_ring_gaussians: counts size != num_classes");
  require(dim >= 2, Errc::kConfig, "make_ring_gaussians: dim must be >= 2");
  require(sigma > 0.0, Errc::kConfig, "make_ring_gaussians: sigma must be positive");

  std::int64_t total = 0;
  for (auto c : counts) {
    require(c >= 0, Errc::kConfig, "make_ring_gaussians: negative class count");
    total += c;
  }
  require(total > 0, Errc::kConfig, "make_ring_gaussians: all class counts are zero");

  LabeledDataset out;
  out.dim = dim;
  out.num_classes = num_classes;
  out.samples.reserve(static_cast<std::size_t>(total) * static_cast<std::size_t>(dim));
  out.labels.reserve(static_cast<std::size_t>(total));

  const double two_pi = 6.283185307179586476925286766559;
  for (int c = 0; c < num_classes; ++c) {
    const double angle = two_pi * static_cast<double>(c) / static_cast<double>(num_classes);
    const double cx = radius * std::cos(angle);
    const double cy = radius * std::sin(angle);
    for (std::int64_t j = 0; j < counts[static_cast<std::size_t>(c)]; ++j) {
      for (int d = 0; d < dim; ++d) {
        const double center = d == 0 ? cx : (d == 1 ? cy : 0.0);
        out.samples.push_back(static_cast<float>(center + sigma * rng.normal()));
      }
      out.labels.push_back(static_cast<std::uint16_t>(c));
    }
  }
  out.class_counts = counts;
  return out;
}

LabeledDataset subsample_longtail(const LabeledDataset& balanced, double rho, Rng& rng) {
  require(balanced.size() > 0, Errc::kConfig, "subsample_longtail: empty input");
  const std::int64_t per_class = balanced.class_counts.empty() ? 0 : balanced.class_counts[0];
  for (auto c : balanced.class_counts) {
    require(c == per_class, Errc::kConfig, "subsample_longtail: input is not balanced");
  }
  require(per_class >= 1, Errc::kConfig, "subsample_longtail: empty classes");

  const auto target = class_counts(per_class, rho, balanced.num_classes);

  // Index lists per class, in input order.
  std::vector<std::vector<std::int64_t>> by_class(static_cast<std::size_t>(balanced.num_classes));
  for (std::int64_t i = 0; i < balanced.size(); ++i) {
    by_class[balanced.labels[static_cast<std::size_t>(i)]].push_back(i);
  }

  LabeledDataset out;
  out.dim = balanced.dim;
  out.num_classes = balanced.num_classes;
  out.class_counts = target;
  for (int c = 0; c < balanced.num_classes; ++c) {
    auto& idx = by_class[static_cast<std::size_t>(c)];
    const std::int64_t keep = target[static_cast<std::size_t>(c)];
    require(keep <= static_cast<std::int64_t>(idx.size()), Errc::kConfig,
            "subsample_longtail: class " + std::to_string(c) + " has too few samples");
    // Partial Fisher-Yates: draws without replacement.
    for (std::int64_t j = 0; j < keep; ++j) {
      const auto pick = j + static_cast<std::int64_t>(
                                rng.below(static_cast<std::uint64_t>(idx.size() - static_cast<std::size_t>(j))));
      std::swap(idx[static_cast<std::size_t>(j)], idx[static_cast<std::size_t>(pick)]);
      const std::int64_t src = idx[static_cast<std::size_t>(j)];
      const auto* p = balanced.samples.data() + static_cast<std::size_t>(src) * static_cast<std::size_t>(balanced.dim);
      out.samples.insert(out.samples.end(), p, p + balanced.dim);
      out.labels.push_back(static_cast<std::uint16_t>(c));
    }
  }
  return out;
}

void write_dataset(const LabeledDataset& data, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  require(os.good(), Errc::kIo, "write_dataset: cannot open " + path);
  os.write(kMagic, 5);
  put_u32(os, static_cast<std::uint32_t>(data.size()));
  put_u32(os, static_cast<std::uint32_t>(data.dim));
  put_u32(os, static_cast<std::uint32_t>(data.num_classes));
  for (std::int64_t i = 0; i < data.size(); ++i) {
    const auto* p = data.samples.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(data.dim);
    for (int d = 0; d < data.dim; ++d) put_f32(os, p[d]);
    put_u16(os, data.labels[static_cast<std::size_t>(i)]);
  }
  os.flush();
  require(os.good(), Errc::kIo, "write_dataset: write failed for " + path);
}

LabeledDataset read_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(is.good(), Errc::kIo, "read_dataset: cannot open " + path);

  char magic[5];
  if (!is.read(magic, 5) || std::memcmp(magic, kMagic, 5) != 0) {
    fail(Errc::kBadMagic, "read_dataset: bad magic in " + path);
  }
  std::uint32_t n = 0, dim = 0, num_classes = 0;
  if (!get_u32(is, n) || !get_u32(is, dim) || !get_u32(is, num_classes)) {
    fail(Errc::kTruncated, "read_dataset: truncated header in " + path);
  }
  require(dim >= 1 && num_classes >= 1, Errc::kTruncated, "read_dataset: degenerate header in " + path);

  LabeledDataset out;
  out.dim = static_cast<int>(dim);
  out.num_classes = static_cast<int>(num_classes);
  out.samples.resize(static_cast<std::size_t>(n) * dim);
  out.labels.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t d = 0; d < dim; ++d) {
      if (!get_f32(is, out.samples[static_cast<std::size_t>(i) * dim + d])) {
        fail(Errc::kTruncated, "read_dataset: truncated payload in " + path);
      }
    }
    if (!get_u16(is, out.labels[i])) {
      fail(Errc::kTruncated, "read_dataset: truncated payload in " + path);
    }
    if (out.labels[i] >= num_classes) {
      fail(Errc::kBadLabel, "read_dataset: label " + std::to_string(out.labels[i]) +
                                " >= num_classes in " + path);
    }
  }
  out.class_counts = count_labels(out.labels, out.num_classes);
  return out;
}

}  // namespace coral

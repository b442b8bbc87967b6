#include "coral/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

#include "coral/errors.hpp"

namespace coral {

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
  put_u32(os, static_cast<std::uint32_t>(v));
  put_u32(os, static_cast<std::uint32_t>(v >> 32));
}

void put_f32(std::ostream& os, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(os, bits);
}

void put_f64(std::ostream& os, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(os, bits);
}

std::uint32_t get_u32(std::istream& is, const std::string& path) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) {
    fail(Errc::kTruncated, "checkpoint: truncated file " + path);
  }
  return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
         static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}

std::uint64_t get_u64(std::istream& is, const std::string& path) {
  const std::uint64_t lo = get_u32(is, path);
  const std::uint64_t hi = get_u32(is, path);
  return lo | hi << 32;
}

float get_f32(std::istream& is, const std::string& path) {
  const std::uint32_t bits = get_u32(is, path);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

double get_f64(std::istream& is, const std::string& path) {
  const std::uint64_t bits = get_u64(is, path);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

void put_arch(std::ostream& os, const ArchConfig& a) {
  put_u32(os, static_cast<std::uint32_t>(a.dim));
  put_u32(os, static_cast<std::uint32_t>(a.hidden));
  put_u32(os, static_cast<std::uint32_t>(a.bottleneck));
  put_u32(os, static_cast<std::uint32_t>(a.proj_dim));
  put_u32(os, static_cast<std::uint32_t>(a.time_embed_dim));
  put_u32(os, static_cast<std::uint32_t>(a.num_classes));
}

ArchConfig get_arch(std::istream& is, const std::string& path) {
  ArchConfig a;
  a.dim = static_cast<int>(get_u32(is, path));
  a.hidden = static_cast<int>(get_u32(is, path));
  a.bottleneck = static_cast<int>(get_u32(is, path));
  a.proj_dim = static_cast<int>(get_u32(is, path));
  a.time_embed_dim = static_cast<int>(get_u32(is, path));
  a.num_classes = static_cast<int>(get_u32(is, path));
  a.validate();
  return a;
}

// Write to a temp file and rename so a failed run never leaves a partial
// checkpoint behind.
class AtomicFile {
 public:
  explicit AtomicFile(const std::string& path) : path_(path), tmp_(path + ".tmp"), os_(tmp_, std::ios::binary | std::ios::trunc) {
    require(os_.good(), Errc::kIo, "checkpoint: cannot open " + tmp_);
  }
  std::ostream& stream() { return os_; }
  void commit() {
    os_.flush();
    require(os_.good(), Errc::kIo, "checkpoint: write failed for " + tmp_);
    os_.close();
    require(std::rename(tmp_.c_str(), path_.c_str()) == 0, Errc::kIo,
            "checkpoint: cannot rename " + tmp_ + " to " + path_);
  }

 private:
  std::string path_;
  std::string tmp_;
  std::ofstream os_;
};

}  // namespace

void save_checkpoint_v1(const DenoiserModel& model, const std::string& path) {
  AtomicFile file(path);
  auto& os = file.stream();
  const unsigned char version = 1;
  os.write(reinterpret_cast<const char*>(&version), 1);
  put_arch(os, model.arch);
  for (double p : model.params) put_f32(os, static_cast<float>(p));
  file.commit();
}

void save_checkpoint_v2(const TrainState& state, const ScheduleParams& schedule,
                        const std::string& path) {
  require(state.adam.m.size() == state.model.params.size() &&
              state.adam.v.size() == state.model.params.size(),
          Errc::kConfig, "checkpoint: adam state shape mismatch");
  AtomicFile file(path);
  auto& os = file.stream();
  const unsigned char version = 2;
  os.write(reinterpret_cast<const char*>(&version), 1);
  put_arch(os, state.model.arch);
  put_u32(os, static_cast<std::uint32_t>(schedule.T));
  put_f64(os, schedule.beta_min);
  put_f64(os, schedule.beta_max);
  put_u64(os, static_cast<std::uint64_t>(state.step));
  for (double p : state.model.params) put_f64(os, p);
  for (double m : state.adam.m) put_f64(os, m);
  for (double v : state.adam.v) put_f64(os, v);
  file.commit();
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(is.good(), Errc::kIo, "checkpoint: cannot open " + path);

  unsigned char version = 0;
  if (!is.read(reinterpret_cast<char*>(&version), 1)) {
    fail(Errc::kTruncated, "checkpoint: empty file " + path);
  }
  require(version == 1 || version == 2, Errc::kBadMagic,
          "checkpoint: unknown format version " + std::to_string(version) + " in " + path);

  LoadedCheckpoint out;
  out.version = version;
  out.model.arch = get_arch(is, path);
  const std::size_t n = param_count(out.model.arch);
  out.model.params.resize(n);

  if (version == 1) {
    for (auto& p : out.model.params) p = static_cast<double>(get_f32(is, path));
  } else {
    ScheduleParams sp;
    sp.T = static_cast<int>(get_u32(is, path));
    sp.beta_min = get_f64(is, path);
    sp.beta_max = get_f64(is, path);
    out.schedule = sp;
    out.step = static_cast<long long>(get_u64(is, path));
    for (auto& p : out.model.params) p = get_f64(is, path);
    AdamState adam;
    adam.m.resize(n);
    adam.v.resize(n);
    for (auto& m : adam.m) m = get_f64(is, path);
    for (auto& v : adam.v) v = get_f64(is, path);
    adam.step = out.step;
    out.adam = std::move(adam);
  }

  // Trailing bytes mean the file does not match the declared architecture.
  char extra;
  if (is.read(&extra, 1)) {
    fail(Errc::kBadMagic, "checkpoint: trailing bytes in " + path + " (arch mismatch?)");
  }
  return out;
}

}  // namespace coral

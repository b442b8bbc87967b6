#pragma once

#include <stdexcept>
#include <string>

namespace coral {

// Error categories; the CLI maps these onto process exit codes
// (config -> 2, data -> 3, numeric -> 4).
enum class Errc {
  kConfig,
  kBadMagic,
  kTruncated,
  kBadLabel,
  kData,  // semantic mismatch between otherwise well-formed inputs
  kIo,
  kNumeric,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, Errc code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace coral

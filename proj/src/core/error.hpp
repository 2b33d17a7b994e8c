#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace avds {

using cplx = std::complex<double>;
using CVec = std::vector<cplx>;
using RVec = std::vector<double>;

// Error classes surfaced through the C API and the CLI. Keep in sync with
// avds_status in include/avds/avds.h.
enum class ErrorCode {
  InvalidArgument = 1,
  DimensionMismatch,
  OutOfRange,
  Infeasible,
  Singular,
  Convergence,
  Unsupported,
  Io,
  Parse,
};

const char* error_class_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace avds

#include "fourier.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>
#include <vector>

namespace avds {
namespace {

// FFTW planning is not thread-safe, execution with new-array execute is.
// Plans are created once per shape and kept for the process lifetime.
class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(std::size_t rows, std::size_t cols, bool inverse) {
    const auto key = std::make_tuple(rows, cols, inverse);
    std::lock_guard<std::mutex> lock(mu_);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    const std::size_t total = rows * cols;
    auto* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * total));
    const int sign = inverse ? FFTW_BACKWARD : FFTW_FORWARD;
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fftw_plan plan =
        cols == 1 ? fftw_plan_dft_1d(static_cast<int>(rows), buf, buf, sign, flags)
                  : fftw_plan_dft_2d(static_cast<int>(cols), static_cast<int>(rows),
                                     buf, buf, sign, flags);
    fftw_free(buf);
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mu_;
  std::map<std::tuple<std::size_t, std::size_t, bool>, fftw_plan> plans_;
};

PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

void fwht_strided(cplx* x, std::size_t n, std::size_t stride) {
  for (std::size_t h = 1; h < n; h *= 2) {
    for (std::size_t i = 0; i < n; i += 2 * h) {
      for (std::size_t j = i; j < i + h; ++j) {
        const cplx a = x[j * stride];
        const cplx b = x[(j + h) * stride];
        x[j * stride] = a + b;
        x[(j + h) * stride] = a - b;
      }
    }
  }
}

}  // namespace

void unitary_dft(std::span<cplx> data, std::size_t rows, std::size_t cols,
                 bool inverse) {
  require(data.size() == rows * cols, ErrorCode::DimensionMismatch,
          "dft input length mismatch");
  fftw_plan plan = plan_cache().get(rows, cols, inverse);
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan, p, p);
  const double scale = 1.0 / std::sqrt(static_cast<double>(rows * cols));
  for (auto& v : data) v *= scale;
}

void hadamard_2d(std::span<cplx> img, std::size_t side) {
  require(img.size() == side * side, ErrorCode::DimensionMismatch,
          "hadamard input length mismatch");
  for (std::size_t j = 0; j < side; ++j) fwht_strided(img.data() + j * side, side, 1);
  for (std::size_t i = 0; i < side; ++i) fwht_strided(img.data() + i, side, side);
  const double scale = 1.0 / static_cast<double>(side);
  for (auto& v : img) v *= scale;
}

}  // namespace avds

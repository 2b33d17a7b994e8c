#include "wavelet.hpp"

#include <array>
#include <cmath>
#include <vector>

namespace avds {
namespace {

const std::array<double, 2> kHaar = {0.70710678118654752440,
                                     0.70710678118654752440};

const std::array<double, 8> kDb4 = {
    0.23037781330889650,  0.71484657055291565,   0.63088076792985891,
    -0.027983769416859854, -0.18703481171909308,  0.030841381835560764,
    0.032883011666885200, -0.010597401785069032,
};

// One analysis level on x[0..n): approx to the front half, detail to the
// back half. Periodic boundary.
void analysis_step(cplx* x, std::size_t n, std::span<const double> h,
                   std::vector<cplx>& tmp) {
  const std::size_t taps = h.size();
  const std::size_t half = n / 2;
  tmp.assign(n, cplx{});
  for (std::size_t i = 0; i < half; ++i) {
    cplx a{}, d{};
    for (std::size_t k = 0; k < taps; ++k) {
      const cplx v = x[(2 * i + k) % n];
      const double g = (k % 2 == 0 ? 1.0 : -1.0) * h[taps - 1 - k];
      a += h[k] * v;
      d += g * v;
    }
    tmp[i] = a;
    tmp[half + i] = d;
  }
  std::copy(tmp.begin(), tmp.end(), x);
}

// Exact transpose of analysis_step.
void synthesis_step(cplx* x, std::size_t n, std::span<const double> h,
                    std::vector<cplx>& tmp) {
  const std::size_t taps = h.size();
  const std::size_t half = n / 2;
  tmp.assign(n, cplx{});
  for (std::size_t i = 0; i < half; ++i) {
    const cplx a = x[i];
    const cplx d = x[half + i];
    for (std::size_t k = 0; k < taps; ++k) {
      const double g = (k % 2 == 0 ? 1.0 : -1.0) * h[taps - 1 - k];
      tmp[(2 * i + k) % n] += h[k] * a + g * d;
    }
  }
  std::copy(tmp.begin(), tmp.end(), x);
}

void check_levels(std::size_t n, int levels) {
  require(n >= 2 && (n & (n - 1)) == 0, ErrorCode::InvalidArgument,
          "wavelet length must be a power of two >= 2, got " +
              std::to_string(n));
  require(levels >= 1 && (std::size_t{1} << levels) <= n,
          ErrorCode::InvalidArgument,
          "wavelet depth " + std::to_string(levels) +
              " out of range for length " + std::to_string(n));
}

// Applies `step` to the first `len` entries of every column (axis 0) or
// row (axis 1) of the top-left len x len block of a column-major n x n
// image.
template <typename Step>
void along_axis(cplx* img, std::size_t n, std::size_t len, int axis,
                Step step) {
  std::vector<cplx> line(len);
  for (std::size_t j = 0; j < len; ++j) {
    if (axis == 0) {
      step(img + j * n, len);
    } else {
      for (std::size_t i = 0; i < len; ++i) line[i] = img[j + i * n];
      step(line.data(), len);
      for (std::size_t i = 0; i < len; ++i) img[j + i * n] = line[i];
    }
  }
}

}  // namespace

std::span<const double> scaling_filter(Wavelet w) {
  if (w == Wavelet::Haar) return kHaar;
  return kDb4;
}

void analyze_1d(std::span<cplx> x, Wavelet w, int levels) {
  check_levels(x.size(), levels);
  std::vector<cplx> tmp;
  std::size_t len = x.size();
  for (int l = 0; l < levels; ++l, len /= 2)
    analysis_step(x.data(), len, scaling_filter(w), tmp);
}

void synthesize_1d(std::span<cplx> x, Wavelet w, int levels) {
  check_levels(x.size(), levels);
  std::vector<cplx> tmp;
  for (int l = levels - 1; l >= 0; --l)
    synthesis_step(x.data(), x.size() >> l, scaling_filter(w), tmp);
}

void analyze_2d(std::span<cplx> img, std::size_t n, Wavelet w, int levels) {
  require(img.size() == n * n, ErrorCode::DimensionMismatch,
          "image size does not match side^2");
  check_levels(n, levels);
  std::vector<cplx> tmp;
  auto step = [&](cplx* p, std::size_t len) {
    analysis_step(p, len, scaling_filter(w), tmp);
  };
  std::size_t len = n;
  for (int l = 0; l < levels; ++l, len /= 2) {
    along_axis(img.data(), n, len, 0, step);
    along_axis(img.data(), n, len, 1, step);
  }
}

void synthesize_2d(std::span<cplx> img, std::size_t n, Wavelet w,
                   int levels) {
  require(img.size() == n * n, ErrorCode::DimensionMismatch,
          "image size does not match side^2");
  check_levels(n, levels);
  std::vector<cplx> tmp;
  auto step = [&](cplx* p, std::size_t len) {
    synthesis_step(p, len, scaling_filter(w), tmp);
  };
  for (int l = levels - 1; l >= 0; --l) {
    const std::size_t len = n >> l;
    along_axis(img.data(), n, len, 1, step);
    along_axis(img.data(), n, len, 0, step);
  }
}

void analyze_tensor(std::span<cplx> img, std::size_t n, Wavelet w,
                    int levels) {
  require(img.size() == n * n, ErrorCode::DimensionMismatch,
          "image size does not match side^2");
  check_levels(n, levels);
  auto full = [&](cplx* p, std::size_t len) {
    analyze_1d(std::span<cplx>(p, len), w, levels);
  };
  along_axis(img.data(), n, n, 0, full);
  along_axis(img.data(), n, n, 1, full);
}

void synthesize_tensor(std::span<cplx> img, std::size_t n, Wavelet w,
                       int levels) {
  require(img.size() == n * n, ErrorCode::DimensionMismatch,
          "image size does not match side^2");
  check_levels(n, levels);
  auto full = [&](cplx* p, std::size_t len) {
    synthesize_1d(std::span<cplx>(p, len), w, levels);
  };
  along_axis(img.data(), n, n, 1, full);
  along_axis(img.data(), n, n, 0, full);
}

}  // namespace avds

#pragma once

#include <cstddef>
#include <cmath>
#include <span>

#include "error.hpp"

namespace avds {

// Unitary DFT, F[k,n] = exp(-2 pi i k n / N) / sqrt(N). `inverse` applies
// F*. For 2D pass rows = cols = side; the data are column-major.
void unitary_dft(std::span<cplx> data, std::size_t rows, std::size_t cols,
                 bool inverse);

// Orthonormal Walsh-Hadamard transform in Sylvester (natural) order along
// both axes of a column-major side x side image. Self-inverse.
void hadamard_2d(std::span<cplx> img, std::size_t side);

// Entry H[k, p] of the orthonormal Sylvester Hadamard matrix of order n.
inline double hadamard_entry(std::size_t k, std::size_t p, std::size_t n) {
  const double s = 1.0 / std::sqrt(static_cast<double>(n));
  return (__builtin_popcountll(k & p) & 1) ? -s : s;
}

}  // namespace avds

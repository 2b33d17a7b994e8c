#pragma once

#include <cstddef>
#include <span>

#include "error.hpp"

namespace avds {

enum class Wavelet { Haar, DB4 };

// Orthonormal scaling filter (h). The wavelet filter is the quadrature
// mirror g_k = (-1)^k h_{L-1-k}. DB4 is the 8-tap Daubechies filter with
// four vanishing moments.
std::span<const double> scaling_filter(Wavelet w);

// Periodic orthonormal transforms. All lengths must be powers of two and
// 2^levels must divide the length. Coefficients are stored as
// [approx | coarsest detail | ... | finest detail].
void analyze_1d(std::span<cplx> x, Wavelet w, int levels);
void synthesize_1d(std::span<cplx> x, Wavelet w, int levels);

// Square multilevel transform on a column-major n x n image: each level
// filters the columns and then the rows of the current approximation
// block and recurses into its top-left quadrant.
void analyze_2d(std::span<cplx> img, std::size_t n, Wavelet w, int levels);
void synthesize_2d(std::span<cplx> img, std::size_t n, Wavelet w, int levels);

// Separable transform psi (x) psi: a full 1D multilevel transform along
// every column, then along every row.
void analyze_tensor(std::span<cplx> img, std::size_t n, Wavelet w, int levels);
void synthesize_tensor(std::span<cplx> img, std::size_t n, Wavelet w,
                       int levels);

}  // namespace avds

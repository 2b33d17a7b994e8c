#pragma once

#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "partition.hpp"
#include "support_model.hpp"
#include "transforms.hpp"

namespace avds {

enum class DensityKind { AdaptedIsolated, AdaptedBlocks, Uniform, Coherence, Polynomial };

std::string to_string(DensityKind kind);

// Probability vector over rows or blocks. `normalizer` is L, the sum of
// the unnormalised numerators.
struct Density {
  RVec pi;
  double normalizer = 1.0;
  DensityKind kind = DensityKind::Uniform;

  std::size_t size() const { return pi.size(); }
};

// pi_k proportional to max{a_k D_w a_k*, ||a_k||_inf^2}, the sup norm taken
// over the columns with positive weight.
Density adapted_isolated(const Operator& op, const WeightVector& weights);

// ||B D_w B*||_{2,2} for a block given as its rows.
double block_gram_opnorm(std::span<const CVec> rows, std::span<const double> weights);

// ||B* B||_{inf,1}, the largest entry modulus of B* B.
double block_inf1_norm(std::span<const CVec> rows);
// As above over the columns with positive weight only. Columns that never
// enter a support are zeroed, as in the identity case.
double block_inf1_norm(std::span<const CVec> rows, std::span<const double> weights);

enum class BlockMethod { ClosedFormLines, Generic };

// pi_k proportional to max{||B_k D_w B_k*||, ||B_k* B_k||_{inf,1}}.
// ClosedFormLines needs A0 = phi (x) phi and a line partition.
Density adapted_blocks(const Operator& op, const BlockPartition& partition,
                       const WeightVector& weights, BlockMethod method);

enum class BaselineKind { Uniform, Coherence, Polynomial };

// Polynomial: cell (k1,k2) of a 2D DFT grid gets (k1^2 + k2^2)^(-exponent)
// on signed frequencies; the DC cell takes the (1,1) value. Block masses
// are summed over the block's cells.
Density baseline_density(BaselineKind kind, const Operator& op, const BlockPartition& partition,
                         double exponent = 2.5);

enum class LevelsLayout { Dyadic1D, RowwiseDyadic2D };

// Dyadic bands over coefficient indices, 0-based: Omega_0 = {0, 1},
// Omega_j = {2^j, ..., 2^{j+1} - 1} for j = 1..J (K = 2^{J+1}).
// For RowwiseDyadic2D the bands run over the column index of W and
// `row_max` holds S^r_l = max_k ||W_{k, Omega_l}||_1.
struct LevelsSummary {
  RVec level_mass;
  RVec row_max;
};

LevelsSummary levels_summary(std::span<const double> weights, LevelsLayout layout);

// Signed frequency of storage index k on a length-n DFT axis, in
// (-n/2, n/2].
inline long signed_frequency(std::size_t k, std::size_t n) {
  return k <= n / 2 ? static_cast<long>(k) : static_cast<long>(k) - static_cast<long>(n);
}

}  // namespace avds

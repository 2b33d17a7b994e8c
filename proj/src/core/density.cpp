#include "density.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>

namespace avds {
namespace {

constexpr std::size_t kMaxBlockRows = 4096;

Density normalized(RVec numerators, DensityKind kind) {
  double total = 0.0;
  for (double v : numerators) {
    require(std::isfinite(v) && v >= 0.0, ErrorCode::InvalidArgument,
            "density numerator is negative or not finite");
    total += v;
  }
  require(total > 0.0, ErrorCode::InvalidArgument, "density numerators sum to zero");
  Density d;
  d.kind = kind;
  d.normalizer = total;
  d.pi = std::move(numerators);
  for (double& v : d.pi) v /= total;
  return d;
}

void check_weights(const Operator& op, const WeightVector& weights) {
  require(weights.size() == op.size(), ErrorCode::DimensionMismatch,
          "weight vector has length " + std::to_string(weights.size()) + ", operator has " +
              std::to_string(op.size()) + " columns");
  for (double w : weights.values)
    require(w >= 0.0 && w <= 1.0, ErrorCode::InvalidArgument, "weights must lie in [0,1]");
}

}  // namespace

std::string to_string(DensityKind kind) {
  switch (kind) {
    case DensityKind::AdaptedIsolated: return "adapted";
    case DensityKind::AdaptedBlocks: return "adapted-blocks";
    case DensityKind::Uniform: return "uniform";
    case DensityKind::Coherence: return "coherence";
    case DensityKind::Polynomial: return "polynomial";
  }
  return "unknown";
}

Density adapted_isolated(const Operator& op, const WeightVector& weights) {
  check_weights(op, weights);
  const std::size_t size = op.size();
  RVec numerators(size);
  for (std::size_t k = 0; k < size; ++k) {
    const CVec a = op.row(k);
    double quad = 0.0, peak = 0.0;
    for (std::size_t l = 0; l < size; ++l) {
      const double m2 = std::norm(a[l]);
      quad += m2 * weights.values[l];
      if (weights.values[l] > 0.0) peak = std::max(peak, m2);
    }
    numerators[k] = std::max(quad, peak);
  }
  return normalized(std::move(numerators), DensityKind::AdaptedIsolated);
}

double block_gram_opnorm(std::span<const CVec> rows, std::span<const double> weights) {
  require(!rows.empty(), ErrorCode::InvalidArgument, "empty block");
  require(rows.size() <= kMaxBlockRows, ErrorCode::Unsupported,
          "blocks with more than 4096 rows are not supported");
  const std::size_t size = weights.size();
  for (const CVec& r : rows)
    require(r.size() == size, ErrorCode::DimensionMismatch, "block row length mismatch");

  if (rows.size() == 1) {
    double quad = 0.0;
    for (std::size_t l = 0; l < size; ++l) quad += std::norm(rows[0][l]) * weights[l];
    return quad;
  }
  const Eigen::Index r = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXcd scaled(r, static_cast<Eigen::Index>(size));
  for (Eigen::Index i = 0; i < r; ++i)
    for (std::size_t l = 0; l < size; ++l)
      scaled(i, static_cast<Eigen::Index>(l)) = rows[i][l] * std::sqrt(weights[l]);
  const Eigen::MatrixXcd gram = scaled * scaled.adjoint();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(gram, Eigen::EigenvaluesOnly);
  return std::max(0.0, eig.eigenvalues().maxCoeff());
}

// B* B is positive semidefinite, so |G_ij| <= sqrt(G_ii G_jj) and the
// largest entry sits on the diagonal: max_i sum_r |B_{r,i}|^2.
double block_inf1_norm(std::span<const CVec> rows) { return block_inf1_norm(rows, {}); }

double block_inf1_norm(std::span<const CVec> rows, std::span<const double> weights) {
  require(!rows.empty(), ErrorCode::InvalidArgument, "empty block");
  const std::size_t size = rows.front().size();
  require(weights.empty() || weights.size() == size, ErrorCode::DimensionMismatch,
          "weight vector length mismatch");
  RVec column_energy(size, 0.0);
  for (const CVec& r : rows) {
    require(r.size() == size, ErrorCode::DimensionMismatch, "block row length mismatch");
    for (std::size_t i = 0; i < size; ++i) column_energy[i] += std::norm(r[i]);
  }
  double peak = 0.0;
  for (std::size_t i = 0; i < size; ++i)
    if (weights.empty() || weights[i] > 0.0) peak = std::max(peak, column_energy[i]);
  return peak;
}

Density adapted_blocks(const Operator& op, const BlockPartition& partition,
                       const WeightVector& weights, BlockMethod method) {
  check_weights(op, weights);
  require(partition.size() == op.size(), ErrorCode::DimensionMismatch,
          "partition does not match operator size");
  const std::size_t blocks = partition.count();
  RVec numerators(blocks);

  if (method == BlockMethod::ClosedFormLines) {
    const bool vertical = partition.kind() == PartitionKind::VerticalLines;
    require(vertical || partition.kind() == PartitionKind::HorizontalLines,
            ErrorCode::Unsupported, "closed form requires a line partition, got " + partition.name());
    require(op.spec().is_kronecker(), ErrorCode::Unsupported,
            "closed form requires A0 = phi (x) phi; " + to_string(op.spec()) + " is not separable");
    const std::size_t n = op.spec().side;
    const RVec& w = weights.values;  // W(row, col) = w[row + n * col]
    // live[i]: the columns of A0 that phi_{k,i} touches carry some weight.
    std::vector<bool> live(n, false);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t l = 0; l < n && !live[i]; ++l)
        live[i] = (vertical ? w[l + n * i] : w[i + n * l]) > 0.0;
    for (std::size_t k = 0; k < blocks; ++k) {
      const CVec phi = op.factor_row(k);
      RVec energy(n);
      for (std::size_t i = 0; i < n; ++i) energy[i] = std::norm(phi[i]);
      double gram = 0.0, peak = 0.0;
      for (std::size_t l = 0; l < n; ++l) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i)
          acc += energy[i] * (vertical ? w[l + n * i] : w[i + n * l]);
        gram = std::max(gram, acc);
      }
      for (std::size_t i = 0; i < n; ++i)
        if (live[i]) peak = std::max(peak, energy[i]);
      numerators[k] = std::max(gram, peak);
    }
    return normalized(std::move(numerators), DensityKind::AdaptedBlocks);
  }

  for (std::size_t k = 0; k < blocks; ++k) {
    const std::vector<CVec> rows = block_rows(op, partition, k);
    numerators[k] = std::max(block_gram_opnorm(rows, weights.values),
                             block_inf1_norm(rows, weights.values));
  }
  return normalized(std::move(numerators), DensityKind::AdaptedBlocks);
}

Density baseline_density(BaselineKind kind, const Operator& op, const BlockPartition& partition,
                         double exponent) {
  require(partition.size() == op.size(), ErrorCode::DimensionMismatch,
          "partition does not match operator size");
  const std::size_t blocks = partition.count();
  RVec numerators(blocks, 0.0);
  switch (kind) {
    case BaselineKind::Uniform:
      std::fill(numerators.begin(), numerators.end(), 1.0);
      return normalized(std::move(numerators), DensityKind::Uniform);

    case BaselineKind::Coherence:
      for (std::size_t k = 0; k < blocks; ++k)
        numerators[k] = block_inf1_norm(block_rows(op, partition, k));
      return normalized(std::move(numerators), DensityKind::Coherence);

    case BaselineKind::Polynomial: {
      require(op.spec().measurement == Measurement::DFT2D, ErrorCode::Unsupported,
              "polynomial density needs a 2D Fourier measurement");
      require(exponent > 0.0, ErrorCode::InvalidArgument, "polynomial exponent must be positive");
      const std::size_t n = op.spec().side;
      const double dc = std::pow(2.0, -exponent);
      for (std::size_t k = 0; k < blocks; ++k) {
        for (std::size_t idx : partition.block(k)) {
          const double k1 = static_cast<double>(signed_frequency(idx % n, n));
          const double k2 = static_cast<double>(signed_frequency(idx / n, n));
          const double r2 = k1 * k1 + k2 * k2;
          numerators[k] += r2 == 0.0 ? dc : std::pow(r2, -exponent);
        }
      }
      return normalized(std::move(numerators), DensityKind::Polynomial);
    }
  }
  fail(ErrorCode::InvalidArgument, "unknown baseline density");
}

LevelsSummary levels_summary(std::span<const double> weights, LevelsLayout layout) {
  LevelsSummary out;
  if (layout == LevelsLayout::Dyadic1D) {
    const std::size_t size = weights.size();
    require(size >= 2 && std::has_single_bit(size), ErrorCode::InvalidArgument,
            "dyadic levels need K = 2^(J+1), got " + std::to_string(size));
    const int top = std::countr_zero(size) - 1;  // J
    out.level_mass.assign(static_cast<std::size_t>(top) + 1, 0.0);
    for (std::size_t i = 0; i < size; ++i) {
      const std::size_t level = i < 2 ? 0 : static_cast<std::size_t>(std::bit_width(i) - 1);
      out.level_mass[level] += weights[i];
    }
    return out;
  }

  const std::size_t size = weights.size();
  const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(size))));
  require(side * side == size && side >= 2 && std::has_single_bit(side),
          ErrorCode::InvalidArgument, "row-wise levels need a square power-of-two grid");
  const int top = std::countr_zero(side) - 1;
  const std::size_t levels = static_cast<std::size_t>(top) + 1;
  out.level_mass.assign(levels, 0.0);
  out.row_max.assign(levels, 0.0);
  std::vector<RVec> per_row(levels, RVec(side, 0.0));
  for (std::size_t col = 0; col < side; ++col) {
    const std::size_t level = col < 2 ? 0 : static_cast<std::size_t>(std::bit_width(col) - 1);
    for (std::size_t row = 0; row < side; ++row) {
      const double w = weights[row + side * col];
      out.level_mass[level] += w;
      per_row[level][row] += w;
    }
  }
  for (std::size_t l = 0; l < levels; ++l)
    out.row_max[l] = *std::max_element(per_row[l].begin(), per_row[l].end());
  return out;
}

}  // namespace avds

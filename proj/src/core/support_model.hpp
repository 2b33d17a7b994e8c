#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "error.hpp"
#include "rng.hpp"

namespace avds {

// Per-coefficient inclusion weights omega in [0,1]^K. `sparsity` is the
// sum of the weights (S). For images, vec(W) = omega column-major.
struct WeightVector {
  RVec values;
  double sparsity = 0.0;

  static WeightVector from_values(RVec values);  // validates range, sets S
  std::size_t size() const { return values.size(); }
};

enum class ThresholdMode { Absolute, RelativeToMax };

// Relative frequency with which each coefficient exceeds the threshold
// across the corpus. Not renormalised.
WeightVector estimate_weights(std::span<const RVec> corpus, double threshold,
                              ThresholdMode mode);

// Rescales to sum `target`, clamping at 1 and redistributing the excess
// over the unclamped entries.
WeightVector normalize_weights(std::span<const double> weights, double target);

// Index reversal x_i -> x_{K-1-i}.
template <typename T>
std::vector<T> flip(std::span<const T> v) {
  return std::vector<T>(v.rbegin(), v.rend());
}

enum class SamplingMethod { Rejection, ExactSequential };

struct SparseSignal {
  std::vector<std::size_t> support;  // sorted
  RVec signs;                        // one per support element
  RVec values;                       // length K
};

// Rejective (conditional Bernoulli) law over supports of fixed size:
// P(I) proportional to prod_{i in I} w_i prod_{j not in I} (1 - w_j) when
// |I| = support_size, zero otherwise. Entries with w_i = 1 are forced.
//
// The normaliser and the sequential sampler use suffix elementary
// symmetric polynomials of r_i = w_i / (1 - w_i), kept in log space.
class SupportDistribution {
 public:
  // support_size defaults to round(sum of weights).
  explicit SupportDistribution(WeightVector weights);
  SupportDistribution(WeightVector weights, std::size_t support_size);

  const WeightVector& weights() const { return weights_; }
  std::size_t support_size() const { return support_size_; }
  std::size_t size() const { return weights_.size(); }

  // log c, where c = 1 / sum_{|I|=S} prod w prod (1-w).
  double log_normalizer() const;

  double probability(std::span<const std::size_t> support) const;

  // Product of the sequential sampler's conditional decisions along the
  // path that produces `support`. Equals probability() up to rounding.
  double sequential_path_probability(std::span<const std::size_t> support) const;

  std::vector<std::size_t> sample(SamplingMethod method, Rng& rng,
                                  std::size_t retry_cap = 1000000) const;
  std::vector<std::size_t> sample(SamplingMethod method, std::uint64_t seed,
                                  std::size_t retry_cap = 1000000) const;

  SparseSignal draw_signal(Rng& rng, SamplingMethod method = SamplingMethod::ExactSequential) const;
  SparseSignal draw_signal(std::uint64_t seed) const;

 private:
  void build();
  // Log of e_s over free positions [j, F).
  double log_suffix(std::size_t j, std::size_t s) const {
    return log_suffix_[j * (free_quota_ + 1) + s];
  }

  WeightVector weights_;
  std::size_t support_size_ = 0;
  std::vector<std::size_t> forced_;
  std::vector<std::size_t> free_;
  RVec log_ratio_;  // log r for free positions
  std::size_t free_quota_ = 0;
  RVec log_suffix_;
  std::vector<std::size_t> free_position_;  // index -> position in free_, or npos
};

}  // namespace avds

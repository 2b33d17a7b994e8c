#include "support_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace avds {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::size_t kNotFree = std::numeric_limits<std::size_t>::max();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

// Sorted copy; empty optional-like result on duplicates/out-of-range.
bool canonical_support(std::span<const std::size_t> support, std::size_t size,
                       std::vector<std::size_t>& out) {
  out.assign(support.begin(), support.end());
  std::sort(out.begin(), out.end());
  if (std::adjacent_find(out.begin(), out.end()) != out.end()) return false;
  return out.empty() || out.back() < size;
}

}  // namespace

WeightVector WeightVector::from_values(RVec values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double w = values[i];
    require(std::isfinite(w) && w >= 0.0 && w <= 1.0, ErrorCode::InvalidArgument,
            "weight " + std::to_string(i) + " = " + std::to_string(w) + " outside [0,1]");
  }
  WeightVector out;
  out.sparsity = std::accumulate(values.begin(), values.end(), 0.0);
  out.values = std::move(values);
  return out;
}

WeightVector estimate_weights(std::span<const RVec> corpus, double threshold,
                              ThresholdMode mode) {
  require(!corpus.empty(), ErrorCode::InvalidArgument, "empty corpus");
  require(threshold > 0.0, ErrorCode::InvalidArgument, "threshold must be positive");
  const std::size_t size = corpus.front().size();
  std::vector<std::size_t> hits(size, 0);
  for (std::size_t n = 0; n < corpus.size(); ++n) {
    const RVec& c = corpus[n];
    require(c.size() == size, ErrorCode::DimensionMismatch,
            "corpus entry " + std::to_string(n) + " has length " + std::to_string(c.size()) +
                ", expected " + std::to_string(size));
    double cut = threshold;
    if (mode == ThresholdMode::RelativeToMax) {
      double peak = 0.0;
      for (double v : c) peak = std::max(peak, std::abs(v));
      cut = threshold * peak;
    }
    for (std::size_t i = 0; i < size; ++i)
      if (std::abs(c[i]) > cut) ++hits[i];
  }
  RVec w(size);
  const double count = static_cast<double>(corpus.size());
  for (std::size_t i = 0; i < size; ++i) w[i] = static_cast<double>(hits[i]) / count;
  WeightVector out = WeightVector::from_values(std::move(w));
  require(out.sparsity > 0.0, ErrorCode::Infeasible,
          "no coefficient survived thresholding; all weights are zero");
  return out;
}

WeightVector normalize_weights(std::span<const double> weights, double target) {
  require(target > 0.0, ErrorCode::InvalidArgument, "target sparsity must be positive");
  std::size_t positive = 0;
  double total = 0.0;
  for (double w : weights) {
    require(std::isfinite(w) && w >= 0.0, ErrorCode::InvalidArgument, "negative weight");
    if (w > 0.0) ++positive;
    total += w;
  }
  require(total > 0.0, ErrorCode::InvalidArgument, "all weights are zero");
  require(target <= static_cast<double>(positive) + 1e-12, ErrorCode::Infeasible,
          "target sparsity " + std::to_string(target) + " exceeds the " +
              std::to_string(positive) + " positive weights");

  RVec w(weights.begin(), weights.end());
  std::vector<bool> clamped(w.size(), false);
  double clamped_count = 0.0;
  for (std::size_t iter = 0; iter <= w.size(); ++iter) {
    double free_sum = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i)
      if (!clamped[i]) free_sum += w[i];
    const double free_target = target - clamped_count;
    if (free_sum <= 0.0) break;
    const double scale = free_target / free_sum;
    bool changed = false;
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (clamped[i]) continue;
      w[i] *= scale;
      if (w[i] >= 1.0) {
        w[i] = 1.0;
        clamped[i] = true;
        clamped_count += 1.0;
        changed = true;
      }
    }
    if (!changed) break;
  }
  WeightVector out = WeightVector::from_values(std::move(w));
  require(std::abs(out.sparsity - target) <= 1e-9 * std::max(1.0, target), ErrorCode::Infeasible,
          "could not reach target sparsity " + std::to_string(target));
  return out;
}

SupportDistribution::SupportDistribution(WeightVector weights)
    : SupportDistribution(weights,
                          static_cast<std::size_t>(std::llround(weights.sparsity))) {}

SupportDistribution::SupportDistribution(WeightVector weights, std::size_t support_size)
    : weights_(std::move(weights)), support_size_(support_size) {
  build();
}

void SupportDistribution::build() {
  const RVec& w = weights_.values;
  free_position_.assign(w.size(), kNotFree);
  for (std::size_t i = 0; i < w.size(); ++i) {
    require(w[i] >= 0.0 && w[i] <= 1.0, ErrorCode::InvalidArgument, "weight outside [0,1]");
    if (w[i] == 1.0) {
      forced_.push_back(i);
    } else if (w[i] > 0.0) {
      free_position_[i] = free_.size();
      free_.push_back(i);
      log_ratio_.push_back(std::log(w[i]) - std::log1p(-w[i]));
    }
  }
  require(forced_.size() <= support_size_, ErrorCode::Infeasible,
          std::to_string(forced_.size()) + " weights equal 1 but the support size is " +
              std::to_string(support_size_));
  free_quota_ = support_size_ - forced_.size();
  require(free_quota_ <= free_.size(), ErrorCode::Infeasible,
          "support size " + std::to_string(support_size_) + " exceeds the " +
              std::to_string(forced_.size() + free_.size()) + " indices with positive weight");

  const std::size_t stride = free_quota_ + 1;
  const std::size_t nfree = free_.size();
  log_suffix_.assign((nfree + 1) * stride, kNegInf);
  log_suffix_[nfree * stride] = 0.0;
  for (std::size_t j = nfree; j-- > 0;) {
    double* row = &log_suffix_[j * stride];
    const double* next = &log_suffix_[(j + 1) * stride];
    row[0] = 0.0;
    for (std::size_t s = 1; s <= free_quota_; ++s)
      row[s] = log_add(next[s], log_ratio_[j] + next[s - 1]);
  }
}

double SupportDistribution::log_normalizer() const {
  double log_mass = log_suffix(0, free_quota_);
  for (std::size_t i : free_) log_mass += std::log1p(-weights_.values[i]);
  return -log_mass;
}

double SupportDistribution::probability(std::span<const std::size_t> support) const {
  std::vector<std::size_t> sorted;
  if (!canonical_support(support, size(), sorted)) return 0.0;
  if (sorted.size() != support_size_) return 0.0;
  for (std::size_t f : forced_)
    if (!std::binary_search(sorted.begin(), sorted.end(), f)) return 0.0;
  double log_p = -log_suffix(0, free_quota_);
  for (std::size_t i : sorted) {
    if (weights_.values[i] == 1.0) continue;
    if (free_position_[i] == kNotFree) return 0.0;  // zero weight
    log_p += log_ratio_[free_position_[i]];
  }
  return std::exp(log_p);
}

double SupportDistribution::sequential_path_probability(
    std::span<const std::size_t> support) const {
  std::vector<std::size_t> sorted;
  if (!canonical_support(support, size(), sorted)) return 0.0;
  if (sorted.size() != support_size_) return 0.0;
  for (std::size_t f : forced_)
    if (!std::binary_search(sorted.begin(), sorted.end(), f)) return 0.0;
  for (std::size_t i : sorted)
    if (weights_.values[i] == 0.0) return 0.0;

  double p = 1.0;
  std::size_t remaining = free_quota_;
  for (std::size_t j = 0; j < free_.size(); ++j) {
    const double incl =
        remaining == 0 ? 0.0
                       : std::exp(log_ratio_[j] + log_suffix(j + 1, remaining - 1) -
                                  log_suffix(j, remaining));
    if (std::binary_search(sorted.begin(), sorted.end(), free_[j])) {
      p *= incl;
      --remaining;
    } else {
      p *= 1.0 - incl;
    }
  }
  return p;
}

std::vector<std::size_t> SupportDistribution::sample(SamplingMethod method, Rng& rng,
                                                     std::size_t retry_cap) const {
  std::vector<std::size_t> out;
  if (method == SamplingMethod::ExactSequential) {
    out = forced_;
    std::size_t remaining = free_quota_;
    for (std::size_t j = 0; j < free_.size() && remaining > 0; ++j) {
      const double incl = std::exp(log_ratio_[j] + log_suffix(j + 1, remaining - 1) -
                                   log_suffix(j, remaining));
      if (rng.uniform() < incl) {
        out.push_back(free_[j]);
        --remaining;
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  const RVec& w = weights_.values;
  for (std::size_t attempt = 0; attempt < retry_cap; ++attempt) {
    out.clear();
    bool overflow = false;
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (rng.uniform() < w[i]) {
        out.push_back(i);
        if (out.size() > support_size_) {
          overflow = true;
          break;
        }
      }
    }
    if (!overflow && out.size() == support_size_) return out;
  }
  fail(ErrorCode::Convergence, "rejection sampler exceeded " + std::to_string(retry_cap) +
                                   " attempts; weights are badly conditioned for support size " +
                                   std::to_string(support_size_));
}

std::vector<std::size_t> SupportDistribution::sample(SamplingMethod method, std::uint64_t seed,
                                                     std::size_t retry_cap) const {
  Rng rng(seed);
  return sample(method, rng, retry_cap);
}

SparseSignal SupportDistribution::draw_signal(Rng& rng, SamplingMethod method) const {
  SparseSignal sig;
  sig.support = sample(method, rng);
  sig.values.assign(size(), 0.0);
  for (std::size_t i : sig.support) {
    const double s = rng.sign();
    sig.signs.push_back(s);
    sig.values[i] = s;
  }
  return sig;
}

SparseSignal SupportDistribution::draw_signal(std::uint64_t seed) const {
  Rng rng(seed);
  return draw_signal(rng);
}

}  // namespace avds

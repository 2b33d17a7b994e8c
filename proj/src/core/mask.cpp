#include "mask.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>

#include "rng.hpp"

namespace avds {
namespace {

void check_density(std::span<const double> pi) {
  require(!pi.empty(), ErrorCode::InvalidArgument, "empty density");
  double total = 0.0;
  for (double p : pi) {
    require(std::isfinite(p) && p >= 0.0, ErrorCode::InvalidArgument,
            "density has a negative or non-finite entry");
    total += p;
  }
  require(std::abs(total - 1.0) <= 1e-9, ErrorCode::InvalidArgument,
          "density is not normalised (sum = " + std::to_string(total) + ")");
}

// Binary-indexed tree over nonnegative masses with prefix search.
class MassTree {
 public:
  explicit MassTree(std::span<const double> mass) : tree_(mass.size() + 1, 0.0) {
    for (std::size_t i = 0; i < mass.size(); ++i) add(i, mass[i]);
    top_ = std::bit_floor(mass.size());
  }

  void add(std::size_t i, double delta) {
    for (std::size_t j = i + 1; j < tree_.size(); j += j & (~j + 1)) tree_[j] += delta;
  }

  // Smallest index whose inclusive prefix sum exceeds `target`.
  std::size_t find(double target) const {
    std::size_t pos = 0;
    for (std::size_t step = top_; step > 0; step >>= 1) {
      if (pos + step < tree_.size() && tree_[pos + step] <= target) {
        pos += step;
        target -= tree_[pos];
      }
    }
    return pos;  // 0-based index
  }

 private:
  std::vector<double> tree_;
  std::size_t top_ = 1;
};

}  // namespace

Mask draw_mask(std::span<const double> pi, std::size_t budget, MaskMode mode,
               std::uint64_t seed) {
  check_density(pi);
  require(budget >= 1, ErrorCode::InvalidArgument, "budget must be at least 1");
  const std::size_t atoms = pi.size();
  Rng rng(seed);
  Mask mask;
  mask.mode = mode;
  mask.seed = seed;
  mask.draws = budget;
  mask.universe = atoms;

  if (mode == MaskMode::IidWithReplacement) {
    RVec cumulative(atoms);
    double acc = 0.0;
    for (std::size_t k = 0; k < atoms; ++k) cumulative[k] = acc += pi[k];
    std::map<std::size_t, std::size_t> counts;
    for (std::size_t d = 0; d < budget; ++d) {
      const double u = rng.uniform() * acc;
      auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
      std::size_t k = static_cast<std::size_t>(it - cumulative.begin());
      if (k >= atoms) k = atoms - 1;
      while (pi[k] == 0.0 && k > 0) --k;  // rounding at the top end
      ++counts[k];
    }
    for (auto [k, c] : counts) {
      mask.indices.push_back(k);
      mask.multiplicities.push_back(c);
      mask.atom_probability.push_back(pi[k]);
    }
  } else {
    const auto positive = static_cast<std::size_t>(
        std::count_if(pi.begin(), pi.end(), [](double p) { return p > 0.0; }));
    require(budget <= positive, ErrorCode::Infeasible,
            "budget " + std::to_string(budget) + " exceeds the " + std::to_string(positive) +
                " atoms with positive probability");
    MassTree tree(pi);
    RVec remaining(pi.begin(), pi.end());
    double remaining_total = 0.0;
    for (double p : pi) remaining_total += p;
    std::vector<std::size_t> chosen;
    while (chosen.size() < budget) {
      std::size_t k = tree.find(rng.uniform() * remaining_total);
      if (k >= atoms || remaining[k] == 0.0) {
        // Accumulated rounding in the tree; fall back to a linear scan.
        double target = rng.uniform() * remaining_total, acc = 0.0;
        k = atoms;
        for (std::size_t j = 0; j < atoms; ++j) {
          if (remaining[j] == 0.0) continue;
          acc += remaining[j];
          k = j;
          if (acc > target) break;
        }
      }
      chosen.push_back(k);
      tree.add(k, -remaining[k]);
      remaining_total -= remaining[k];
      remaining[k] = 0.0;
      if (remaining_total <= 0.0) {
        remaining_total = 0.0;
        for (double p : remaining) remaining_total += p;
      }
    }
    std::sort(chosen.begin(), chosen.end());
    for (std::size_t k : chosen) {
      mask.indices.push_back(k);
      mask.multiplicities.push_back(1);
      mask.atom_probability.push_back(pi[k]);
    }
  }
  std::size_t total = 0;
  for (std::size_t c : mask.multiplicities) total += c;
  mask.measured_fraction = static_cast<double>(total) / static_cast<double>(atoms);
  return mask;
}

Mask expand_blocks(const Mask& mask, const BlockPartition& partition) {
  require(mask.universe == partition.count(), ErrorCode::DimensionMismatch,
          "mask is over " + std::to_string(mask.universe) + " atoms, partition has " +
              std::to_string(partition.count()) + " blocks");
  struct Entry {
    std::size_t index, multiplicity;
    double probability;
  };
  std::vector<Entry> entries;
  std::size_t measured = 0;
  for (std::size_t i = 0; i < mask.indices.size(); ++i) {
    const auto& block = partition.block(mask.indices[i]);
    const std::size_t mult = mask.multiplicities.empty() ? 1 : mask.multiplicities[i];
    const double prob = mask.atom_probability.empty() ? 0.0 : mask.atom_probability[i];
    for (std::size_t idx : block) entries.push_back({idx, mult, prob});
    measured += block.size() * mult;
  }
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.index < b.index; });

  Mask out;
  out.mode = mask.mode;
  out.seed = mask.seed;
  out.draws = mask.draws;
  out.universe = partition.size();
  for (const Entry& e : entries) {
    out.indices.push_back(e.index);
    out.multiplicities.push_back(e.multiplicity);
    out.atom_probability.push_back(e.probability);
  }
  out.measured_fraction = static_cast<double>(measured) / static_cast<double>(partition.size());
  return out;
}

Mask mask_from_indices(std::vector<std::size_t> indices, std::size_t universe,
                       std::vector<std::size_t> multiplicities) {
  std::vector<std::size_t> order(indices.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return indices[a] < indices[b]; });
  if (multiplicities.empty()) multiplicities.assign(indices.size(), 1);
  require(multiplicities.size() == indices.size(), ErrorCode::DimensionMismatch,
          "multiplicities do not match indices");
  Mask mask;
  mask.universe = universe;
  bool any_repeat = false;
  std::size_t total = 0;
  for (std::size_t i : order) {
    require(indices[i] < universe, ErrorCode::OutOfRange,
            "mask index " + std::to_string(indices[i]) + " outside universe " +
                std::to_string(universe));
    require(mask.indices.empty() || mask.indices.back() != indices[i],
            ErrorCode::InvalidArgument, "duplicate mask index " + std::to_string(indices[i]));
    require(multiplicities[i] >= 1, ErrorCode::InvalidArgument, "zero multiplicity");
    mask.indices.push_back(indices[i]);
    mask.multiplicities.push_back(multiplicities[i]);
    any_repeat = any_repeat || multiplicities[i] > 1;
    total += multiplicities[i];
  }
  mask.mode = any_repeat ? MaskMode::IidWithReplacement : MaskMode::DistinctUntilBudget;
  mask.draws = total;
  mask.measured_fraction = static_cast<double>(total) / static_cast<double>(universe);
  return mask;
}

}  // namespace avds

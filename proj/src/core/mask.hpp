#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "error.hpp"
#include "partition.hpp"

namespace avds {

enum class MaskMode { IidWithReplacement, DistinctUntilBudget };

// Drawn measurement atoms. `indices` are sorted and unique; in i.i.d. mode
// `multiplicities` counts repeated draws. `atom_probability[i]` is the
// density value of the atom (row or block) that produced indices[i].
struct Mask {
  std::vector<std::size_t> indices;
  std::vector<std::size_t> multiplicities;
  RVec atom_probability;
  MaskMode mode = MaskMode::DistinctUntilBudget;
  std::uint64_t seed = 0;
  std::size_t draws = 0;     // m, the number of atoms drawn
  std::size_t universe = 0;  // number of atoms (rows or blocks)
  double measured_fraction = 0.0;

  std::size_t count() const { return indices.size(); }
};

// IidWithReplacement: exactly `budget` categorical draws from pi.
// DistinctUntilBudget: categorical draws, skipping repeats, until `budget`
// distinct atoms are collected. Implemented as successive sampling
// proportional to the not-yet-selected mass, which has the same law.
Mask draw_mask(std::span<const double> pi, std::size_t budget, MaskMode mode,
               std::uint64_t seed);

// Block indices -> flat row indices.
Mask expand_blocks(const Mask& mask, const BlockPartition& partition);

// Mask from explicit sorted rows (e.g. read from disk). Multiplicities
// default to 1.
Mask mask_from_indices(std::vector<std::size_t> indices, std::size_t universe,
                       std::vector<std::size_t> multiplicities = {});

}  // namespace avds

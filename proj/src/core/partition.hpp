#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "error.hpp"

namespace avds {

enum class PartitionKind { Singletons, VerticalLines, HorizontalLines, Squares, Custom };

// Disjoint cover of the row indices {0..K-1} by M blocks.
//
// For a column-major side x side frequency grid, index = k1 + side * k2.
// Vertical line k is the k-th column, {k*side + q}, i.e. the rows of
// phi_{k,:} (x) phi when A0 = phi (x) phi. Horizontal line k is the k-th
// row, {k + side*q}, i.e. phi (x) phi_{k,:}. Squares are side s tiles,
// enumerated column-major over the tile grid.
class BlockPartition {
 public:
  static BlockPartition singletons(std::size_t size);
  static BlockPartition vertical_lines(std::size_t side);
  static BlockPartition horizontal_lines(std::size_t side);
  static BlockPartition squares(std::size_t side, std::size_t square_side);
  // Validates disjointness and coverage of {0..size-1}.
  static BlockPartition custom(std::size_t size, std::vector<std::vector<std::size_t>> blocks);

  // "singletons" | "lines-v" | "lines-h" | "squares:N"; `side` is the grid
  // side for 2D layouts, `size` = K.
  static BlockPartition parse(const std::string& text, std::size_t size, std::size_t side);

  PartitionKind kind() const { return kind_; }
  std::size_t size() const { return size_; }
  std::size_t count() const { return blocks_.size(); }
  std::size_t side() const { return side_; }
  const std::vector<std::size_t>& block(std::size_t k) const;
  std::size_t block_of(std::size_t index) const { return owner_.at(index); }
  std::string name() const;

 private:
  BlockPartition(PartitionKind kind, std::size_t size, std::size_t side,
                 std::vector<std::vector<std::size_t>> blocks);

  PartitionKind kind_;
  std::size_t size_;
  std::size_t side_;
  std::size_t square_side_ = 0;
  std::vector<std::vector<std::size_t>> blocks_;
  std::vector<std::size_t> owner_;
};

}  // namespace avds

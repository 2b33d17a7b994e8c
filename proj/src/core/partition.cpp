#include "partition.hpp"

#include <limits>

namespace avds {
namespace {

constexpr std::size_t kUnowned = std::numeric_limits<std::size_t>::max();

}  // namespace

BlockPartition::BlockPartition(PartitionKind kind, std::size_t size, std::size_t side,
                               std::vector<std::vector<std::size_t>> blocks)
    : kind_(kind), size_(size), side_(side), blocks_(std::move(blocks)) {
  owner_.assign(size_, kUnowned);
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    require(!blocks_[b].empty(), ErrorCode::InvalidArgument,
            "block " + std::to_string(b) + " is empty");
    for (std::size_t idx : blocks_[b]) {
      require(idx < size_, ErrorCode::InvalidArgument,
              "block index " + std::to_string(idx) + " outside {0.." + std::to_string(size_ - 1) + "}");
      require(owner_[idx] == kUnowned, ErrorCode::InvalidArgument,
              "index " + std::to_string(idx) + " appears in more than one block");
      owner_[idx] = b;
    }
  }
  for (std::size_t i = 0; i < size_; ++i)
    require(owner_[i] != kUnowned, ErrorCode::InvalidArgument,
            "index " + std::to_string(i) + " is not covered by the partition");
}

BlockPartition BlockPartition::singletons(std::size_t size) {
  std::vector<std::vector<std::size_t>> blocks(size);
  for (std::size_t i = 0; i < size; ++i) blocks[i] = {i};
  return BlockPartition(PartitionKind::Singletons, size, 0, std::move(blocks));
}

BlockPartition BlockPartition::vertical_lines(std::size_t side) {
  std::vector<std::vector<std::size_t>> blocks(side);
  for (std::size_t k = 0; k < side; ++k)
    for (std::size_t q = 0; q < side; ++q) blocks[k].push_back(k * side + q);
  return BlockPartition(PartitionKind::VerticalLines, side * side, side, std::move(blocks));
}

BlockPartition BlockPartition::horizontal_lines(std::size_t side) {
  std::vector<std::vector<std::size_t>> blocks(side);
  for (std::size_t k = 0; k < side; ++k)
    for (std::size_t q = 0; q < side; ++q) blocks[k].push_back(k + side * q);
  return BlockPartition(PartitionKind::HorizontalLines, side * side, side, std::move(blocks));
}

BlockPartition BlockPartition::squares(std::size_t side, std::size_t square_side) {
  require(square_side >= 1 && side % square_side == 0, ErrorCode::InvalidArgument,
          "square side " + std::to_string(square_side) + " does not divide grid side " +
              std::to_string(side));
  const std::size_t tiles = side / square_side;
  std::vector<std::vector<std::size_t>> blocks;
  for (std::size_t ty = 0; ty < tiles; ++ty) {
    for (std::size_t tx = 0; tx < tiles; ++tx) {
      std::vector<std::size_t> block;
      for (std::size_t q = 0; q < square_side; ++q)
        for (std::size_t p = 0; p < square_side; ++p)
          block.push_back((tx * square_side + p) + side * (ty * square_side + q));
      blocks.push_back(std::move(block));
    }
  }
  BlockPartition out(PartitionKind::Squares, side * side, side, std::move(blocks));
  out.square_side_ = square_side;
  return out;
}

BlockPartition BlockPartition::custom(std::size_t size,
                                      std::vector<std::vector<std::size_t>> blocks) {
  return BlockPartition(PartitionKind::Custom, size, 0, std::move(blocks));
}

BlockPartition BlockPartition::parse(const std::string& text, std::size_t size,
                                     std::size_t side) {
  if (text.empty() || text == "singletons") return singletons(size);
  const bool grid = side > 0 && side * side == size;
  if (text == "lines-v" || text == "lines-h") {
    require(grid, ErrorCode::InvalidArgument, "line partitions need a 2D operator");
    return text == "lines-v" ? vertical_lines(side) : horizontal_lines(side);
  }
  if (text.rfind("squares:", 0) == 0) {
    require(grid, ErrorCode::InvalidArgument, "square partitions need a 2D operator");
    std::size_t s = 0;
    try {
      s = std::stoul(text.substr(8));
    } catch (const std::logic_error&) {
      fail(ErrorCode::Parse, "bad square size in '" + text + "'");
    }
    return squares(side, s);
  }
  fail(ErrorCode::Parse, "unknown partition '" + text + "'");
}

const std::vector<std::size_t>& BlockPartition::block(std::size_t k) const {
  require(k < blocks_.size(), ErrorCode::OutOfRange,
          "block index " + std::to_string(k) + " out of range [0, " +
              std::to_string(blocks_.size()) + ")");
  return blocks_[k];
}

std::string BlockPartition::name() const {
  switch (kind_) {
    case PartitionKind::Singletons: return "singletons";
    case PartitionKind::VerticalLines: return "lines-v";
    case PartitionKind::HorizontalLines: return "lines-h";
    case PartitionKind::Squares: return "squares:" + std::to_string(square_side_);
    case PartitionKind::Custom: return "custom";
  }
  return "custom";
}

}  // namespace avds

#pragma once

#include "ttrf/geometry.hpp"

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace ttrf {

/// Static 3D kd-tree for exact k-nearest-neighbour queries.
class KdTree {
 public:
  explicit KdTree(std::span<const Point3> points);

  /// The k nearest points to `query` as (squared distance, index), ascending.
  /// `exclude` skips one index (typically the query point itself).
  [[nodiscard]] std::vector<std::pair<double, std::uint32_t>> nearest(
      const Point3& query, std::size_t k, std::uint32_t exclude = 0xFFFFFFFFu) const;

  [[nodiscard]] std::size_t size() const { return points_.size(); }

 private:
  struct Node {
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    int axis = -1;  // -1 for leaves
    double split = 0.0;
  };

  std::uint32_t build(std::uint32_t begin, std::uint32_t end);

  std::span<const Point3> points_;
  std::vector<std::uint32_t> index_;
  std::vector<Node> nodes_;
};

}  // namespace ttrf

#include "ttrf/knn.hpp"

#include <algorithm>
#include <numeric>
#include <queue>

namespace ttrf {

namespace {
constexpr std::uint32_t kLeafSize = 8;
}

KdTree::KdTree(std::span<const Point3> points) : points_(points), index_(points.size()) {
  std::iota(index_.begin(), index_.end(), 0u);
  if (!points.empty()) {
    nodes_.reserve(2 * points.size() / kLeafSize + 1);
    build(0, static_cast<std::uint32_t>(points.size()));
  }
}

std::uint32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::uint32_t>(nodes_.size());
  nodes_.push_back(Node{begin, end});
  if (end - begin <= kLeafSize) return id;

  Point3 lo = points_[index_[begin]];
  Point3 hi = lo;
  for (std::uint32_t i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_[index_[i]]);
    hi = hi.cwiseMax(points_[index_[i]]);
  }
  Eigen::Index axis = 0;
  (hi - lo).maxCoeff(&axis);
  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(index_.begin() + begin, index_.begin() + mid, index_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) { return points_[a][axis] < points_[b][axis]; });
  const double split = points_[index_[mid]][axis];
  const std::uint32_t left = build(begin, mid);
  const std::uint32_t right = build(mid, end);
  nodes_[id].axis = static_cast<int>(axis);
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

std::vector<std::pair<double, std::uint32_t>> KdTree::nearest(const Point3& query, std::size_t k,
                                                               std::uint32_t exclude) const {
  std::priority_queue<std::pair<double, std::uint32_t>> best;  // max-heap on distance
  if (k == 0 || nodes_.empty()) return {};

  auto visit = [&](auto&& self, std::uint32_t node) -> void {
    const Node& n = nodes_[node];
    if (n.axis < 0) {
      for (std::uint32_t i = n.begin; i < n.end; ++i) {
        const std::uint32_t idx = index_[i];
        if (idx == exclude) continue;
        const double d2 = (points_[idx] - query).squaredNorm();
        if (best.size() < k) {
          best.emplace(d2, idx);
        } else if (d2 < best.top().first) {
          best.pop();
          best.emplace(d2, idx);
        }
      }
      return;
    }
    const double diff = query[n.axis] - n.split;
    const std::uint32_t near = diff < 0.0 ? n.left : n.right;
    const std::uint32_t far = diff < 0.0 ? n.right : n.left;
    self(self, near);
    if (best.size() < k || diff * diff <= best.top().first) self(self, far);
  };
  visit(visit, 0);

  std::vector<std::pair<double, std::uint32_t>> out;
  out.reserve(best.size());
  while (!best.empty()) {
    out.push_back(best.top());
    best.pop();
  }
  std::reverse(out.begin(), out.end());
  return out;
}

}  // namespace ttrf

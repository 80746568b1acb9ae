#include "pcqkit/spatial_index.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <utility>

#include "pcqkit/error.hpp"

namespace pcqkit {
namespace {

using Candidate = std::pair<double, std::size_t>;  // (squared distance, index)

double box_squared_distance(const Vec3& q, const Vec3& lo, const Vec3& hi) {
  double d2 = 0.0;
  for (int a = 0; a < 3; ++a) {
    double gap = 0.0;
    if (q[a] < lo[a]) {
      gap = lo[a] - q[a];
    } else if (q[a] > hi[a]) {
      gap = q[a] - hi[a];
    }
    d2 += gap * gap;
  }
  return d2;
}

Neighborhood to_neighborhood(std::vector<Candidate>& found) {
  std::sort(found.begin(), found.end());
  Neighborhood nb;
  nb.indices.reserve(found.size());
  nb.distances.reserve(found.size());
  for (const auto& [d2, idx] : found) {
    nb.indices.push_back(idx);
    nb.distances.push_back(std::sqrt(d2));
  }
  return nb;
}

}  // namespace

SpatialIndex::SpatialIndex(std::span<const Vec3> points, std::size_t leaf_size)
    : points_(points.begin(), points.end()), order_(points.size()) {
  if (points_.empty()) throw Error(ErrorCode::EmptyCloud, "cannot index an empty cloud");
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  nodes_.reserve(2 * points_.size() / std::max<std::size_t>(leaf_size, 1) + 1);
  build(0, points_.size(), std::max<std::size_t>(leaf_size, 1));
}

int SpatialIndex::build(std::size_t begin, std::size_t end, std::size_t leaf_size) {
  Node node;
  node.begin = begin;
  node.end = end;
  node.box_min = points_[order_[begin]];
  node.box_max = node.box_min;
  for (std::size_t i = begin; i < end; ++i) {
    node.box_min = node.box_min.cwiseMin(points_[order_[i]]);
    node.box_max = node.box_max.cwiseMax(points_[order_[i]]);
  }
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(node);
  if (end - begin <= leaf_size) return id;

  int axis = 0;
  (node.box_max - node.box_min).maxCoeff(&axis);
  const std::size_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::size_t a, std::size_t b) {
                     const double pa = points_[a][axis];
                     const double pb = points_[b][axis];
                     return pa < pb || (pa == pb && a < b);
                   });
  const int left = build(begin, mid, leaf_size);
  const int right = build(mid, end, leaf_size);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

Neighborhood SpatialIndex::knn(const Vec3& query, std::size_t k) const {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "knn requires k >= 1");
  k = std::min(k, points_.size());

  // Max-heap on (d2, index): the top is the current worst accepted candidate.
  std::priority_queue<Candidate> heap;
  auto worst = [&]() {
    return heap.size() < k ? std::numeric_limits<double>::infinity() : heap.top().first;
  };

  std::vector<int> stack{0};
  while (!stack.empty()) {
    const Node& node = nodes_[stack.back()];
    stack.pop_back();
    if (box_squared_distance(query, node.box_min, node.box_max) > worst()) continue;
    if (node.left < 0) {
      for (std::size_t i = node.begin; i < node.end; ++i) {
        const std::size_t idx = order_[i];
        const Candidate c{squared_distance(query, points_[idx]), idx};
        if (heap.size() < k) {
          heap.push(c);
        } else if (c < heap.top()) {
          heap.pop();
          heap.push(c);
        }
      }
      continue;
    }
    const Node& l = nodes_[node.left];
    const Node& r = nodes_[node.right];
    const double dl = box_squared_distance(query, l.box_min, l.box_max);
    const double dr = box_squared_distance(query, r.box_min, r.box_max);
    // Push the farther child first so the nearer one is explored first.
    if (dl <= dr) {
      stack.push_back(node.right);
      stack.push_back(node.left);
    } else {
      stack.push_back(node.left);
      stack.push_back(node.right);
    }
  }

  std::vector<Candidate> found;
  found.reserve(heap.size());
  while (!heap.empty()) {
    found.push_back(heap.top());
    heap.pop();
  }
  return to_neighborhood(found);
}

std::size_t SpatialIndex::nearest(const Vec3& query, double* squared_dist) const {
  Candidate best{std::numeric_limits<double>::infinity(), 0};
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const Node& node = nodes_[stack.back()];
    stack.pop_back();
    if (box_squared_distance(query, node.box_min, node.box_max) > best.first) continue;
    if (node.left < 0) {
      for (std::size_t i = node.begin; i < node.end; ++i) {
        const std::size_t idx = order_[i];
        const Candidate c{squared_distance(query, points_[idx]), idx};
        if (c < best) best = c;
      }
      continue;
    }
    const Node& l = nodes_[node.left];
    const Node& r = nodes_[node.right];
    if (box_squared_distance(query, l.box_min, l.box_max) <= box_squared_distance(query, r.box_min, r.box_max)) {
      stack.push_back(node.right);
      stack.push_back(node.left);
    } else {
      stack.push_back(node.left);
      stack.push_back(node.right);
    }
  }
  if (squared_dist) *squared_dist = best.first;
  return best.second;
}

Neighborhood SpatialIndex::radius(const Vec3& query, double r) const {
  if (!(r > 0.0)) throw Error(ErrorCode::InvalidArgument, "radius query requires r > 0");
  const double r2 = r * r;
  std::vector<Candidate> found;
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const Node& node = nodes_[stack.back()];
    stack.pop_back();
    if (box_squared_distance(query, node.box_min, node.box_max) > r2) continue;
    if (node.left < 0) {
      for (std::size_t i = node.begin; i < node.end; ++i) {
        const std::size_t idx = order_[i];
        const double d2 = squared_distance(query, points_[idx]);
        if (d2 <= r2) found.emplace_back(d2, idx);
      }
      continue;
    }
    stack.push_back(node.left);
    stack.push_back(node.right);
  }
  return to_neighborhood(found);
}

SpatialIndex build_index(const PointCloud& cloud) { return SpatialIndex(cloud.positions); }

}  // namespace pcqkit

#include "splatmotion/knn.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <utility>

namespace splatmotion {

namespace {

constexpr std::size_t kLeafSize = 8;

struct Candidate {
  double dist2;
  std::size_t index;
  bool operator<(const Candidate& other) const {
    return dist2 < other.dist2 || (dist2 == other.dist2 && index < other.index);
  }
};

}  // namespace

KnnIndex::KnnIndex(std::vector<Vec3> points) : points_(std::move(points)), order_(points_.size()) {
  for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
  if (!points_.empty()) build(0, points_.size());
}

std::size_t KnnIndex::build(std::size_t begin, std::size_t end) {
  const std::size_t id = nodes_.size();
  nodes_.push_back({begin, end});
  if (end - begin <= kLeafSize) return id;

  Vec3 lo = points_[order_[begin]];
  Vec3 hi = lo;
  for (std::size_t i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  if (hi[axis] == lo[axis]) return id;  // all coincide

  const std::size_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::size_t a, std::size_t b) {
                     return points_[a][axis] < points_[b][axis] || (points_[a][axis] == points_[b][axis] && a < b);
                   });
  const double split = points_[order_[mid]][axis];
  const std::size_t left = build(begin, mid);
  const std::size_t right = build(mid, end);
  nodes_[id].axis = axis;
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

std::vector<Neighbor> KnnIndex::query(const Vec3& target, std::size_t k) const {
  k = std::min(k, points_.size());
  std::vector<Neighbor> out;
  if (k == 0) return out;

  std::priority_queue<Candidate> best;  // max-heap on (dist2, index)
  auto consider = [&](std::size_t index) {
    const Candidate c{(points_[index] - target).squaredNorm(), index};
    if (best.size() < k) {
      best.push(c);
    } else if (c < best.top()) {
      best.pop();
      best.push(c);
    }
  };

  // Explicit stack of (node, lower bound on squared distance to its region).
  std::vector<std::pair<std::size_t, double>> stack{{0, 0.0}};
  while (!stack.empty()) {
    const auto [id, bound] = stack.back();
    stack.pop_back();
    if (best.size() == k && bound > best.top().dist2) continue;
    const Node& node = nodes_[id];
    if (node.axis < 0) {
      for (std::size_t i = node.begin; i < node.end; ++i) consider(order_[i]);
      continue;
    }
    const double delta = target[node.axis] - node.split;
    const std::size_t near = delta < 0.0 ? node.left : node.right;
    const std::size_t far = delta < 0.0 ? node.right : node.left;
    stack.emplace_back(far, std::max(bound, delta * delta));
    stack.emplace_back(near, bound);
  }

  out.resize(best.size());
  for (std::size_t i = out.size(); i-- > 0;) {
    out[i] = {best.top().index, std::sqrt(best.top().dist2)};
    best.pop();
  }
  return out;
}

}  // namespace splatmotion

#pragma once

#include <cstddef>
#include <vector>

#include "splatmotion/geometry.hpp"

namespace splatmotion {

struct Neighbor {
  std::size_t index;
  double distance;
};

/// Static k-d tree over 3D points. Queries return min(k, size()) distinct
/// points ordered by (distance, index).
class KnnIndex {
 public:
  explicit KnnIndex(std::vector<Vec3> points);

  std::vector<Neighbor> query(const Vec3& target, std::size_t k) const;

  std::size_t size() const { return points_.size(); }
  const Vec3& point(std::size_t i) const { return points_[i]; }

 private:
  struct Node {
    std::size_t begin;
    std::size_t end;
    int axis = -1;  // -1 marks a leaf
    double split = 0.0;
    std::size_t left = 0;
    std::size_t right = 0;
  };

  std::size_t build(std::size_t begin, std::size_t end);

  std::vector<Vec3> points_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace splatmotion

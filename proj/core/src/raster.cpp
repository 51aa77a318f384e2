#include "splatmotion/raster.hpp"

#include <algorithm>
#include <cmath>

namespace splatmotion {

bool DepthMap::valid(int x, int y) const {
  const double d = at(x, y);
  return std::isfinite(d) && d > 0.0;
}

bool DepthMap::in_bounds(double u, double v) const {
  return u >= 0.0 && v >= 0.0 && u <= width - 1 && v <= height - 1;
}

namespace {

struct Footprint {
  int x[2];
  int y[2];
  double wx[2];
  double wy[2];
};

// assumes (u, v) already inside [0, w-1] x [0, h-1]
Footprint footprint(int width, int height, double u, double v) {
  Footprint f;
  const int x0 = std::min(static_cast<int>(std::floor(u)), width - 1);
  const int y0 = std::min(static_cast<int>(std::floor(v)), height - 1);
  const double ax = u - x0;
  const double ay = v - y0;
  f.x[0] = x0;
  f.x[1] = std::min(x0 + 1, width - 1);
  f.y[0] = y0;
  f.y[1] = std::min(y0 + 1, height - 1);
  f.wx[0] = 1.0 - ax;
  f.wx[1] = ax;
  f.wy[0] = 1.0 - ay;
  f.wy[1] = ay;
  return f;
}

}  // namespace

std::optional<double> sample_depth_bilinear(const DepthMap& map, double u, double v) {
  const Footprint f = footprint(map.width, map.height, u, v);
  double acc = 0.0;
  for (int j = 0; j < 2; ++j) {
    for (int i = 0; i < 2; ++i) {
      const double w = f.wx[i] * f.wy[j];
      if (w == 0.0) continue;
      if (!map.valid(f.x[i], f.y[j])) return std::nullopt;
      acc += w * map.at(f.x[i], f.y[j]);
    }
  }
  return acc;
}

Vec2 sample_flow_clamped(const FlowField& field, double u, double v) {
  u = std::clamp(u, 0.0, static_cast<double>(field.width - 1));
  v = std::clamp(v, 0.0, static_cast<double>(field.height - 1));
  const Footprint f = footprint(field.width, field.height, u, v);
  Vec2 acc = Vec2::Zero();
  for (int j = 0; j < 2; ++j) {
    for (int i = 0; i < 2; ++i) {
      const double w = f.wx[i] * f.wy[j];
      if (w == 0.0) continue;
      acc += w * field.at(f.x[i], f.y[j]);
    }
  }
  return acc;
}

}  // namespace splatmotion

#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "splatmotion/geometry.hpp"

namespace splatmotion {

/// Row-major per-pixel depth in meters; nonpositive or non-finite marks an
/// invalid pixel.
struct DepthMap {
  int width = 0;
  int height = 0;
  std::vector<double> values;
  int frame_index = 0;

  DepthMap() = default;
  DepthMap(int w, int h, double fill = 0.0, int frame = 0)
      : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill), frame_index(frame) {}

  double& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
  bool valid(int x, int y) const;
  bool in_bounds(double u, double v) const;
};

/// Dense displacement map: the pixel at p moves to p + flow(p).
struct FlowField {
  int width = 0;
  int height = 0;
  std::vector<Vec2> flow;

  FlowField() = default;
  FlowField(int w, int h, const Vec2& fill = Vec2::Zero())
      : width(w), height(h), flow(static_cast<std::size_t>(w) * h, fill) {}

  Vec2& at(int x, int y) { return flow[static_cast<std::size_t>(y) * width + x]; }
  const Vec2& at(int x, int y) const { return flow[static_cast<std::size_t>(y) * width + x]; }
};

/// Interleaved row-major image with values in [0,1].
struct Image {
  int width = 0;
  int height = 0;
  int channels = 3;
  std::vector<double> data;

  Image() = default;
  Image(int w, int h, int c = 3, double fill = 0.0)
      : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, fill) {}

  double& at(int x, int y, int c) { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
  double at(int x, int y, int c) const { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
  bool same_shape(const Image& other) const {
    return width == other.width && height == other.height && channels == other.channels;
  }
};

/// Bilinear depth at (u, v). Empty when any pixel with nonzero weight is
/// invalid. Callers check in_bounds first.
std::optional<double> sample_depth_bilinear(const DepthMap& map, double u, double v);

/// Bilinear flow with coordinates clamped to the grid border.
Vec2 sample_flow_clamped(const FlowField& field, double u, double v);

}  // namespace splatmotion

#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <vector>

#include "splatmotion/dynamic_scene.hpp"
#include "splatmotion/geometry.hpp"

namespace splatmotion {

/// Static 3DGS point set with activated attributes: linear scales, opacity in
/// [0,1], unit quaternions (w, x, y, z) and degree-0 SH colour. Normals and
/// higher-order SH coefficients are carried verbatim for lossless re-export.
struct GaussianScene {
  std::vector<Vec3> positions;
  std::vector<Vec3> scales;
  std::vector<Quat> rotations;
  std::vector<double> opacities;
  std::vector<Vec3> colors;

  std::vector<std::array<float, 3>> normals;
  std::size_t rest_per_gaussian = 0;
  std::vector<float> rest;  // count() * rest_per_gaussian, row-major

  std::size_t count() const { return positions.size(); }

  /// Resizes every attribute to n Gaussians with neutral defaults.
  void resize(std::size_t n);

  /// Throws Errc::input on any violated invariant.
  void validate() const;
};

struct BoundingBox3 {
  Vec3 center = Vec3::Zero();
  Vec3 half_extents = Vec3::Ones();
  Quat rotation = Quat::Identity();  // box frame to world

  /// Closed-set test in the box frame.
  bool contains(const Vec3& point) const;
  void validate() const;
};

struct SelectionMask {
  std::vector<bool> flags;

  std::size_t size() const { return flags.size(); }
  std::size_t selected_count() const;
  std::vector<std::size_t> indices() const;
};

GaussianScene load_scene(const std::filesystem::path& path);
void save_scene(const GaussianScene& scene, const std::filesystem::path& path);

SelectionMask select_by_bbox(const GaussianScene& scene, const BoundingBox3& box);

/// Newline-delimited 0/1 text.
void write_selection(const std::filesystem::path& path, const SelectionMask& mask);
SelectionMask read_selection(const std::filesystem::path& path);

/// Snapshot at normalized time t in [0,1]. Between discrete frames the
/// translation and scale factor are interpolated linearly and the rotation
/// delta by shortest-arc slerp. Opacity and colour are never touched.
GaussianScene apply_deformation(const GaussianScene& scene, const DynamicScene& dyn, double t);

}  // namespace splatmotion

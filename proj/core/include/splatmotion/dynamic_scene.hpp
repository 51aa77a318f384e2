#pragma once

#include <cstddef>
#include <filesystem>
#include <string_view>
#include <vector>

#include "splatmotion/geometry.hpp"

namespace splatmotion {

enum class TransferMode { linear, rigid };

std::string_view to_string(TransferMode mode) noexcept;
TransferMode parse_transfer_mode(std::string_view text);

/// Cumulative update of one Gaussian relative to the canonical (static) scene.
struct GaussianUpdate {
  Vec3 translation = Vec3::Zero();
  Quat rotation_delta = Quat::Identity();
  double scale_factor = 1.0;

  static GaussianUpdate identity() { return {}; }
};

/// Per-timestep similarity updates for the selected Gaussians of a scene.
/// frames[k][slot] belongs to Gaussian selected[slot] at timeline[k]; frame
/// k is shown at normalized time k / (frames - 1).
struct DynamicScene {
  std::vector<int> timeline;
  std::size_t t0_frame = 0;
  std::size_t num_gaussians = 0;
  std::vector<std::size_t> selected;
  std::vector<std::vector<GaussianUpdate>> frames;

  TransferMode mode = TransferMode::linear;
  std::size_t neighbors = 0;
  double tau = 0.0;

  std::size_t frame_count() const { return frames.size(); }
  std::size_t selected_count() const { return selected.size(); }
  double time_of(std::size_t frame) const;

  /// Throws Errc::input when shapes disagree or a quaternion is not unit.
  void validate() const;
};

/// Header JSON + float32 body (t xyz, quat wxyz, scale factor per Gaussian
/// per frame). See README for the layout.
void write_dynamic_scene(const std::filesystem::path& path, const DynamicScene& dyn);
DynamicScene read_dynamic_scene(const std::filesystem::path& path);

}  // namespace splatmotion

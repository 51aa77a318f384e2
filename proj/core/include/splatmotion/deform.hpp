#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "splatmotion/dynamic_scene.hpp"
#include "splatmotion/geometry.hpp"
#include "splatmotion/scene.hpp"
#include "splatmotion/tracklift.hpp"

namespace splatmotion {

inline constexpr std::size_t kMinNeighbors = 50;
inline constexpr std::size_t kMaxNeighbors = 150;

struct TransferConfig {
  TransferMode mode = TransferMode::linear;
  std::size_t neighbors = kMinNeighbors;
  std::optional<double> tau;  // empty selects default_tau()
  bool estimate_rotation_scale = false;
};

/// Softmax of -tau * d with max-subtraction; sums to one.
std::vector<double> knn_weights(std::span<const double> distances, double tau);

/// Weighted mean of anchor displacements y_j - x_j.
Vec3 linear_transfer(std::span<const Vec3> displacements, std::span<const double> weights);

struct GaussianStep {
  Vec3 position = Vec3::Zero();
  Quat rotation_delta = Quat::Identity();
  double scale_factor = 1.0;
  bool fallback = false;  // degenerate fit, translation only
};

/// Moves a Gaussian centre with the weighted similarity carrying anchors x to
/// y; falls back to the weighted mean displacement when the fit degenerates.
GaussianStep rigid_transfer(const Vec3& mu, std::span<const Vec3> x, std::span<const Vec3> y,
                            std::span<const double> weights);

/// Neighbour count after `videos_lifted` guidance videos: a ramp of 25 per
/// video from 50 up to 150, clamped to the number of anchors available.
std::size_t schedule_K(int videos_lifted, std::size_t available = std::numeric_limits<std::size_t>::max());

/// 10 / median nearest-neighbour spacing of the anchors (0 when undefined).
/// Anchors closer than 1e-6 of the anchor extent count as the same point.
double default_tau(std::span<const Vec3> anchors_at_t0);

/// Neighbours are frozen at t0; every consecutive step pair is estimated in
/// the configured mode and composed cumulatively outward from t0. Anchors not
/// observed at both ends of a step are dropped and weights renormalised.
DynamicScene build_dynamic_scene(const GaussianScene& scene, const SelectionMask& selection,
                                 std::span<const AnchorTrajectory> anchors, const TransferConfig& cfg);

}  // namespace splatmotion

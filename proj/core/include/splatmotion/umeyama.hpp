#pragma once

#include <optional>
#include <span>

#include "splatmotion/geometry.hpp"

namespace splatmotion {

/// y ~ scale * rotation * x + translation
struct Similarity {
  double scale = 1.0;
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& x) const { return scale * (rotation * x) + translation; }
};

double weighted_residual(const Similarity& sim, std::span<const Vec3> x, std::span<const Vec3> y,
                         std::span<const double> w);

/// Weighted least-squares similarity (Kabsch/Umeyama) minimising
/// sum_j w_j |s R x_j + t - y_j|^2 with det(R) = +1. Weights must be
/// non-negative; they are normalised internally. Empty for fewer than three
/// points, zero spread, or a rank-deficient (collinear) covariance.
std::optional<Similarity> weighted_umeyama(std::span<const Vec3> x, std::span<const Vec3> y,
                                           std::span<const double> w);

struct RotationScale {
  Mat3 rotation = Mat3::Identity();
  double scale = 1.0;
};

/// Same objective with the translation held at `t_fixed`: an uncentred
/// Procrustes fit of x onto y - t_fixed.
std::optional<RotationScale> rotation_with_fixed_translation(std::span<const Vec3> x, std::span<const Vec3> y,
                                                             std::span<const double> w, const Vec3& t_fixed);

}  // namespace splatmotion

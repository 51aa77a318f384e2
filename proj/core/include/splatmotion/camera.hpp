#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "splatmotion/geometry.hpp"

namespace splatmotion {

/// Pinhole camera; R and T map world to camera coordinates (x right, y down,
/// z forward). Integer pixel coordinates map directly through K.
struct CameraModel {
  Mat3 K = Mat3::Identity();
  Mat3 R = Mat3::Identity();
  Vec3 T = Vec3::Zero();
  int width = 1;
  int height = 1;

  /// Throws Errc::input unless R is a proper rotation and K is upper
  /// triangular with a positive diagonal.
  void validate() const;

  Vec3 center() const { return -R.transpose() * T; }
};

struct Projection {
  double u;
  double v;
  double depth;
};

Projection project(const CameraModel& cam, const Vec3& world);
Vec3 unproject(const CameraModel& cam, double u, double v, double depth);

struct ViewSampleConfig {
  double anchor_azimuth = 0.0;    // radians
  double anchor_elevation = 0.0;  // radians
  double anchor_distance = 3.0;   // meters
  double max_azimuth = 0.0;
  double max_elevation = 0.0;
  double max_distance_fraction = 0.0;
  int views_per_side = 1;
  double sigma_azimuth = 0.0;
  double sigma_elevation = 0.0;
  double sigma_distance = 0.0;  // absolute, meters
  Vec3 center = Vec3::Zero();
  std::uint64_t seed = 0;

  // intrinsics shared by every sampled pose
  double fx = 256.0;
  double fy = 256.0;
  double cx = 128.0;
  double cy = 128.0;
  int width = 256;
  int height = 256;

  void validate() const;
};

struct SphericalPose {
  double azimuth;
  double elevation;
  double distance;
};

/// Camera at the given spherical coordinates around `center`, looking at it
/// with world +z as up.
CameraModel look_at_camera(const ViewSampleConfig& cfg, const SphericalPose& pose);

/// Anchor first, then views_per_side poses towards each of the two endpoints
/// (the +azimuth side first). Deterministic for a given seed.
std::vector<CameraModel> sample_viewpoints(const ViewSampleConfig& cfg);
std::vector<SphericalPose> sample_spherical_poses(const ViewSampleConfig& cfg);

CameraModel read_camera(const std::filesystem::path& path);
void write_camera(const std::filesystem::path& path, const CameraModel& cam);
std::vector<CameraModel> read_camera_list(const std::filesystem::path& path);
std::string camera_list_json(const std::vector<CameraModel>& cams);
void write_camera_list(const std::filesystem::path& path, const std::vector<CameraModel>& cams);

}  // namespace splatmotion

#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "splatmotion/camera.hpp"
#include "splatmotion/geometry.hpp"
#include "splatmotion/scene.hpp"

namespace fixtures {

using splatmotion::Mat3;
using splatmotion::Quat;
using splatmotion::Vec3;

inline Quat random_quat(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return Quat(n(rng), n(rng), n(rng), n(rng)).normalized();
}

inline Vec3 random_vec(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  return {u(rng), u(rng), u(rng)};
}

/// K = [[100,0,50],[0,100,50],[0,0,1]], identity extrinsics, 100x100 image.
inline splatmotion::CameraModel simple_camera() {
  splatmotion::CameraModel cam;
  cam.K << 100, 0, 50, 0, 100, 50, 0, 0, 1;
  cam.width = 100;
  cam.height = 100;
  return cam;
}

inline splatmotion::CameraModel random_camera(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  splatmotion::CameraModel cam;
  const double fx = 200 + 800 * u(rng);
  cam.K << fx, 0.0, 100 + 300 * u(rng), 0.0, fx * (0.8 + 0.4 * u(rng)), 100 + 300 * u(rng), 0, 0, 1;
  cam.R = random_quat(rng).toRotationMatrix();
  cam.T = random_vec(rng, -2.0, 2.0);
  cam.width = 640;
  cam.height = 480;
  return cam;
}

inline splatmotion::GaussianScene random_scene(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  splatmotion::GaussianScene scene;
  scene.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    scene.positions[i] = random_vec(rng, -1.0, 1.0);
    scene.scales[i] = random_vec(rng, 0.01, 0.2);
    scene.rotations[i] = random_quat(rng);
    scene.opacities[i] = 0.05 + 0.9 * u(rng);
    scene.colors[i] = random_vec(rng, -1.0, 1.0);
  }
  return scene;
}

/// 640x640 camera on a 3 m sphere around the origin, 25 deg elevation.
inline splatmotion::CameraModel orbit_camera(double azimuth_deg, double focal = 800.0, int resolution = 640) {
  splatmotion::ViewSampleConfig vs;
  vs.fx = vs.fy = focal;
  vs.cx = vs.cy = resolution / 2.0;
  vs.width = vs.height = resolution;
  constexpr double deg = 3.14159265358979323846 / 180.0;
  return splatmotion::look_at_camera(vs, {azimuth_deg * deg, 25.0 * deg, 3.0});
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / (tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace fixtures

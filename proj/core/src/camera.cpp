#include "splatmotion/camera.hpp"

#include <cmath>
#include <random>
#include <string>

#include <json.hpp>

#include "binary_io.hpp"
#include "json_util.hpp"
#include "splatmotion/error.hpp"

namespace splatmotion {

namespace {

constexpr double kRotationTolerance = 1e-9;

}  // namespace

void CameraModel::validate() const {
  if (!K.allFinite() || !R.allFinite() || !T.allFinite()) throw Error(Errc::input, "camera has non-finite entries");
  if (width <= 0 || height <= 0) throw Error(Errc::input, "camera image size must be positive");
  if (K(1, 0) != 0.0 || K(2, 0) != 0.0 || K(2, 1) != 0.0 || K(0, 0) <= 0.0 || K(1, 1) <= 0.0 || K(2, 2) <= 0.0)
    throw Error(Errc::input, "intrinsics must be upper triangular with positive diagonal");
  if ((R * R.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff() > kRotationTolerance ||
      std::abs(R.determinant() - 1.0) > kRotationTolerance)
    throw Error(Errc::input, "extrinsic rotation is not orthonormal with det +1");
}

Projection project(const CameraModel& cam, const Vec3& world) {
  const Vec3 local = cam.R * world + cam.T;
  if (!(local.z() > 0.0)) throw Error(Errc::behind_camera, "point has non-positive camera depth");
  const Vec3 image = cam.K * local;
  return {image.x() / image.z(), image.y() / image.z(), local.z()};
}

Vec3 unproject(const CameraModel& cam, double u, double v, double depth) {
  if (!(depth > 0.0)) throw Error(Errc::range, "unprojection depth must be positive");
  const Vec3 local = cam.K.triangularView<Eigen::Upper>().solve(Vec3(u * depth, v * depth, depth));
  return cam.R.transpose() * (local - cam.T);
}

void ViewSampleConfig::validate() const {
  if (views_per_side < 1) throw Error(Errc::input, "views_per_side must be >= 1");
  if (max_azimuth < 0.0 || max_elevation < 0.0 || max_distance_fraction < 0.0 || sigma_azimuth < 0.0 ||
      sigma_elevation < 0.0 || sigma_distance < 0.0)
    throw Error(Errc::input, "view sampling margins and sigmas must be non-negative");
  if (!(anchor_distance > 0.0)) throw Error(Errc::input, "anchor distance must be positive");
  if (width <= 0 || height <= 0 || !(fx > 0.0) || !(fy > 0.0)) throw Error(Errc::input, "invalid intrinsics");
}

CameraModel look_at_camera(const ViewSampleConfig& cfg, const SphericalPose& pose) {
  const double ce = std::cos(pose.elevation);
  const Vec3 offset(ce * std::cos(pose.azimuth), ce * std::sin(pose.azimuth), std::sin(pose.elevation));
  const Vec3 eye = cfg.center + pose.distance * offset;

  const Vec3 forward = (cfg.center - eye).normalized();
  Vec3 up = Vec3::UnitZ();
  if (forward.cross(up).norm() < 1e-9) up = Vec3::UnitY();
  const Vec3 right = forward.cross(up).normalized();
  const Vec3 down = forward.cross(right);

  CameraModel cam;
  cam.R.row(0) = right.transpose();
  cam.R.row(1) = down.transpose();
  cam.R.row(2) = forward.transpose();
  cam.T = -cam.R * eye;
  cam.K << cfg.fx, 0.0, cfg.cx, 0.0, cfg.fy, cfg.cy, 0.0, 0.0, 1.0;
  cam.width = cfg.width;
  cam.height = cfg.height;
  return cam;
}

std::vector<SphericalPose> sample_spherical_poses(const ViewSampleConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  auto uniform = [&](double lo, double hi) {
    if (hi <= lo) return lo;
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  auto noise = [&](double sigma) {
    if (sigma <= 0.0) return 0.0;
    return std::normal_distribution<double>(0.0, sigma)(rng);
  };

  const SphericalPose anchor{cfg.anchor_azimuth, cfg.anchor_elevation, cfg.anchor_distance};
  std::vector<SphericalPose> poses{anchor};
  const int n = cfg.views_per_side;
  for (double side : {+1.0, -1.0}) {
    const SphericalPose end{
        anchor.azimuth + side * cfg.max_azimuth,
        uniform(anchor.elevation - cfg.max_elevation, anchor.elevation + cfg.max_elevation),
        uniform(anchor.distance * (1.0 - cfg.max_distance_fraction),
                anchor.distance * (1.0 + cfg.max_distance_fraction)),
    };
    for (int k = 1; k <= n; ++k) {
      const double a = static_cast<double>(k) / n;
      SphericalPose p{
          anchor.azimuth + a * (end.azimuth - anchor.azimuth),
          anchor.elevation + a * (end.elevation - anchor.elevation),
          anchor.distance + a * (end.distance - anchor.distance),
      };
      p.azimuth += noise(cfg.sigma_azimuth);
      p.elevation += noise(cfg.sigma_elevation);
      p.distance = std::max(1e-6, p.distance + noise(cfg.sigma_distance));
      poses.push_back(p);
    }
  }
  return poses;
}

std::vector<CameraModel> sample_viewpoints(const ViewSampleConfig& cfg) {
  std::vector<CameraModel> cams;
  for (const auto& pose : sample_spherical_poses(cfg)) cams.push_back(look_at_camera(cfg, pose));
  return cams;
}

namespace {

nlohmann::ordered_json camera_to_json(const CameraModel& cam) {
  nlohmann::ordered_json j;
  j["K"] = detail::row_major(cam.K);
  j["R"] = detail::row_major(cam.R);
  j["T"] = {cam.T.x(), cam.T.y(), cam.T.z()};
  j["width"] = cam.width;
  j["height"] = cam.height;
  return j;
}

CameraModel camera_from_json(const nlohmann::json& j, const std::string& where) {
  CameraModel cam;
  try {
    cam.K = detail::mat3_from(j.at("K"), where + ".K");
    cam.R = detail::mat3_from(j.at("R"), where + ".R");
    cam.T = detail::vec3_from(j.at("T"), where + ".T");
    cam.width = j.at("width").get<int>();
    cam.height = j.at("height").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse, where + ": " + e.what());
  }
  cam.validate();
  return cam;
}

}  // namespace

CameraModel read_camera(const std::filesystem::path& path) {
  return camera_from_json(detail::parse_json(detail::read_file(path), path.string()), path.string());
}

void write_camera(const std::filesystem::path& path, const CameraModel& cam) {
  detail::write_file(path, camera_to_json(cam).dump(2) + "\n");
}

std::vector<CameraModel> read_camera_list(const std::filesystem::path& path) {
  const auto j = detail::parse_json(detail::read_file(path), path.string());
  if (!j.is_array()) throw Error(Errc::parse, path.string() + ": expected a JSON array of cameras");
  std::vector<CameraModel> cams;
  for (std::size_t i = 0; i < j.size(); ++i)
    cams.push_back(camera_from_json(j[i], path.string() + "[" + std::to_string(i) + "]"));
  return cams;
}

std::string camera_list_json(const std::vector<CameraModel>& cams) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& cam : cams) j.push_back(camera_to_json(cam));
  return j.dump(2) + "\n";
}

void write_camera_list(const std::filesystem::path& path, const std::vector<CameraModel>& cams) {
  detail::write_file(path, camera_list_json(cams));
}

}  // namespace splatmotion

#include "splatmotion/umeyama.hpp"

#include <Eigen/SVD>

#include "splatmotion/error.hpp"

namespace splatmotion {

namespace {

constexpr double kRankTolerance = 1e-10;

void check_sizes(std::span<const Vec3> x, std::span<const Vec3> y, std::span<const double> w) {
  if (x.size() != y.size() || x.size() != w.size())
    throw Error(Errc::input, "point sets and weights differ in length");
}

// Proper rotation closest to the cross-covariance, plus trace(D S) for the
// scale numerator. Empty when the covariance has rank < 2.
std::optional<std::pair<Mat3, double>> procrustes(const Mat3& cov) {
  const Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 sigma = svd.singularValues();
  if (!(sigma[0] > 0.0) || sigma[1] <= kRankTolerance * sigma[0]) return std::nullopt;
  Vec3 sign = Vec3::Ones();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) sign[2] = -1.0;
  const Mat3 rotation = svd.matrixU() * sign.asDiagonal() * svd.matrixV().transpose();
  return std::make_pair(rotation, sigma.dot(sign));
}

}  // namespace

double weighted_residual(const Similarity& sim, std::span<const Vec3> x, std::span<const Vec3> y,
                         std::span<const double> w) {
  check_sizes(x, y, w);
  double total = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) total += w[j] * (sim.apply(x[j]) - y[j]).squaredNorm();
  return total;
}

std::optional<Similarity> weighted_umeyama(std::span<const Vec3> x, std::span<const Vec3> y,
                                           std::span<const double> w) {
  check_sizes(x, y, w);
  if (x.size() < 3) return std::nullopt;
  double total = 0.0;
  for (double wj : w) {
    if (!(wj >= 0.0)) throw Error(Errc::input, "weights must be non-negative");
    total += wj;
  }
  if (!(total > 0.0)) return std::nullopt;

  Vec3 mean_x = Vec3::Zero();
  Vec3 mean_y = Vec3::Zero();
  for (std::size_t j = 0; j < x.size(); ++j) {
    mean_x += (w[j] / total) * x[j];
    mean_y += (w[j] / total) * y[j];
  }
  double var_x = 0.0;
  Mat3 cov = Mat3::Zero();
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double wj = w[j] / total;
    const Vec3 dx = x[j] - mean_x;
    var_x += wj * dx.squaredNorm();
    cov += wj * (y[j] - mean_y) * dx.transpose();
  }
  if (!(var_x > 0.0)) return std::nullopt;

  const auto fit = procrustes(cov);
  if (!fit) return std::nullopt;
  Similarity sim;
  sim.rotation = fit->first;
  sim.scale = fit->second / var_x;
  if (!(sim.scale > 0.0)) return std::nullopt;
  sim.translation = mean_y - sim.scale * (sim.rotation * mean_x);
  return sim;
}

std::optional<RotationScale> rotation_with_fixed_translation(std::span<const Vec3> x, std::span<const Vec3> y,
                                                             std::span<const double> w, const Vec3& t_fixed) {
  check_sizes(x, y, w);
  if (x.size() < 3) return std::nullopt;
  double spread = 0.0;
  Mat3 cov = Mat3::Zero();
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (!(w[j] >= 0.0)) throw Error(Errc::input, "weights must be non-negative");
    spread += w[j] * x[j].squaredNorm();
    cov += w[j] * (y[j] - t_fixed) * x[j].transpose();
  }
  if (!(spread > 0.0)) return std::nullopt;
  const auto fit = procrustes(cov);
  if (!fit) return std::nullopt;
  RotationScale out{fit->first, fit->second / spread};
  if (!(out.scale > 0.0)) return std::nullopt;
  return out;
}

}  // namespace splatmotion

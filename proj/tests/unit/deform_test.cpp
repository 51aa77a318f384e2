#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "fixtures.hpp"
#include "splatmotion/deform.hpp"
#include "splatmotion/error.hpp"
#include "splatmotion/umeyama.hpp"

using namespace splatmotion;

namespace {

AnchorTrajectory anchor(int id, std::vector<Vec3> positions, std::size_t t0) {
  AnchorTrajectory a;
  a.id = id;
  a.t0_global = t0;
  a.observed.assign(positions.size(), true);
  a.positions = std::move(positions);
  return a;
}

GaussianScene scene_at(const std::vector<Vec3>& points) {
  GaussianScene scene;
  scene.resize(points.size());
  scene.positions = points;
  return scene;
}

SelectionMask all_selected(std::size_t n) { return SelectionMask{std::vector<bool>(n, true)}; }

// Anchors on a jittered grid moved by a per-step similarity applied `steps` times.
std::vector<AnchorTrajectory> global_motion(const Similarity& step, std::size_t steps, std::size_t t0) {
  std::mt19937_64 rng(11);
  std::vector<AnchorTrajectory> anchors;
  for (int i = 0; i < 60; ++i) {
    const Vec3 p0 = fixtures::random_vec(rng, -1.0, 1.0);
    std::vector<Vec3> path(steps);
    path[t0] = p0;
    for (std::size_t f = t0 + 1; f < steps; ++f) path[f] = step.apply(path[f - 1]);
    Similarity inverse{1.0 / step.scale, step.rotation.transpose(), Vec3::Zero()};
    inverse.translation = -(inverse.scale * (inverse.rotation * step.translation));
    for (std::size_t f = t0; f > 0; --f) path[f - 1] = inverse.apply(path[f]);
    anchors.push_back(anchor(i, path, t0));
  }
  return anchors;
}

}  // namespace

TEST(KnnWeights, ZeroTemperatureIsUniform) {
  const std::vector<double> d{0.1, 2.0, 5.0, 0.3};
  for (double w : knn_weights(d, 0.0)) EXPECT_DOUBLE_EQ(w, 0.25);
}

TEST(KnnWeights, EqualDistancesAreUniform) {
  for (double w : knn_weights(std::vector<double>(5, 1.7), 40.0)) EXPECT_NEAR(w, 0.2, 1e-15);
}

TEST(KnnWeights, ClosedFormTwoDistances) {
  const auto w = knn_weights(std::vector<double>{0.0, std::log(2.0)}, 1.0);
  EXPECT_NEAR(w[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(w[1], 1.0 / 3.0, 1e-15);
}

TEST(KnnWeights, SumToOneAndPermutationEquivariant) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> d(9);
    for (auto& v : d) v = u(rng);
    const double tau = 100.0 * u(rng);
    const auto w = knn_weights(d, tau);
    double sum = 0.0;
    for (double v : w) sum += v;
    EXPECT_NEAR(sum, 1.0, 1e-12);
    std::vector<std::size_t> perm(d.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> dp(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) dp[i] = d[perm[i]];
    const auto wp = knn_weights(dp, tau);
    for (std::size_t i = 0; i < d.size(); ++i) EXPECT_NEAR(wp[i], w[perm[i]], 1e-15);
  }
}

TEST(KnnWeights, LargeTemperatureStaysFinite) {
  const auto w = knn_weights(std::vector<double>{10.0, 10.5}, 1e4);
  EXPECT_NEAR(w[0], 1.0, 1e-15);
  EXPECT_TRUE(std::isfinite(w[1]));
}

TEST(KnnWeights, RejectsEmpty) {
  EXPECT_THROW(knn_weights(std::vector<double>{}, 1.0), Error);
}

TEST(LinearTransfer, Examples) {
  const std::vector<Vec3> zero(3, Vec3::Zero());
  EXPECT_EQ(linear_transfer(zero, std::vector<double>(3, 1.0 / 3)), Vec3::Zero());
  const std::vector<Vec3> one{Vec3(0.1, -0.2, 0.3)};
  EXPECT_EQ(linear_transfer(one, std::vector<double>{1.0}), one[0]);
  const Vec3 v(0.5, 0.25, -1.0);
  const std::vector<Vec3> global(4, v);
  EXPECT_LT((linear_transfer(global, std::vector<double>{0.1, 0.2, 0.3, 0.4}) - v).norm(), 1e-15);
}

TEST(RigidTransfer, PureTranslation) {
  std::mt19937_64 rng(2);
  std::vector<Vec3> x, y;
  const Vec3 t(0.2, 0.0, -0.1);
  for (int i = 0; i < 6; ++i) {
    x.push_back(fixtures::random_vec(rng, -1, 1));
    y.push_back(x.back() + t);
  }
  const Vec3 mu(0.3, 0.3, 0.3);
  const auto step = rigid_transfer(mu, x, y, std::vector<double>(6, 1.0 / 6));
  EXPECT_FALSE(step.fallback);
  EXPECT_LT((step.position - (mu + t)).norm(), 1e-12);
  EXPECT_LT(step.rotation_delta.angularDistance(Quat::Identity()), 1e-12);
  EXPECT_NEAR(step.scale_factor, 1.0, 1e-12);
}

TEST(RigidTransfer, QuarterTurnAboutZ) {
  const Mat3 Rz = Eigen::AngleAxisd(std::numbers::pi / 2, Vec3::UnitZ()).toRotationMatrix();
  const std::vector<Vec3> x{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 1}};
  std::vector<Vec3> y;
  for (const auto& p : x) y.push_back(Rz * p);
  const auto step = rigid_transfer(Vec3(2, 0, 0.5), x, y, std::vector<double>(4, 0.25));
  EXPECT_LT((step.position - Vec3(0, 2, 0.5)).norm(), 1e-12);
  EXPECT_NEAR(step.rotation_delta.angularDistance(Quat::Identity()), std::numbers::pi / 2, 1e-12);
}

TEST(RigidTransfer, DegenerateFallsBackToTranslation) {
  const std::vector<Vec3> x{{0, 0, 0}, {1, 0, 0}};
  const std::vector<Vec3> y{{0, 1, 0}, {1, 1, 0}};
  const auto step = rigid_transfer(Vec3(5, 5, 5), x, y, std::vector<double>{0.5, 0.5});
  EXPECT_TRUE(step.fallback);
  EXPECT_LT((step.position - Vec3(5, 6, 5)).norm(), 1e-15);
  EXPECT_EQ(step.scale_factor, 1.0);
}

TEST(ScheduleK, RampAndClamp) {
  EXPECT_EQ(schedule_K(1), 50u);
  EXPECT_EQ(schedule_K(2), 75u);
  EXPECT_EQ(schedule_K(3), 100u);
  EXPECT_EQ(schedule_K(5), 150u);
  EXPECT_EQ(schedule_K(12), 150u);
  EXPECT_EQ(schedule_K(3, 40), 40u);
  EXPECT_THROW(schedule_K(0), Error);
  for (int v = 1; v < 20; ++v) EXPECT_LE(schedule_K(v), schedule_K(v + 1));
}

TEST(DefaultTau, TenOverMedianSpacing) {
  std::vector<Vec3> grid;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) grid.emplace_back(0.1 * i, 0.1 * j, 0.0);
  EXPECT_NEAR(default_tau(grid), 100.0, 1e-9);
  auto doubled = grid;
  doubled.insert(doubled.end(), grid.begin(), grid.end());
  EXPECT_NEAR(default_tau(doubled), 100.0, 1e-9);
  EXPECT_EQ(default_tau(std::vector<Vec3>{Vec3::Zero()}), 0.0);
}

TEST(BuildDynamicScene, ZeroMotionIsIdentity) {
  std::vector<AnchorTrajectory> anchors;
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) anchors.push_back(anchor(i, std::vector<Vec3>(5, fixtures::random_vec(rng, -1, 1)), 2));
  const auto scene = fixtures::random_scene(30, 4);
  for (auto mode : {TransferMode::linear, TransferMode::rigid}) {
    TransferConfig cfg;
    cfg.mode = mode;
    const auto dyn = build_dynamic_scene(scene, all_selected(30), anchors, cfg);
    dyn.validate();
    EXPECT_EQ(dyn.frame_count(), 5u);
    EXPECT_EQ(dyn.neighbors, 20u);
    for (const auto& frame : dyn.frames)
      for (const auto& u : frame) {
        EXPECT_LT(u.translation.norm(), 1e-12);
        EXPECT_LT(u.rotation_delta.angularDistance(Quat::Identity()), 1e-7);
        EXPECT_NEAR(u.scale_factor, 1.0, 1e-12);
      }
  }
}

TEST(BuildDynamicScene, GlobalRigidMotionComposes) {
  const Similarity step{1.0, Eigen::AngleAxisd(0.1, Vec3(1, 2, 3).normalized()).toRotationMatrix(),
                        Vec3(0.02, -0.01, 0.03)};
  const std::size_t t0 = 2;
  const auto anchors = global_motion(step, 6, t0);
  const auto scene = fixtures::random_scene(25, 5);
  TransferConfig cfg;
  cfg.mode = TransferMode::rigid;
  const auto dyn = build_dynamic_scene(scene, all_selected(25), anchors, cfg);
  dyn.validate();
  for (const auto& u : dyn.frames[t0]) EXPECT_EQ(u.translation, Vec3::Zero());
  const Quat q_step(step.rotation);
  for (std::size_t f = 0; f < dyn.frame_count(); ++f) {
    const int n = static_cast<int>(f) - static_cast<int>(t0);
    Similarity cumulative;
    for (int i = 0; i < std::abs(n); ++i) {
      if (n > 0) {
        cumulative = {1.0, step.rotation * cumulative.rotation, step.rotation * cumulative.translation + step.translation};
      } else {
        const Mat3 Ri = step.rotation.transpose();
        cumulative = {1.0, Ri * cumulative.rotation, Ri * (cumulative.translation - step.translation)};
      }
    }
    for (std::size_t s = 0; s < dyn.selected_count(); ++s) {
      const Vec3& mu = scene.positions[dyn.selected[s]];
      const auto& u = dyn.frames[f][s];
      EXPECT_LT((mu + u.translation - cumulative.apply(mu)).norm(), 1e-9);
      EXPECT_LT(u.rotation_delta.angularDistance(Quat(cumulative.rotation)), 1e-9);
      EXPECT_NEAR(u.scale_factor, 1.0, 1e-9);
    }
  }
}

TEST(BuildDynamicScene, LinearTransfersGlobalTranslation) {
  const Similarity step{1.0, Mat3::Identity(), Vec3(0.05, 0.0, -0.02)};
  const auto anchors = global_motion(step, 4, 0);
  const auto scene = fixtures::random_scene(10, 6);
  const auto dyn = build_dynamic_scene(scene, all_selected(10), anchors, TransferConfig{});
  for (std::size_t f = 0; f < 4; ++f)
    for (const auto& u : dyn.frames[f]) EXPECT_LT((u.translation - double(f) * step.translation).norm(), 1e-12);
}

// Two anchors swing round while a third, behind the query point, stays put.
TEST(BuildDynamicScene, RigidRotatesWhereLinearDoesNot) {
  const Mat3 Rz = Eigen::AngleAxisd(0.5, Vec3::UnitZ()).toRotationMatrix();
  const Vec3 a(1.0, 0.0, 0.0), b(0.0, 1.0, 0.0), c(0.0, 0.0, -1.0);
  std::vector<AnchorTrajectory> anchors{anchor(0, {a, Rz * a}, 0), anchor(1, {b, Rz * b}, 0), anchor(2, {c, c}, 0)};
  const auto scene = scene_at({Vec3(0.3, 0.3, -0.2)});
  TransferConfig cfg;
  cfg.tau = 0.0;
  cfg.mode = TransferMode::linear;
  const auto linear = build_dynamic_scene(scene, all_selected(1), anchors, cfg);
  cfg.mode = TransferMode::rigid;
  const auto rigid = build_dynamic_scene(scene, all_selected(1), anchors, cfg);
  EXPECT_EQ(linear.frames[1][0].rotation_delta.coeffs(), Quat::Identity().coeffs());
  EXPECT_GT(rigid.frames[1][0].rotation_delta.angularDistance(Quat::Identity()), 0.1);
  EXPECT_GT(linear.frames[1][0].translation.norm(), 0.0);
}

TEST(BuildDynamicScene, LinearRotationEstimateGate) {
  const Similarity step{1.0, Eigen::AngleAxisd(0.2, Vec3::UnitY()).toRotationMatrix(), Vec3::Zero()};
  const auto anchors = global_motion(step, 3, 0);
  const auto scene = fixtures::random_scene(5, 7);
  TransferConfig cfg;
  const auto off = build_dynamic_scene(scene, all_selected(5), anchors, cfg);
  for (const auto& frame : off.frames)
    for (const auto& u : frame) {
      EXPECT_EQ(u.rotation_delta.coeffs(), Quat::Identity().coeffs());
      EXPECT_EQ(u.scale_factor, 1.0);
    }
  cfg.estimate_rotation_scale = true;
  const auto on = build_dynamic_scene(scene, all_selected(5), anchors, cfg);
  EXPECT_GT(on.frames[2][0].rotation_delta.angularDistance(Quat::Identity()), 0.05);
}

TEST(BuildDynamicScene, UnobservedAnchorsAreDropped) {
  const Vec3 v(0.1, 0.0, 0.0);
  std::vector<AnchorTrajectory> anchors;
  std::mt19937_64 rng(8);
  for (int i = 0; i < 10; ++i) {
    const Vec3 p = fixtures::random_vec(rng, -1, 1);
    anchors.push_back(anchor(i, {p, p + v}, 0));
  }
  // A wildly moving anchor that is never seen at step 1 must not contribute.
  auto rogue = anchor(10, {Vec3(0, 0, 0), Vec3(100, 100, 100)}, 0);
  rogue.observed[1] = false;
  anchors.push_back(rogue);
  const auto scene = scene_at({Vec3(0, 0, 0)});
  TransferConfig cfg;
  cfg.tau = 0.0;
  const auto dyn = build_dynamic_scene(scene, all_selected(1), anchors, cfg);
  EXPECT_LT((dyn.frames[1][0].translation - v).norm(), 1e-12);
}

TEST(BuildDynamicScene, Errors) {
  const auto scene = fixtures::random_scene(4, 9);
  EXPECT_THROW(
      {
        try {
          build_dynamic_scene(scene, all_selected(4), std::vector<AnchorTrajectory>{}, TransferConfig{});
        } catch (const Error& e) {
          EXPECT_EQ(e.code(), Errc::empty_guidance);
          throw;
        }
      },
      Error);
  const std::vector<AnchorTrajectory> anchors{anchor(0, {Vec3::Zero(), Vec3::Zero()}, 0)};
  EXPECT_THROW(build_dynamic_scene(scene, SelectionMask{std::vector<bool>(4, false)}, anchors, TransferConfig{}),
               Error);
}

TEST(BuildDynamicScene, DeterministicAcrossThreadCounts) {
  const Similarity step{1.02, Eigen::AngleAxisd(0.1, Vec3::UnitX()).toRotationMatrix(), Vec3(0.01, 0.02, 0.0)};
  const auto anchors = global_motion(step, 5, 1);
  const auto scene = fixtures::random_scene(200, 10);
  TransferConfig cfg;
  cfg.mode = TransferMode::rigid;
  setenv("G2L_THREADS", "1", 1);
  const auto one = build_dynamic_scene(scene, all_selected(200), anchors, cfg);
  setenv("G2L_THREADS", "4", 1);
  const auto four = build_dynamic_scene(scene, all_selected(200), anchors, cfg);
  unsetenv("G2L_THREADS");
  for (std::size_t f = 0; f < one.frame_count(); ++f)
    for (std::size_t s = 0; s < one.selected_count(); ++s) {
      EXPECT_EQ(one.frames[f][s].translation, four.frames[f][s].translation);
      EXPECT_EQ(one.frames[f][s].rotation_delta.coeffs(), four.frames[f][s].rotation_delta.coeffs());
    }
}

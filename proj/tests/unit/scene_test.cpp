#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "fixtures.hpp"
#include "splatmotion/dynamic_scene.hpp"
#include "splatmotion/error.hpp"
#include "splatmotion/scene.hpp"

using namespace splatmotion;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Single-vertex PLY with the given raw property values.
void write_one_vertex(const std::filesystem::path& path, float scale0, float opacity, float rot_w = 1.0f) {
  std::string header =
      "ply\nformat binary_little_endian 1.0\nelement vertex 1\n"
      "property float x\nproperty float y\nproperty float z\n"
      "property float nx\nproperty float ny\nproperty float nz\n"
      "property float f_dc_0\nproperty float f_dc_1\nproperty float f_dc_2\n"
      "property float opacity\n"
      "property float scale_0\nproperty float scale_1\nproperty float scale_2\n"
      "property float rot_0\nproperty float rot_1\nproperty float rot_2\nproperty float rot_3\n"
      "end_header\n";
  const float values[17] = {1, 2, 3, 0, 0, 0, 0.1f, 0.2f, 0.3f, opacity, scale0, 0, 0, rot_w, 0, 0, 0};
  std::ofstream out(path, std::ios::binary);
  out << header;
  out.write(reinterpret_cast<const char*>(values), sizeof values);
}

DynamicScene translation_dyn(std::size_t n, const std::vector<std::size_t>& selected, const std::vector<Vec3>& steps) {
  DynamicScene dyn;
  dyn.num_gaussians = n;
  dyn.selected = selected;
  for (std::size_t f = 0; f < steps.size(); ++f) {
    dyn.timeline.push_back(static_cast<int>(f));
    std::vector<GaussianUpdate> frame(selected.size());
    for (auto& u : frame) u.translation = steps[f];
    dyn.frames.push_back(frame);
  }
  return dyn;
}

}  // namespace

TEST(LoadScene, DecodesScaleAndOpacity) {
  fixtures::TempDir dir("scene");
  write_one_vertex(dir / "one.ply", 0.0f, 0.0f);
  const auto scene = load_scene(dir / "one.ply");
  ASSERT_EQ(scene.count(), 1u);
  EXPECT_EQ(scene.scales[0].x(), 1.0);
  EXPECT_EQ(scene.opacities[0], 0.5);
  EXPECT_EQ(scene.positions[0], Vec3(1, 2, 3));
}

TEST(LoadScene, NormalisesQuaternions) {
  fixtures::TempDir dir("scene");
  write_one_vertex(dir / "q.ply", 0.0f, 0.0f, 2.0f);
  const auto scene = load_scene(dir / "q.ply");
  EXPECT_NEAR(scene.rotations[0].norm(), 1.0, 1e-12);
}

TEST(LoadScene, MissingPropertyNamesIt) {
  fixtures::TempDir dir("scene");
  std::ofstream(dir / "bad.ply", std::ios::binary)
      << "ply\nformat binary_little_endian 1.0\nelement vertex 1\nproperty float x\nproperty float y\nend_header\n"
      << std::string(8, '\0');
  try {
    load_scene(dir / "bad.ply");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::parse);
    EXPECT_NE(std::string(e.what()).find("'z'"), std::string::npos);
  }
}

TEST(LoadScene, NonFiniteValueNamesRow) {
  fixtures::TempDir dir("scene");
  write_one_vertex(dir / "nan.ply", std::nanf(""), 0.0f);
  try {
    load_scene(dir / "nan.ply");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::parse);
    EXPECT_NE(std::string(e.what()).find("scale_0"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("row 0"), std::string::npos);
  }
}

TEST(SaveScene, EncodesScaleAndOpacity) {
  fixtures::TempDir dir("scene");
  GaussianScene scene;
  scene.resize(1);
  scene.opacities[0] = 0.5;
  save_scene(scene, dir / "s.ply");
  const std::string bytes = slurp(dir / "s.ply");
  const auto body = bytes.find("end_header\n") + 11;
  float raw[17];
  std::memcpy(raw, bytes.data() + body, sizeof raw);
  EXPECT_EQ(raw[9], 0.0f);   // opacity logit
  EXPECT_EQ(raw[10], 0.0f);  // scale_0 log
}

TEST(SaveScene, RoundTripIsBitIdentical) {
  fixtures::TempDir dir("scene");
  auto scene = fixtures::random_scene(1000, 3);
  scene.rest_per_gaussian = 9;
  scene.rest.assign(scene.count() * 9, 0.25f);
  save_scene(scene, dir / "a.ply");
  const auto loaded = load_scene(dir / "a.ply");
  save_scene(loaded, dir / "b.ply");
  EXPECT_EQ(slurp(dir / "a.ply"), slurp(dir / "b.ply"));
  for (std::size_t i = 0; i < scene.count(); ++i) {
    EXPECT_LT((loaded.positions[i] - scene.positions[i]).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_LT((loaded.scales[i] - scene.scales[i]).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_LT(std::abs(loaded.opacities[i] - scene.opacities[i]), 1e-6);
    EXPECT_LT((loaded.colors[i] - scene.colors[i]).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_LT(std::min((loaded.rotations[i].coeffs() - scene.rotations[i].coeffs()).cwiseAbs().maxCoeff(),
                       (loaded.rotations[i].coeffs() + scene.rotations[i].coeffs()).cwiseAbs().maxCoeff()),
              1e-6);
  }
  EXPECT_EQ(loaded.rest, scene.rest);
}

TEST(SaveScene, UnwritablePathIsIoError) {
  try {
    save_scene(fixtures::random_scene(2, 1), "/nonexistent-dir/x.ply");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::io);
  }
}

TEST(SelectByBbox, CentreAndBoundaryInclusive) {
  GaussianScene scene;
  scene.resize(3);
  scene.positions = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(1.0000001, 0, 0)};
  BoundingBox3 box;
  const auto mask = select_by_bbox(scene, box);
  EXPECT_TRUE(mask.flags[0]);
  EXPECT_TRUE(mask.flags[1]);
  EXPECT_FALSE(mask.flags[2]);
}

TEST(SelectByBbox, MatchesBruteForce) {
  const auto scene = fixtures::random_scene(10000, 17);
  std::mt19937_64 rng(4);
  BoundingBox3 box;
  box.center = Vec3(0.1, -0.2, 0.05);
  box.half_extents = Vec3(0.5, 0.3, 0.7);
  box.rotation = fixtures::random_quat(rng);
  const auto mask = select_by_bbox(scene, box);
  const Mat3 to_box = box.rotation.toRotationMatrix().transpose();
  for (std::size_t i = 0; i < scene.count(); ++i) {
    const Vec3 local = to_box * (scene.positions[i] - box.center);
    const bool inside = std::abs(local.x()) <= box.half_extents.x() && std::abs(local.y()) <= box.half_extents.y() &&
                        std::abs(local.z()) <= box.half_extents.z();
    EXPECT_EQ(mask.flags[i], inside) << i;
  }
}

TEST(SelectByBbox, InvariantUnderJointRigidMotion) {
  auto scene = fixtures::random_scene(3000, 23);
  BoundingBox3 box;
  box.half_extents = Vec3(0.4, 0.5, 0.6);
  const auto before = select_by_bbox(scene, box);
  const Quat q(Eigen::AngleAxisd(0.7, Vec3(1, 2, 3).normalized()));
  const Vec3 t(0.3, -1.0, 2.0);
  for (auto& p : scene.positions) p = q * p + t;
  box.center = q * box.center + t;
  box.rotation = q * box.rotation;
  EXPECT_EQ(select_by_bbox(scene, box).flags, before.flags);
}

TEST(Selection, TextRoundTrip) {
  fixtures::TempDir dir("sel");
  SelectionMask mask{{true, false, false, true}};
  write_selection(dir / "m.txt", mask);
  EXPECT_EQ(slurp(dir / "m.txt"), "1\n0\n0\n1\n");
  EXPECT_EQ(read_selection(dir / "m.txt").flags, mask.flags);
}

TEST(ApplyDeformation, TimeZeroIsInput) {
  const auto scene = fixtures::random_scene(20, 2);
  auto dyn = translation_dyn(20, {1, 4, 9}, {Vec3::Zero(), Vec3(1, 0, 0), Vec3(2, 0, 0)});
  const auto out = apply_deformation(scene, dyn, 0.0);
  for (std::size_t i = 0; i < scene.count(); ++i) {
    EXPECT_EQ(out.positions[i], scene.positions[i]);
    EXPECT_EQ(out.rotations[i].coeffs(), scene.rotations[i].coeffs());
    EXPECT_EQ(out.scales[i], scene.scales[i]);
  }
}

TEST(ApplyDeformation, DiscreteFrameIsExactAndMidpointIsLinear) {
  const auto scene = fixtures::random_scene(5, 8);
  auto dyn = translation_dyn(5, {0, 2}, {Vec3::Zero(), Vec3(2, 0, 0)});
  dyn.frames[1][0].rotation_delta = Quat(Eigen::AngleAxisd(0.8, Vec3::UnitZ()));
  dyn.frames[1][0].scale_factor = 3.0;

  const auto end = apply_deformation(scene, dyn, 1.0);
  EXPECT_LT((end.positions[0] - (scene.positions[0] + Vec3(2, 0, 0))).norm(), 1e-15);
  EXPECT_LT((end.scales[0] - 3.0 * scene.scales[0]).norm(), 1e-15);
  EXPECT_LT(end.rotations[0].angularDistance(dyn.frames[1][0].rotation_delta * scene.rotations[0]), 1e-12);

  const auto mid = apply_deformation(scene, dyn, 0.5);
  EXPECT_LT((mid.positions[2] - scene.positions[2] - Vec3(1, 0, 0)).norm(), 1e-15);
  EXPECT_LT((mid.scales[0] - 2.0 * scene.scales[0]).norm(), 1e-15);
  EXPECT_LT(mid.rotations[0].angularDistance(Quat(Eigen::AngleAxisd(0.4, Vec3::UnitZ())) * scene.rotations[0]), 1e-12);
  EXPECT_EQ(mid.positions[1], scene.positions[1]);
}

TEST(ApplyDeformation, DisplacementIsAffineBetweenFrames) {
  const auto scene = fixtures::random_scene(3, 9);
  const auto dyn = translation_dyn(3, {0}, {Vec3::Zero(), Vec3(1, 2, 3), Vec3(-1, 0, 4)});
  for (double t : {0.6, 0.7, 0.85}) {
    const Vec3 d = apply_deformation(scene, dyn, t).positions[0] - scene.positions[0];
    const double a = (t - 0.5) / 0.5;
    EXPECT_LT((d - ((1 - a) * Vec3(1, 2, 3) + a * Vec3(-1, 0, 4))).norm(), 1e-12);
  }
}

TEST(ApplyDeformation, NeverTouchesOpacity) {
  const auto scene = fixtures::random_scene(10, 12);
  auto dyn = translation_dyn(10, {0, 1, 2, 3}, {Vec3::Zero(), Vec3(1, 1, 1)});
  for (auto& u : dyn.frames[1]) u.scale_factor = 0.5;
  for (double t : {0.0, 0.3, 1.0}) EXPECT_EQ(apply_deformation(scene, dyn, t).opacities, scene.opacities);
}

TEST(ApplyDeformation, OutOfRangeTime) {
  const auto scene = fixtures::random_scene(2, 1);
  const auto dyn = translation_dyn(2, {0}, {Vec3::Zero(), Vec3::Ones()});
  for (double t : {-0.01, 1.01}) {
    try {
      apply_deformation(scene, dyn, t);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::range);
    }
  }
}

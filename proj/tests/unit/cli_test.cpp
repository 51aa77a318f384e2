#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <string>

#include <json.hpp>

#include "fixtures.hpp"
#include "splatmotion/dynamic_scene.hpp"
#include "splatmotion/formats.hpp"
#include "splatmotion/metrics.hpp"
#include "splatmotion/scene.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace splatmotion;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

CliResult run(const fixtures::TempDir& dir, const std::string& args) {
  const auto out = dir / "stdout.txt";
  const auto err = dir / "stderr.txt";
  const std::string cmd =
      std::string("\"") + SPLATMOTION_CLI + "\" " + args + " >\"" + out.string() + "\" 2>\"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

void write_json(const fs::path& p, const json& j) { std::ofstream(p) << j.dump(2); }

// synth fixture with only fully visible tracks
fs::path make_fixture(const fixtures::TempDir& dir, const std::string& name, const std::string& extra = "") {
  const auto fx = dir / name;
  const CliResult r = run(dir, "synth -o " + q(fx) + " --visible-only " + extra);
  EXPECT_EQ(r.code, 0) << r.err;
  return fx;
}

}  // namespace

TEST(Cli, SynthLiftDeformMetrics) {
  fixtures::TempDir dir("cli_e2e");
  const auto fx = make_fixture(dir, "fx");
  const auto cfg = fx / "config.json";
  const auto truth = read_json(fx / "ground_truth.json");

  const CliResult lift = run(dir, "lift -c " + q(cfg));
  ASSERT_EQ(lift.code, 0) << lift.err;
  const auto manifest = json::parse(lift.out);
  EXPECT_EQ(manifest["counts"]["kept"], truth["in_box_tracks"]);
  EXPECT_EQ(manifest["counts"]["discarded_tracking"], 0);
  EXPECT_EQ(manifest["config_hash"].get<std::string>().rfind("fnv1a64:", 0), 0u);

  const CliResult deform = run(dir, "deform -c " + q(cfg));
  ASSERT_EQ(deform.code, 0) << deform.err;
  const auto dm = json::parse(deform.out);
  EXPECT_EQ(dm["mode"], "rigid");
  EXPECT_GE(dm["K"].get<int>(), 1);
  EXPECT_LE(dm["K"].get<int>(), 150);

  const auto dyn = read_dynamic_scene(fx / "out" / "scene.dyn");
  const auto scene = load_scene(fx / "scene.ply");
  for (const auto& u : dyn.frames[dyn.t0_frame]) {
    EXPECT_EQ(u.translation, Vec3::Zero());
    EXPECT_EQ(u.scale_factor, 1.0);
  }
  const auto& transforms = truth["transforms"];
  for (std::size_t f = 0; f < dyn.frame_count(); ++f) {
    const auto& t = transforms[f];
    Mat3 R;
    for (int i = 0; i < 9; ++i) R(i / 3, i % 3) = t["rotation"][i].get<double>();
    const Vec3 T(t["translation"][0].get<double>(), t["translation"][1].get<double>(), t["translation"][2].get<double>());
    for (std::size_t s = 0; s < dyn.selected_count(); ++s) {
      const Vec3& mu = scene.positions[dyn.selected[s]];
      EXPECT_LT((mu + dyn.frames[f][s].translation - (R * mu + T)).norm(), 1e-5);
      // Depths pass through float32 files; the default temperature leaves the
      // rotation fit resting on near-coincident anchors, which amplifies that.
      EXPECT_LT(dyn.frames[f][s].rotation_delta.angularDistance(Quat(R)), 2e-3);
    }
  }

  const CliResult metrics = run(dir, "metrics -c " + q(cfg) + " " + q(fx / "out" / "scene.dyn"));
  ASSERT_EQ(metrics.code, 0) << metrics.err;
  const auto report = json::parse(metrics.out);
  EXPECT_EQ(report["k_eval"], 20);
  EXPECT_EQ(report["reports"].size(), 1u);
  EXPECT_FALSE(report.contains("ranks"));
  EXPECT_LT(report["reports"][0]["metrics"]["rigidity"].get<double>(), 1e-8);
  EXPECT_GT(report["reports"][0]["metrics"]["displacement"].get<double>(), 0.0);
}

TEST(Cli, RerunIsBitIdentical) {
  fixtures::TempDir dir("cli_rerun");
  const auto a = make_fixture(dir, "a", "--seed 3");
  const auto b = make_fixture(dir, "b", "--seed 3");
  for (const char* f : {"scene.ply", "tracks_0.jsonl", "depth/depth_1_005.pfm", "flow/time_0_003.flo", "config.json",
                        "ground_truth.json", "cameras.json"})
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  for (const auto& fx : {a, b}) {
    ASSERT_EQ(run(dir, "lift -c " + q(fx / "config.json")).code, 0);
    ASSERT_EQ(run(dir, "deform -c " + q(fx / "config.json")).code, 0);
  }
  for (const char* f : {"out/anchors.jsonl", "out/lift_manifest.json", "out/scene.dyn", "out/deform_manifest.json"})
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
}

TEST(Cli, MetricsRanksMultipleScenes) {
  fixtures::TempDir dir("cli_rank");
  const auto fx = make_fixture(dir, "fx");
  const auto cfg = fx / "config.json";
  ASSERT_EQ(run(dir, "lift -c " + q(cfg)).code, 0);
  ASSERT_EQ(run(dir, "deform -c " + q(cfg)).code, 0);
  auto still = read_dynamic_scene(fx / "out" / "scene.dyn");
  for (auto& frame : still.frames)
    for (auto& u : frame) u = GaussianUpdate::identity();
  write_dynamic_scene(dir / "still.dyn", still);
  const CliResult r =
      run(dir, "metrics -c " + q(cfg) + " " + q(fx / "out" / "scene.dyn") + " " + q(dir / "still.dyn"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = json::parse(r.out);
  ASSERT_EQ(report["ranks"].size(), 2u);
  EXPECT_EQ(report["ranks"][0]["displacement"], 1);
  EXPECT_EQ(report["ranks"][1]["displacement"], 2);
  EXPECT_EQ(report["reports"][1]["metrics"]["isometry"].get<double>(), 0.0);
}

TEST(Cli, EmptyTracksAreEmptyGuidance) {
  fixtures::TempDir dir("cli_empty");
  const auto fx = make_fixture(dir, "fx");
  std::ofstream(fx / "tracks_0.jsonl").close();
  std::ofstream(fx / "tracks_1.jsonl").close();
  const CliResult r = run(dir, "lift -c " + q(fx / "config.json"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("empty-guidance"), std::string::npos) << r.err;
}

TEST(Cli, EmptySelectionIsInvalidInput) {
  fixtures::TempDir dir("cli_sel");
  const auto fx = make_fixture(dir, "fx");
  ASSERT_EQ(run(dir, "lift -c " + q(fx / "config.json")).code, 0);
  auto sel = read_selection(fx / "selection.txt");
  std::fill(sel.flags.begin(), sel.flags.end(), false);
  write_selection(fx / "selection.txt", sel);
  EXPECT_EQ(run(dir, "deform -c " + q(fx / "config.json")).code, 2);
}

TEST(Cli, DepthSpikeIsRepairedOrDiscarded) {
  fixtures::TempDir dir("cli_spike");
  const auto fx = make_fixture(dir, "fx");
  const auto cfg = fx / "config.json";
  const CliResult clean = run(dir, "lift -c " + q(cfg));
  ASSERT_EQ(clean.code, 0);
  const auto before = json::parse(clean.out)["counts"];

  // Push one track's footprint at frame 3 far away in depth.
  std::ifstream in(fx / "tracks_0.jsonl");
  std::string line;
  std::getline(in, line);
  const auto track = json::parse(line);
  const double u = track["uv"][3][0].get<double>(), v = track["uv"][3][1].get<double>();
  auto map = read_pfm(fx / "depth" / "depth_0_003.pfm");
  const int x = static_cast<int>(std::floor(u)), y = static_cast<int>(std::floor(v));
  for (int dy = -3; dy <= 4; ++dy)
    for (int dx = -3; dx <= 4; ++dx) map.at(x + dx, y + dy) = 9.0;
  write_pfm(fx / "depth" / "depth_0_003.pfm", map);

  const CliResult spiked = run(dir, "lift -c " + q(cfg));
  ASSERT_EQ(spiked.code, 0) << spiked.err;
  const auto after = json::parse(spiked.out)["counts"];
  EXPECT_GE(after["discarded_tracking"].get<int>(), before["discarded_tracking"].get<int>() + 1);
}

TEST(Cli, UnknownConfigKeyIsRejected) {
  fixtures::TempDir dir("cli_key");
  const auto fx = make_fixture(dir, "fx");
  auto doc = read_json(fx / "config.json");
  doc["transfer"]["neighbours"] = 10;
  write_json(fx / "config.json", doc);
  const CliResult r = run(dir, "deform -c " + q(fx / "config.json"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("neighbours"), std::string::npos) << r.err;
}

TEST(Cli, MissingInputFileIsInvalidInput) {
  fixtures::TempDir dir("cli_missing");
  const auto fx = make_fixture(dir, "fx");
  fs::remove(fx / "depth" / "gt_1.pfm");
  EXPECT_EQ(run(dir, "lift -c " + q(fx / "config.json")).code, 2);
  EXPECT_EQ(run(dir, "lift").code, 2);
}

TEST(Cli, FlagsOverrideConfig) {
  fixtures::TempDir dir("cli_flags");
  const auto fx = make_fixture(dir, "fx");
  const auto cfg = fx / "config.json";
  ASSERT_EQ(run(dir, "lift -c " + q(cfg)).code, 0);
  const CliResult r = run(dir, "deform -c " + q(cfg) + " --mode linear --neighbors 7 --tau 0");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto m = json::parse(r.out);
  EXPECT_EQ(m["mode"], "linear");
  EXPECT_EQ(m["K"], 7);
  EXPECT_EQ(m["tau"], 0.0);
}

TEST(Cli, ModerateTemperatureRecoversRotationThroughFiles) {
  fixtures::TempDir dir("cli_tau");
  const auto fx = make_fixture(dir, "fx");
  const auto cfg = fx / "config.json";
  ASSERT_EQ(run(dir, "lift -c " + q(cfg)).code, 0);
  ASSERT_EQ(run(dir, "deform -c " + q(cfg) + " --tau 10").code, 0);
  const auto dyn = read_dynamic_scene(fx / "out" / "scene.dyn");
  const auto truth = read_json(fx / "ground_truth.json");
  const auto& transforms = truth["transforms"];
  for (std::size_t f = 0; f < dyn.frame_count(); ++f) {
    Mat3 R;
    for (int i = 0; i < 9; ++i) R(i / 3, i % 3) = transforms[f]["rotation"][i].get<double>();
    for (const auto& u : dyn.frames[f]) EXPECT_LT(u.rotation_delta.angularDistance(Quat(R)), 1e-4);
  }
}

TEST(Cli, WarpWithZeroFlowsIsIdentity) {
  fixtures::TempDir dir("cli_warp");
  Image img(6, 4, 3);
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = double(i % 256) / 255.0;
  write_image(dir / "f0.ppm", img);
  write_image(dir / "f1.ppm", img);
  write_flo(dir / "view.flo", FlowField(6, 4));
  write_flo(dir / "t0.flo", FlowField(6, 4));
  write_flo(dir / "t1.flo", FlowField(6, 4));
  const CliResult r = run(dir, "warp-flow --frames " + q(dir / "f0.ppm") + " " + q(dir / "f1.ppm") + " --view-flow " +
                             q(dir / "view.flo") + " --time-flows " + q(dir / "t0.flo") + " " + q(dir / "t1.flo") +
                             " -o " + q(dir / "warped"));
  ASSERT_EQ(r.code, 0) << r.err;
  std::size_t count = 0;
  for (const auto& entry : fs::directory_iterator(dir / "warped")) {
    EXPECT_EQ(slurp(entry.path()), slurp(dir / "f0.ppm")) << entry.path();
    ++count;
  }
  EXPECT_EQ(count, 2u);
}

TEST(Cli, SampleViewsWithZeroMarginsRepeatsTheAnchor) {
  fixtures::TempDir dir("cli_views");
  write_json(dir / "cfg.json", {{"view_sampling", {{"anchor_azimuth_deg", 30.0}, {"anchor_elevation_deg", 10.0},
                                                   {"anchor_distance", 2.5}, {"views_per_side", 2}}}});
  const CliResult r = run(dir, "sample-views -c " + q(dir / "cfg.json"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto cams = json::parse(r.out);
  ASSERT_EQ(cams.size(), 5u);
  for (const auto& c : cams) EXPECT_EQ(c, cams[0]);
}

TEST(Cli, SchedulePrintsEndpoints) {
  fixtures::TempDir dir("cli_sched");
  const CliResult r = run(dir, "schedule --videos 6");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = json::parse(r.out);
  EXPECT_EQ(doc["frames"], 8);
  EXPECT_EQ(doc["denoising_steps"], 40);
  const auto& rows = doc["schedule"];
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0]["noise"], 0.75);
  EXPECT_EQ(rows[5]["noise"], 0.2);
  EXPECT_EQ(rows[0]["latent_blend"], 0.6);
  EXPECT_EQ(rows[5]["latent_blend"], 0.0);
  EXPECT_EQ(rows[0]["K"], 50);
  EXPECT_EQ(rows[5]["K"], 150);
}

TEST(Cli, VersionFlag) {
  fixtures::TempDir dir("cli_version");
  const CliResult r = run(dir, "--version");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("0.1.0"), std::string::npos);
}

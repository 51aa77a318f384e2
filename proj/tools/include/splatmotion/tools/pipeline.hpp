#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "splatmotion/camera.hpp"
#include "splatmotion/deform.hpp"
#include "splatmotion/error.hpp"
#include "splatmotion/guidance.hpp"
#include "splatmotion/scene.hpp"
#include "splatmotion/tracklift.hpp"

namespace splatmotion::tools {

/// Library error tagged with the pipeline stage it surfaced from.
class StageError : public std::runtime_error {
 public:
  StageError(const std::string& stage, const Error& inner)
      : std::runtime_error(stage + ": " + inner.what()), stage_(stage), code_(inner.code()) {}
  const std::string& stage() const noexcept { return stage_; }
  Errc code() const noexcept { return code_; }

 private:
  std::string stage_;
  Errc code_;
};

struct ViewConfig {
  int id = 0;
  std::filesystem::path camera;
  std::filesystem::path tracks;
  std::vector<std::filesystem::path> depths;
  std::filesystem::path gt_depth;
};

struct ScheduleConfig {
  LinearSchedule noise = kNoiseSchedule;
  LinearSchedule latent_blend = kLatentBlendSchedule;
  int frames = kGuidanceFrames;
  int denoising_steps = kDenoisingSteps;
};

/// Parsed run configuration. Relative paths resolve against the directory of
/// the config file.
struct RunConfig {
  nlohmann::json raw;  // effective document after flag overrides
  std::filesystem::path base_dir;
  std::optional<std::filesystem::path> scene;
  std::optional<std::filesystem::path> selection;
  std::optional<BoundingBox3> bbox;
  std::vector<ViewConfig> views;
  std::filesystem::path output = "out";
  std::optional<int> videos_lifted;
  TransferConfig transfer;
  bool neighbors_explicit = false;
  TrackingCorrection tracking;
  ScheduleConfig schedules;
  std::size_t k_eval = 20;
  std::optional<ViewSampleConfig> view_sampling;
  std::uint64_t seed = 0;

  std::string hash() const;
};

/// Throws Errc::input / Errc::parse on schema violations.
RunConfig parse_run_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
nlohmann::json load_config_document(const std::filesystem::path& path);
RunConfig load_run_config(const std::filesystem::path& path, const nlohmann::json& overrides = nlohmann::json::object());

/// Recursive object merge; non-object values in `patch` replace.
void merge_into(nlohmann::json& target, const nlohmann::json& patch);

std::string fnv1a_hex(const std::string& bytes);

struct LiftResult {
  TemporalAlignment alignment;
  LiftCounts counts;
  std::vector<LiftCounts> per_view;
  std::filesystem::path bank_path;
  std::filesystem::path manifest_path;
};

LiftResult cmd_lift(const RunConfig& cfg);

struct DeformResult {
  DynamicScene dyn;
  std::size_t anchors = 0;
  std::filesystem::path dyn_path;
  std::filesystem::path manifest_path;
};

DeformResult cmd_deform(const RunConfig& cfg, const std::optional<std::filesystem::path>& bank = std::nullopt);

struct MetricsInput {
  std::filesystem::path dyn;
  std::optional<std::filesystem::path> frame_embeddings;
};

/// Per-file reports plus a ranked comparison when more than one file is given.
nlohmann::ordered_json cmd_metrics(const RunConfig& cfg, const std::vector<MetricsInput>& inputs,
                                   const std::optional<std::filesystem::path>& text_embedding = std::nullopt);

struct WarpRequest {
  std::vector<std::filesystem::path> frames;
  std::filesystem::path view_flow;
  std::vector<std::filesystem::path> time_flows;
  std::vector<std::filesystem::path> fills;  // empty: black fill
  std::size_t t0 = 0;
  std::filesystem::path output_dir;
  bool flow_images = false;
};

std::vector<std::filesystem::path> cmd_warp(const WarpRequest& request);

std::vector<CameraModel> cmd_sample_views(const RunConfig& cfg);

struct SynthRequest {
  std::uint64_t seed = 0;
  std::size_t points = 200;
  std::size_t static_points = 40;
  std::size_t frames = 8;
  std::size_t t0 = 0;
  int views = 2;
  bool visible_only = false;
  double focal = 800.0;
  int resolution = 640;
  std::filesystem::path output_dir;
};

/// Writes a complete fixture (scene, cameras, tracks, depths, flows, a config
/// for lift/deform and the ground truth); returns the config path.
std::filesystem::path cmd_synth(const SynthRequest& request);

nlohmann::ordered_json cmd_schedule(const RunConfig& cfg, int max_videos = 6);

/// 2 for invalid input and empty guidance, 1 otherwise.
int exit_code_for(const std::exception& e);

}  // namespace splatmotion::tools

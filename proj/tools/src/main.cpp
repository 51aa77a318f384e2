#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "splatmotion/camera.hpp"
#include "splatmotion/tools/pipeline.hpp"
#include "splatmotion/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace splatmotion;
using namespace splatmotion::tools;

namespace {

std::string slurp_text(const fs::path& path) {
  std::ifstream in(path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

RunConfig config_from(const std::optional<std::string>& path, const json& overrides) {
  if (path) return load_run_config(*path, overrides);
  return parse_run_config(overrides, fs::current_path());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lift 2D video dynamics onto static Gaussian splatting scenes"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> output;
  json overrides = json::object();

  // lift
  auto* lift = app.add_subcommand("lift", "Lift 2D tracks into a trajectory bank");
  lift->add_option("-c,--config", config_path, "Run configuration JSON")->required()->check(CLI::ExistingFile);
  lift->add_option("-o,--output", output, "Output directory");
  std::optional<double> threshold;
  std::optional<int> radius;
  lift->add_option("--threshold", threshold, "Depth-ratio threshold for tracking correction");
  lift->add_option("--radius", radius, "Search radius in pixels for tracking correction");

  // deform
  auto* deform = app.add_subcommand("deform", "Transfer anchor motion onto the selected Gaussians");
  deform->add_option("-c,--config", config_path, "Run configuration JSON")->required()->check(CLI::ExistingFile);
  deform->add_option("-o,--output", output, "Output directory");
  std::optional<std::string> bank, mode;
  std::optional<std::size_t> neighbors;
  std::optional<double> tau;
  std::optional<int> videos_lifted;
  deform->add_option("--bank", bank, "Trajectory bank (defaults to <output>/anchors.jsonl)");
  deform->add_option("--mode", mode, "linear or rigid")->check(CLI::IsMember({"linear", "rigid"}));
  deform->add_option("--neighbors", neighbors, "Anchor neighbours per Gaussian (default: schedule)");
  deform->add_option("--tau", tau, "Softmax temperature (default: 10 / median spacing)");
  deform->add_option("--videos-lifted", videos_lifted, "Guidance videos lifted so far, for the K schedule");

  // metrics
  auto* metrics = app.add_subcommand("metrics", "Score one or more dynamic scenes");
  metrics->add_option("-c,--config", config_path, "Run configuration JSON")->required()->check(CLI::ExistingFile);
  std::vector<std::string> dyn_files, embedding_files;
  std::optional<std::string> text, report_path;
  std::optional<std::size_t> k_eval;
  metrics->add_option("dyn", dyn_files, "Dynamic scene files")->required()->check(CLI::ExistingFile);
  metrics->add_option("--embeddings", embedding_files, "Frame embeddings, one blob per dynamic scene");
  metrics->add_option("--text", text, "Prompt embedding blob")->check(CLI::ExistingFile);
  metrics->add_option("--k-eval", k_eval, "Neighbours per Gaussian for the geometry metrics");
  metrics->add_option("-o,--output", report_path, "Write the report here instead of stdout");

  // warp-flow
  auto* warp = app.add_subcommand("warp-flow", "Warp a guidance video to a new viewpoint");
  WarpRequest warp_request;
  std::vector<std::string> frames, time_flows, fills;
  std::string view_flow, warp_out;
  warp->add_option("--frames", frames, "Video frames (PNG/PPM)")->required()->check(CLI::ExistingFile);
  warp->add_option("--view-flow", view_flow, "Cross-view flow at t0 (.flo)")->required()->check(CLI::ExistingFile);
  warp->add_option("--time-flows", time_flows, "Per-frame flow to t0 (.flo)")->required()->check(CLI::ExistingFile);
  warp->add_option("--fills", fills, "Per-frame fill images for unreached pixels")->check(CLI::ExistingFile);
  warp->add_option("--t0", warp_request.t0, "Index of the static frame");
  warp->add_option("-o,--output-dir", warp_out, "Output directory")->required();
  warp->add_flag("--flow-images", warp_request.flow_images, "Also write colour-coded flows");

  // sample-views
  auto* views = app.add_subcommand("sample-views", "Sample guidance viewpoints around the anchor view");
  views->add_option("-c,--config", config_path, "Run configuration JSON")->required()->check(CLI::ExistingFile);
  views->add_option("-o,--output", output, "Write the pose list here instead of stdout");
  std::optional<std::uint64_t> seed;
  views->add_option("--seed", seed, "Random seed");

  // synth
  auto* synth = app.add_subcommand("synth", "Write a synthetic fixture with known motion");
  SynthRequest synth_request;
  std::string synth_out;
  synth->add_option("-o,--output-dir", synth_out, "Fixture directory")->required();
  synth->add_option("--seed", synth_request.seed, "Random seed");
  synth->add_option("--points", synth_request.points, "Number of points");
  synth->add_option("--static", synth_request.static_points, "Number of static points");
  synth->add_option("--frames", synth_request.frames, "Frames per video");
  synth->add_option("--t0", synth_request.t0, "Index of the static frame");
  synth->add_option("--views", synth_request.views, "Number of viewpoints");
  synth->add_option("--focal", synth_request.focal, "Focal length in pixels");
  synth->add_option("--resolution", synth_request.resolution, "Square image size in pixels");
  synth->add_flag("--visible-only", synth_request.visible_only, "Keep only tracks visible in every frame");

  // schedule
  auto* schedule = app.add_subcommand("schedule", "Print the per-video noise, latent blend and K schedule");
  std::optional<std::string> schedule_config;
  int schedule_videos = 6;
  schedule->add_option("-c,--config", schedule_config, "Run configuration JSON")->check(CLI::ExistingFile);
  schedule->add_option("--videos", schedule_videos, "Number of guidance videos");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    if (output && command != "sample-views") overrides["output"] = *output;
    if (command == "lift") {
      if (threshold) overrides["tracking"]["threshold"] = *threshold;
      if (radius) overrides["tracking"]["radius"] = *radius;
      const RunConfig cfg = load_run_config(config_path, overrides);
      const LiftResult r = cmd_lift(cfg);
      std::cout << slurp_text(r.manifest_path);
    } else if (command == "deform") {
      if (mode) overrides["transfer"]["mode"] = *mode;
      if (neighbors) overrides["transfer"]["neighbors"] = *neighbors;
      if (tau) overrides["transfer"]["tau"] = *tau;
      if (videos_lifted) overrides["videos_lifted"] = *videos_lifted;
      const RunConfig cfg = load_run_config(config_path, overrides);
      const DeformResult r = cmd_deform(cfg, bank ? std::optional<fs::path>(*bank) : std::nullopt);
      std::cout << slurp_text(r.manifest_path);
    } else if (command == "metrics") {
      if (k_eval) overrides["metrics"]["k_eval"] = *k_eval;
      if (!embedding_files.empty() && embedding_files.size() != dyn_files.size())
        throw Error(Errc::input, "metrics needs one --embeddings blob per dynamic scene");
      const RunConfig cfg = load_run_config(config_path, overrides);
      std::vector<MetricsInput> inputs;
      for (std::size_t i = 0; i < dyn_files.size(); ++i) {
        MetricsInput in{dyn_files[i], std::nullopt};
        if (!embedding_files.empty()) in.frame_embeddings = embedding_files[i];
        inputs.push_back(in);
      }
      const auto report =
          cmd_metrics(cfg, inputs, text ? std::optional<fs::path>(*text) : std::nullopt).dump(2) + "\n";
      if (report_path) {
        std::ofstream(*report_path) << report;
      } else {
        std::cout << report;
      }
    } else if (command == "warp-flow") {
      warp_request.frames.assign(frames.begin(), frames.end());
      warp_request.time_flows.assign(time_flows.begin(), time_flows.end());
      warp_request.fills.assign(fills.begin(), fills.end());
      warp_request.view_flow = view_flow;
      warp_request.output_dir = warp_out;
      for (const auto& p : cmd_warp(warp_request)) std::cout << p.string() << "\n";
    } else if (command == "sample-views") {
      if (seed) overrides["seed"] = *seed;
      const RunConfig cfg = load_run_config(config_path, overrides);
      const auto cams = cmd_sample_views(cfg);
      if (output) {
        write_camera_list(*output, cams);
      } else {
        std::cout << camera_list_json(cams);
      }
    } else if (command == "synth") {
      synth_request.output_dir = synth_out;
      std::cout << cmd_synth(synth_request).string() << "\n";
    } else if (command == "schedule") {
      const RunConfig cfg = config_from(schedule_config, overrides);
      std::cout << cmd_schedule(cfg, schedule_videos).dump(2) << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "splatmotion " << command << ": " << e.what() << "\n";
    return exit_code_for(e);
  }
  return 0;
}

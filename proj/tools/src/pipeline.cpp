#include "splatmotion/tools/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "splatmotion/dynamic_scene.hpp"
#include "splatmotion/formats.hpp"
#include "splatmotion/metrics.hpp"
#include "splatmotion/synth.hpp"
#include "splatmotion/version.hpp"

namespace splatmotion::tools {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, path.string() + ": cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io, path.string() + ": cannot open for writing");
  out << text;
  if (!out) throw Error(Errc::io, path.string() + ": write failed");
}

template <typename F>
auto stage(const std::string& name, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw StageError(name, e);
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

Vec3 vec3_of(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw Error(Errc::parse, std::string("config: ") + what + " needs 3 numbers");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

void require_file(const fs::path& path, const std::string& what) {
  if (!fs::is_regular_file(path)) throw Error(Errc::io, what + " '" + path.string() + "' does not exist");
}

const std::set<std::string> kTopLevelKeys = {"scene",     "selection", "bbox",          "views",   "output",
                                             "videos_lifted", "transfer", "tracking", "schedules", "metrics",
                                             "view_sampling", "seed"};

const std::map<std::string, std::set<std::string>> kSectionKeys = {
    {"bbox", {"center", "half_extents", "rotation"}},
    {"transfer", {"mode", "neighbors", "tau", "estimate_rotation_scale"}},
    {"tracking", {"threshold", "radius"}},
    {"schedules", {"noise", "latent_blend", "frames", "denoising_steps"}},
    {"metrics", {"k_eval"}},
    {"view_sampling",
     {"anchor_azimuth_deg", "anchor_elevation_deg", "anchor_distance", "max_azimuth_deg", "max_elevation_deg",
      "max_distance_fraction", "views_per_side", "sigma_azimuth_deg", "sigma_elevation_deg", "sigma_distance",
      "center", "fx", "fy", "cx", "cy", "width", "height"}},
};

void check_keys(const json& section, const std::set<std::string>& allowed, const std::string& where) {
  if (!section.is_object()) throw Error(Errc::parse, "config: " + where + " must be an object");
  for (auto it = section.begin(); it != section.end(); ++it)
    if (!allowed.count(it.key())) throw Error(Errc::parse, "config: unknown key '" + where + "." + it.key() + "'");
}

ordered_json manifest_header(const std::string& command, const RunConfig& cfg) {
  ordered_json m;
  m["tool"] = "splatmotion";
  m["version"] = kVersion;
  m["command"] = command;
  m["config_hash"] = cfg.hash();
  return m;
}

ordered_json counts_json(const LiftCounts& c) {
  ordered_json j;
  j["input"] = c.input;
  j["corrected"] = c.corrected;
  j["discarded_tracking"] = c.discarded_tracking;
  j["discarded_depth"] = c.discarded_depth;
  j["discarded_gt"] = c.discarded_gt;
  j["outside_box"] = c.outside_box;
  j["kept"] = c.kept;
  return j;
}

SelectionMask selection_for(const RunConfig& cfg, const GaussianScene& scene) {
  if (cfg.selection) {
    auto mask = read_selection(*cfg.selection);
    if (mask.size() != scene.count()) throw Error(Errc::input, "selection length differs from the scene");
    return mask;
  }
  if (!cfg.bbox) throw Error(Errc::input, "config needs a selection file or a bbox");
  return select_by_bbox(scene, *cfg.bbox);
}

ordered_json report_json(const MetricReport& r) {
  ordered_json j;
  j["displacement"] = r.displacement;
  j["rigidity"] = r.rigidity;
  j["momentum"] = r.momentum;
  j["isometry"] = r.isometry;
  j["rotation_similarity"] = r.rotation_similarity;
  if (r.clip_text) j["clip_text"] = *r.clip_text;
  if (r.clip_temporal) j["clip_temporal"] = *r.clip_temporal;
  return j;
}

ordered_json similarity_json(const Similarity& s) {
  ordered_json j;
  j["scale"] = s.scale;
  auto r = ordered_json::array();
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) r.push_back(s.rotation(a, b));
  j["rotation"] = r;
  j["translation"] = {s.translation.x(), s.translation.y(), s.translation.z()};
  return j;
}

std::string numbered(const std::string& stem, int view, std::size_t frame, const std::string& ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%d_%03zu%s", stem.c_str(), view, frame, ext.c_str());
  return buf;
}

}  // namespace

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string RunConfig::hash() const { return "fnv1a64:" + fnv1a_hex(raw.dump()); }

void merge_into(json& target, const json& patch) {
  if (!patch.is_object() || !target.is_object()) {
    target = patch;
    return;
  }
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    if (it.value().is_object() && target.contains(it.key()) && target[it.key()].is_object())
      merge_into(target[it.key()], it.value());
    else
      target[it.key()] = it.value();
  }
}

RunConfig parse_run_config(const json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) throw Error(Errc::parse, "config: top level must be an object");
  for (auto it = doc.begin(); it != doc.end(); ++it)
    if (!kTopLevelKeys.count(it.key())) throw Error(Errc::parse, "config: unknown key '" + it.key() + "'");
  for (const auto& [section, allowed] : kSectionKeys)
    if (doc.contains(section)) check_keys(doc[section], allowed, section);
  if (doc.contains("schedules"))
    for (const char* key : {"noise", "latent_blend"})
      if (doc["schedules"].contains(key)) check_keys(doc["schedules"][key], {"start", "end"}, std::string("schedules.") + key);
  if (doc.contains("views")) {
    if (!doc["views"].is_array()) throw Error(Errc::parse, "config: views must be a list");
    for (const auto& v : doc["views"]) check_keys(v, {"id", "camera", "tracks", "depths", "gt_depth"}, "views[]");
  }

  RunConfig cfg;
  cfg.raw = doc;
  cfg.base_dir = base_dir;
  try {
    if (doc.contains("scene")) cfg.scene = resolve(base_dir, doc["scene"].get<std::string>());
    if (doc.contains("selection")) cfg.selection = resolve(base_dir, doc["selection"].get<std::string>());
    if (doc.contains("bbox")) {
      const auto& b = doc["bbox"];
      BoundingBox3 box;
      box.center = vec3_of(b.at("center"), "bbox.center");
      box.half_extents = vec3_of(b.at("half_extents"), "bbox.half_extents");
      if (b.contains("rotation")) {
        const auto q = b["rotation"].get<std::vector<double>>();
        if (q.size() != 4) throw Error(Errc::parse, "config: bbox.rotation needs 4 numbers (w, x, y, z)");
        box.rotation = Quat(q[0], q[1], q[2], q[3]).normalized();
      }
      box.validate();
      cfg.bbox = box;
    }
    if (doc.contains("views")) {
      int index = 0;
      for (const auto& v : doc["views"]) {
        ViewConfig view;
        view.id = v.value("id", index);
        view.camera = resolve(base_dir, v.at("camera").get<std::string>());
        view.tracks = resolve(base_dir, v.at("tracks").get<std::string>());
        for (const auto& d : v.at("depths")) view.depths.push_back(resolve(base_dir, d.get<std::string>()));
        view.gt_depth = resolve(base_dir, v.at("gt_depth").get<std::string>());
        cfg.views.push_back(std::move(view));
        ++index;
      }
    }
    cfg.output = resolve(base_dir, doc.value("output", std::string("out")));
    if (doc.contains("videos_lifted")) cfg.videos_lifted = doc["videos_lifted"].get<int>();
    if (doc.contains("transfer")) {
      const auto& t = doc["transfer"];
      if (t.contains("mode")) cfg.transfer.mode = parse_transfer_mode(t["mode"].get<std::string>());
      if (t.contains("neighbors") && !t["neighbors"].is_null()) {
        cfg.transfer.neighbors = t["neighbors"].get<std::size_t>();
        cfg.neighbors_explicit = true;
      }
      if (t.contains("tau") && !t["tau"].is_null()) cfg.transfer.tau = t["tau"].get<double>();
      cfg.transfer.estimate_rotation_scale = t.value("estimate_rotation_scale", false);
    }
    if (doc.contains("tracking")) {
      cfg.tracking.threshold = doc["tracking"].value("threshold", cfg.tracking.threshold);
      cfg.tracking.radius = doc["tracking"].value("radius", cfg.tracking.radius);
    }
    if (doc.contains("schedules")) {
      const auto& s = doc["schedules"];
      auto read = [&](const char* key, LinearSchedule& target) {
        if (!s.contains(key)) return;
        target.start = s[key].value("start", target.start);
        target.end = s[key].value("end", target.end);
      };
      read("noise", cfg.schedules.noise);
      read("latent_blend", cfg.schedules.latent_blend);
      cfg.schedules.frames = s.value("frames", cfg.schedules.frames);
      cfg.schedules.denoising_steps = s.value("denoising_steps", cfg.schedules.denoising_steps);
    }
    if (doc.contains("metrics")) cfg.k_eval = doc["metrics"].value("k_eval", cfg.k_eval);
    cfg.seed = doc.value("seed", std::uint64_t{0});
    if (doc.contains("view_sampling")) {
      const auto& v = doc["view_sampling"];
      ViewSampleConfig vs;
      vs.anchor_azimuth = v.value("anchor_azimuth_deg", 0.0) * kDeg;
      vs.anchor_elevation = v.value("anchor_elevation_deg", 0.0) * kDeg;
      vs.anchor_distance = v.value("anchor_distance", vs.anchor_distance);
      vs.max_azimuth = v.value("max_azimuth_deg", 0.0) * kDeg;
      vs.max_elevation = v.value("max_elevation_deg", 0.0) * kDeg;
      vs.max_distance_fraction = v.value("max_distance_fraction", 0.0);
      vs.views_per_side = v.value("views_per_side", vs.views_per_side);
      vs.sigma_azimuth = v.value("sigma_azimuth_deg", 0.0) * kDeg;
      vs.sigma_elevation = v.value("sigma_elevation_deg", 0.0) * kDeg;
      vs.sigma_distance = v.value("sigma_distance", 0.0);
      if (v.contains("center")) vs.center = vec3_of(v["center"], "view_sampling.center");
      vs.fx = v.value("fx", vs.fx);
      vs.fy = v.value("fy", vs.fy);
      vs.cx = v.value("cx", vs.cx);
      vs.cy = v.value("cy", vs.cy);
      vs.width = v.value("width", vs.width);
      vs.height = v.value("height", vs.height);
      vs.seed = cfg.seed;
      vs.validate();
      cfg.view_sampling = vs;
    }
  } catch (const json::exception& e) {
    throw Error(Errc::parse, std::string("config: ") + e.what());
  }

  if (cfg.schedules.frames < 2) throw Error(Errc::input, "config: schedules.frames must be at least 2");
  if (cfg.schedules.denoising_steps < 1) throw Error(Errc::input, "config: schedules.denoising_steps must be positive");
  if (!(cfg.tracking.threshold > 1.0) || cfg.tracking.radius < 0)
    throw Error(Errc::input, "config: tracking threshold must exceed 1 and radius be non-negative");
  if (cfg.k_eval == 0) throw Error(Errc::input, "config: metrics.k_eval must be positive");
  if (cfg.videos_lifted && *cfg.videos_lifted < 1) throw Error(Errc::input, "config: videos_lifted must be positive");
  return cfg;
}

json load_config_document(const fs::path& path) {
  const std::string text = slurp(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(Errc::parse, path.string() + ": " + e.what());
  }
}

RunConfig load_run_config(const fs::path& path, const json& overrides) {
  json doc = load_config_document(path);
  merge_into(doc, overrides);
  return parse_run_config(doc, path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

LiftResult cmd_lift(const RunConfig& cfg) {
  if (!cfg.bbox) throw StageError("config", Error(Errc::input, "lift needs a bbox"));
  if (cfg.views.empty()) throw StageError("config", Error(Errc::input, "lift needs at least one view"));
  const auto frames = static_cast<std::size_t>(cfg.schedules.frames);

  std::vector<ViewObservations> views;
  stage("validate", [&] {
    for (const auto& v : cfg.views) {
      require_file(v.camera, "camera");
      require_file(v.tracks, "tracks");
      require_file(v.gt_depth, "GT depth");
      for (const auto& d : v.depths) require_file(d, "depth map");
      if (v.depths.size() != frames)
        throw Error(Errc::input, "view " + std::to_string(v.id) + " lists " + std::to_string(v.depths.size()) +
                                     " depth maps, expected " + std::to_string(frames));
    }
  });

  std::size_t total_tracks = 0;
  stage("load", [&] {
    for (const auto& v : cfg.views) {
      ViewObservations obs;
      obs.view_id = v.id;
      obs.camera = read_camera(v.camera);
      obs.tracks = read_tracks(v.tracks);
      for (const auto& t : obs.tracks)
        if (t.frame_count() != frames)
          throw Error(Errc::input, v.tracks.string() + ": track " + std::to_string(t.id) + " has " +
                                       std::to_string(t.frame_count()) + " frames, expected " +
                                       std::to_string(frames));
      for (std::size_t f = 0; f < v.depths.size(); ++f) {
        obs.depths.push_back(read_pfm(v.depths[f]));
        obs.depths.back().frame_index = static_cast<int>(f);
        if (obs.depths.back().width != obs.camera.width || obs.depths.back().height != obs.camera.height)
          throw Error(Errc::input, v.depths[f].string() + ": depth map size differs from the camera");
      }
      obs.gt_depth = read_pfm(v.gt_depth);
      total_tracks += obs.tracks.size();
      views.push_back(std::move(obs));
    }
  });
  if (total_tracks == 0) throw StageError("load", Error(Errc::empty_guidance, "no 2D tracks in any view"));

  LiftResult result;
  std::vector<TrajectoryBank> banks;
  stage("lift", [&] {
    for (const auto& obs : views) {
      LiftCounts counts;
      TrajectoryBank bank = lift_view(obs, *cfg.bbox, cfg.tracking, &counts);
      if (!bank.tracks.empty()) banks.push_back(std::move(bank));
      result.per_view.push_back(counts);
      result.counts += counts;
    }
  });
  if (banks.empty()) {
    result.alignment.window_length = frames;
  } else {
    result.alignment = stage("align_temporal", [&] { return align_temporal(banks); });
  }

  result.bank_path = cfg.output / "anchors.jsonl";
  result.manifest_path = cfg.output / "lift_manifest.json";
  stage("write", [&] {
    fs::create_directories(cfg.output);
    write_anchor_bank(result.bank_path, result.alignment.anchors);
    ordered_json m = manifest_header("lift", cfg);
    m["counts"] = counts_json(result.counts);
    auto per_view = ordered_json::array();
    for (std::size_t i = 0; i < views.size(); ++i) {
      ordered_json v = counts_json(result.per_view[i]);
      v["view"] = views[i].view_id;
      per_view.push_back(v);
    }
    m["views"] = per_view;
    m["frames"] = frames;
    m["window_start"] = result.alignment.window_start;
    m["window_length"] = result.alignment.window_length;
    m["support"] = result.alignment.support;
    m["anchors"] = result.alignment.anchors.size();
    m["tracking"] = {{"threshold", cfg.tracking.threshold}, {"radius", cfg.tracking.radius}};
    spit(result.manifest_path, m.dump(2) + "\n");
  });
  return result;
}

DeformResult cmd_deform(const RunConfig& cfg, const std::optional<fs::path>& bank) {
  if (!cfg.scene) throw StageError("config", Error(Errc::input, "deform needs a scene"));
  const fs::path bank_path = bank ? *bank : cfg.output / "anchors.jsonl";
  stage("validate", [&] {
    require_file(*cfg.scene, "scene");
    require_file(bank_path, "trajectory bank");
    if (cfg.selection) require_file(*cfg.selection, "selection");
  });

  GaussianScene scene;
  SelectionMask mask;
  std::vector<AnchorTrajectory> anchors;
  stage("load", [&] {
    scene = load_scene(*cfg.scene);
    mask = selection_for(cfg, scene);
    anchors = read_anchor_bank(bank_path);
  });
  if (anchors.empty()) throw StageError("load", Error(Errc::empty_guidance, "trajectory bank is empty"));
  if (mask.selected_count() == 0) throw StageError("select", Error(Errc::input, "selection is empty"));

  TransferConfig transfer = cfg.transfer;
  if (!cfg.neighbors_explicit) {
    std::set<int> sources;
    for (const auto& a : anchors) sources.insert(a.source_view);
    const int videos = cfg.videos_lifted.value_or(static_cast<int>(sources.size()));
    transfer.neighbors = schedule_K(videos, anchors.size());
  }

  DeformResult result;
  result.anchors = anchors.size();
  result.dyn = stage("transfer", [&] { return build_dynamic_scene(scene, mask, anchors, transfer); });
  result.dyn_path = cfg.output / "scene.dyn";
  result.manifest_path = cfg.output / "deform_manifest.json";
  stage("write", [&] {
    fs::create_directories(cfg.output);
    write_dynamic_scene(result.dyn_path, result.dyn);
    ordered_json m = manifest_header("deform", cfg);
    m["mode"] = std::string(to_string(result.dyn.mode));
    m["K"] = result.dyn.neighbors;
    m["tau"] = result.dyn.tau;
    m["anchors"] = anchors.size();
    m["selected"] = result.dyn.selected_count();
    m["timesteps"] = result.dyn.frame_count();
    m["t0_frame"] = result.dyn.t0_frame;
    spit(result.manifest_path, m.dump(2) + "\n");
  });
  return result;
}

ordered_json cmd_metrics(const RunConfig& cfg, const std::vector<MetricsInput>& inputs,
                         const std::optional<fs::path>& text_embedding) {
  if (inputs.empty()) throw StageError("config", Error(Errc::input, "metrics needs at least one dynamic scene"));
  if (!cfg.scene) throw StageError("config", Error(Errc::input, "metrics needs a scene"));
  const GaussianScene scene = stage("load", [&] { return load_scene(*cfg.scene); });
  std::optional<ShapedArray> text;
  if (text_embedding) text = stage("load", [&] { return read_float_blob(*text_embedding); });

  std::vector<MetricReport> reports;
  ordered_json out;
  out["tool"] = "splatmotion";
  out["version"] = kVersion;
  out["k_eval"] = cfg.k_eval;
  out["neighbor_weighting"] = "unweighted";
  auto files = ordered_json::array();
  for (const auto& input : inputs) {
    const DynamicScene dyn = stage("load", [&] { return read_dynamic_scene(input.dyn); });
    if (dyn.num_gaussians != scene.count())
      throw StageError("metrics", Error(Errc::input, input.dyn.string() + " was built for " +
                                                         std::to_string(dyn.num_gaussians) + " Gaussians, scene has " +
                                                         std::to_string(scene.count())));
    std::optional<EmbeddingSet> embeddings;
    if (input.frame_embeddings)
      embeddings = stage("load", [&] { return EmbeddingSet::from_arrays(read_float_blob(*input.frame_embeddings), text); });
    const MetricReport report = stage("metrics", [&] {
      return evaluate(dyn, scene, cfg.k_eval, embeddings ? &*embeddings : nullptr);
    });
    reports.push_back(report);
    ordered_json entry;
    entry["file"] = input.dyn.string();
    entry["metrics"] = report_json(report);
    files.push_back(entry);
  }
  out["reports"] = files;

  if (reports.size() > 1) {
    const RankedComparison cmp = rank_reports(reports);
    auto ranks = ordered_json::array();
    for (std::size_t i = 0; i < cmp.entries.size(); ++i) {
      const auto& e = cmp.entries[i];
      ordered_json r;
      r["file"] = inputs[i].dyn.string();
      r["displacement"] = e.displacement;
      r["rigidity"] = e.rigidity;
      r["momentum"] = e.momentum;
      r["isometry"] = e.isometry;
      r["rotation_similarity"] = e.rotation_similarity;
      if (e.clip_text) r["clip_text"] = *e.clip_text;
      if (e.clip_temporal) r["clip_temporal"] = *e.clip_temporal;
      r["motion_amount"] = e.motion_amount;
      r["geometry"] = e.geometry;
      if (e.appearance) r["appearance"] = *e.appearance;
      r["overall_score"] = e.overall_score;
      r["overall_rank"] = e.overall_rank;
      ranks.push_back(r);
    }
    out["ranks"] = ranks;
  }
  return out;
}

std::vector<fs::path> cmd_warp(const WarpRequest& request) {
  if (request.frames.empty()) throw StageError("config", Error(Errc::input, "warp needs at least one frame"));
  if (request.time_flows.size() != request.frames.size())
    throw StageError("config", Error(Errc::input, "warp needs one time flow per frame"));
  if (!request.fills.empty() && request.fills.size() != request.frames.size())
    throw StageError("config", Error(Errc::input, "warp needs one fill image per frame or none"));

  std::vector<Image> frames, fills;
  std::vector<FlowField> time_flows;
  FlowField view_flow;
  stage("load", [&] {
    for (const auto& f : request.frames) frames.push_back(read_image(f));
    for (const auto& f : request.time_flows) time_flows.push_back(read_flo(f));
    for (const auto& f : request.fills) fills.push_back(read_image(f));
    view_flow = read_flo(request.view_flow);
    if (fills.empty())
      for (const auto& f : frames) fills.emplace_back(f.width, f.height, f.channels, 0.0);
  });
  const auto warped = stage("warp", [&] { return warp_video(frames, view_flow, time_flows, fills, request.t0); });

  std::vector<fs::path> written;
  stage("write", [&] {
    fs::create_directories(request.output_dir);
    for (std::size_t i = 0; i < warped.size(); ++i) {
      const fs::path out = request.output_dir / request.frames[i].filename();
      write_image(out, warped[i]);
      written.push_back(out);
      if (request.flow_images) {
        const FlowField flow = i == request.t0 ? view_flow : compose_flow(view_flow, time_flows[i]);
        fs::path vis = request.output_dir / request.frames[i].filename();
        vis.replace_extension(".flow.png");
        write_image(vis, flow_to_color(flow));
      }
    }
  });
  return written;
}

std::vector<CameraModel> cmd_sample_views(const RunConfig& cfg) {
  if (!cfg.view_sampling) throw StageError("config", Error(Errc::input, "config has no view_sampling section"));
  return stage("sample", [&] { return sample_viewpoints(*cfg.view_sampling); });
}

fs::path cmd_synth(const SynthRequest& request) {
  if (request.views < 1) throw StageError("config", Error(Errc::input, "synth needs at least one view"));
  if (request.resolution < 8 || !(request.focal > 0.0))
    throw StageError("config", Error(Errc::input, "synth needs a positive focal length and resolution >= 8"));
  SynthOptions options;
  options.frames = request.frames;
  options.t0_frame = request.t0;
  const SynthScene synth = stage("make_scene", [&] {
    return make_scene(request.seed, request.points, request.static_points, options);
  });

  ViewSampleConfig vs;
  vs.fx = vs.fy = request.focal;
  vs.cx = vs.cy = request.resolution / 2.0;
  vs.width = vs.height = request.resolution;
  std::vector<CameraModel> cams;
  for (int v = 0; v < request.views; ++v) {
    const double az = (v - (request.views - 1) / 2.0) * 30.0 * kDeg;
    cams.push_back(look_at_camera(vs, {az, 25.0 * kDeg, 3.0}));
  }

  const fs::path& dir = request.output_dir;
  ordered_json config;
  ordered_json truth;
  stage("render", [&] {
    fs::create_directories(dir / "depth");
    fs::create_directories(dir / "flow");
    save_scene(synth.scene, dir / "scene.ply");
    write_selection(dir / "selection.txt", synth.selection);
    write_camera_list(dir / "cameras.json", cams);

    auto views = ordered_json::array();
    auto in_box = ordered_json::array();
    std::size_t in_box_total = 0;
    for (int v = 0; v < request.views; ++v) {
      SynthObservations obs = render_observations(synth.scene, synth.script, cams[v]);
      if (request.visible_only) obs.tracks = fully_visible_tracks(obs.tracks);
      const std::string cam_name = "camera_" + std::to_string(v) + ".json";
      const std::string track_name = "tracks_" + std::to_string(v) + ".jsonl";
      const std::string gt_name = "depth/gt_" + std::to_string(v) + ".pfm";
      write_camera(dir / cam_name, cams[v]);
      write_tracks(dir / track_name, obs.tracks);
      write_pfm(dir / gt_name, obs.gt_depth);
      auto depths = ordered_json::array();
      for (std::size_t f = 0; f < obs.depths.size(); ++f) {
        const std::string name = "depth/" + numbered("depth", v, f, ".pfm");
        write_pfm(dir / name, obs.depths[f]);
        depths.push_back(name);
        write_flo(dir / "flow" / numbered("time", v, f, ".flo"), obs.time_flows[f]);
      }
      if (v > 0)
        write_flo(dir / "flow" / ("view_0_to_" + std::to_string(v) + ".flo"),
                  render_cross_view_flow(synth.scene, synth.script, synth.script.t0_frame, cams[0], cams[v]));
      std::size_t count = 0;
      for (const auto& t : obs.tracks)
        if (synth.box.contains(synth.scene.positions[static_cast<std::size_t>(t.id)])) ++count;
      in_box.push_back(count);
      in_box_total += count;
      ordered_json view;
      view["id"] = v;
      view["camera"] = cam_name;
      view["tracks"] = track_name;
      view["depths"] = depths;
      view["gt_depth"] = gt_name;
      views.push_back(view);
    }

    const Quat box_q(synth.box.rotation);
    config["scene"] = "scene.ply";
    config["selection"] = "selection.txt";
    config["bbox"] = {{"center", {synth.box.center.x(), synth.box.center.y(), synth.box.center.z()}},
                      {"half_extents",
                       {synth.box.half_extents.x(), synth.box.half_extents.y(), synth.box.half_extents.z()}},
                      {"rotation", {box_q.w(), box_q.x(), box_q.y(), box_q.z()}}};
    config["views"] = views;
    config["output"] = "out";
    config["transfer"] = {{"mode", "rigid"}};
    config["schedules"] = {{"frames", request.frames}};
    config["seed"] = request.seed;
    spit(dir / "config.json", config.dump(2) + "\n");

    truth["seed"] = request.seed;
    truth["t0_frame"] = synth.script.t0_frame;
    truth["moving_points"] = synth.selection.selected_count();
    truth["in_box_tracks"] = in_box_total;
    truth["in_box_tracks_per_view"] = in_box;
    auto transforms = ordered_json::array();
    for (const auto& s : synth.script.transforms) transforms.push_back(similarity_json(s));
    truth["transforms"] = transforms;
    spit(dir / "ground_truth.json", truth.dump(2) + "\n");
  });
  return dir / "config.json";
}

ordered_json cmd_schedule(const RunConfig& cfg, int max_videos) {
  if (max_videos < 1) throw StageError("config", Error(Errc::input, "schedule needs at least one video"));
  LinearSchedule noise = cfg.schedules.noise;
  LinearSchedule blend = cfg.schedules.latent_blend;
  noise.total_steps = blend.total_steps = max_videos;
  ordered_json out;
  out["frames"] = cfg.schedules.frames;
  out["denoising_steps"] = cfg.schedules.denoising_steps;
  auto rows = ordered_json::array();
  for (int v = 0; v < max_videos; ++v) {
    ordered_json row;
    row["video"] = v;
    row["noise"] = noise.value(v);
    row["latent_blend"] = blend.value(v);
    row["K"] = schedule_K(v + 1);
    rows.push_back(row);
  }
  out["schedule"] = rows;
  return out;
}

int exit_code_for(const std::exception& e) {
  std::optional<Errc> code;
  if (const auto* s = dynamic_cast<const StageError*>(&e)) code = s->code();
  if (const auto* s = dynamic_cast<const Error*>(&e)) code = s->code();
  if (!code) return 1;
  return *code == Errc::fixture ? 1 : 2;
}

}  // namespace splatmotion::tools

#include "splatmotion/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Geometry>

#include "splatmotion/error.hpp"

namespace splatmotion {

Vec3 MotionScript::position(const GaussianScene& scene, std::size_t point, std::size_t frame) const {
  const Vec3& x = scene.positions[point];
  return moving[point] ? transforms[frame].apply(x) : x;
}

Quat MotionScript::rotation(const GaussianScene& scene, std::size_t point, std::size_t frame) const {
  const Quat& q = scene.rotations[point];
  if (!moving[point]) return q;
  return (Quat(transforms[frame].rotation) * q).normalized();
}

std::vector<Vec3> MotionScript::positions(const GaussianScene& scene, std::size_t frame) const {
  std::vector<Vec3> out(scene.count());
  for (std::size_t i = 0; i < scene.count(); ++i) out[i] = position(scene, i, frame);
  return out;
}

Similarity MotionScript::relative(std::size_t from, std::size_t frame) const {
  const Similarity& a = transforms[from];
  const Similarity& b = transforms[frame];
  Similarity out;
  out.scale = b.scale / a.scale;
  out.rotation = b.rotation * a.rotation.transpose();
  out.translation = b.translation - out.scale * (out.rotation * a.translation);
  return out;
}

SynthScene make_scene(std::uint64_t seed, std::size_t n_points, std::size_t n_static, const SynthOptions& options) {
  if (n_points < 4) throw Error(Errc::input, "synthetic scene needs at least 4 points");
  if (n_static > n_points) throw Error(Errc::input, "more static points than points");
  if (options.frames == 0 || options.t0_frame >= options.frames)
    throw Error(Errc::input, "synthetic t0 frame outside the frame range");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  const Vec3 moving_lo(-0.5, -0.5, -0.5);
  const Vec3 moving_hi(-0.05, 0.5, 0.5);
  const Vec3 static_lo(0.05, -0.5, -0.5);
  const Vec3 static_hi(0.5, 0.5, 0.5);

  SynthScene out;
  GaussianScene& scene = out.scene;
  scene.resize(n_points);
  out.script.moving.assign(n_points, false);
  const std::size_t n_moving = n_points - n_static;
  for (std::size_t i = 0; i < n_points; ++i) {
    const bool moving = i < n_moving;
    const Vec3& lo = moving ? moving_lo : static_lo;
    const Vec3& hi = moving ? moving_hi : static_hi;
    for (int a = 0; a < 3; ++a) scene.positions[i][a] = lo[a] + (hi[a] - lo[a]) * unit(rng);
    scene.scales[i] = Vec3::Constant(0.01 + 0.01 * unit(rng));
    scene.rotations[i] = Quat(normal(rng), normal(rng), normal(rng), normal(rng)).normalized();
    scene.opacities[i] = 0.5 + 0.5 * unit(rng);
    scene.colors[i] = Vec3(unit(rng), unit(rng), unit(rng));
    out.script.moving[i] = moving;
  }
  out.selection.flags = out.script.moving;
  out.box.center = 0.5 * (moving_lo + moving_hi);
  out.box.half_extents = 0.5 * (moving_hi - moving_lo) + Vec3::Constant(0.01);

  // Per-step increments about the block centre, composed outward from t0.
  const Vec3 pivot = out.box.center;
  const Vec3 axis = Vec3(normal(rng), normal(rng), normal(rng)).normalized();
  const Vec3 drift = Vec3(normal(rng), normal(rng), normal(rng)).normalized();
  auto step = [&]() {
    Similarity inc;
    const double angle = options.max_step_rotation * (0.3 + 0.7 * unit(rng));
    inc.rotation = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
    inc.scale = options.max_step_scale > 0.0 ? std::exp(options.max_step_scale * (2.0 * unit(rng) - 1.0)) : 1.0;
    const Vec3 shift = options.max_step_translation * (0.3 + 0.7 * unit(rng)) * drift;
    // x -> s R (x - c) + c + shift
    inc.translation = pivot + shift - inc.scale * (inc.rotation * pivot);
    return inc;
  };
  auto compose = [](const Similarity& inc, const Similarity& prev) {
    Similarity out;
    out.scale = inc.scale * prev.scale;
    out.rotation = inc.rotation * prev.rotation;
    out.translation = inc.scale * (inc.rotation * prev.translation) + inc.translation;
    return out;
  };
  auto inverse = [](const Similarity& s) {
    Similarity out;
    out.scale = 1.0 / s.scale;
    out.rotation = s.rotation.transpose();
    out.translation = -out.scale * (out.rotation * s.translation);
    return out;
  };

  auto& transforms = out.script.transforms;
  transforms.assign(options.frames, Similarity{});
  out.script.t0_frame = options.t0_frame;
  for (std::size_t f = options.t0_frame + 1; f < options.frames; ++f) transforms[f] = compose(step(), transforms[f - 1]);
  for (std::size_t f = options.t0_frame; f-- > 0;) transforms[f] = compose(inverse(step()), transforms[f + 1]);
  return out;
}

namespace {

constexpr double kCovered = std::numeric_limits<double>::infinity();

struct Footprint {
  int x0 = 0;
  int y0 = 0;
  double fx = 0.0;
  double fy = 0.0;

  template <typename Fn>
  void for_each(const DepthMap& map, bool weighted_only, Fn fn) const {
    for (int dy = 0; dy < 2; ++dy)
      for (int dx = 0; dx < 2; ++dx) {
        const double w = (dx ? fx : 1.0 - fx) * (dy ? fy : 1.0 - fy);
        if (weighted_only && w == 0.0) continue;
        const int x = x0 + dx;
        const int y = y0 + dy;
        if (x < 0 || y < 0 || x >= map.width || y >= map.height) continue;
        fn(x, y);
      }
  }
};

Footprint footprint(double u, double v) {
  Footprint f;
  f.x0 = static_cast<int>(std::floor(u));
  f.y0 = static_cast<int>(std::floor(v));
  f.fx = u - f.x0;
  f.fy = v - f.y0;
  return f;
}

struct FrameRender {
  std::vector<Projection> proj;
  std::vector<bool> on_image;
  DepthMap depth;
  std::vector<long> owner;  // nearest point per pixel, -1 for background
};

FrameRender render_frame(const GaussianScene& scene, const MotionScript& script, std::size_t frame,
                         const CameraModel& cam, double background) {
  FrameRender r;
  r.depth = DepthMap(cam.width, cam.height, kCovered, static_cast<int>(frame));
  r.owner.assign(r.depth.values.size(), -1);
  r.proj.resize(scene.count());
  r.on_image.assign(scene.count(), false);
  for (std::size_t i = 0; i < scene.count(); ++i) {
    const Vec3 x = script.position(scene, i, frame);
    if ((cam.R * x + cam.T).z() <= 0.0)
      throw Error(Errc::fixture, "point " + std::to_string(i) + " is behind the camera at frame " + std::to_string(frame));
    r.proj[i] = project(cam, x);
    if (r.proj[i].depth >= background)
      throw Error(Errc::fixture, "point " + std::to_string(i) + " lies behind the background plane");
    r.on_image[i] = r.depth.in_bounds(r.proj[i].u, r.proj[i].v);
    if (!r.on_image[i]) continue;
    footprint(r.proj[i].u, r.proj[i].v).for_each(r.depth, false, [&](int x, int y) {
      const std::size_t p = static_cast<std::size_t>(y) * cam.width + x;
      if (r.proj[i].depth < r.depth.values[p]) {
        r.depth.values[p] = r.proj[i].depth;
        r.owner[p] = static_cast<long>(i);
      }
    });
  }
  for (auto& d : r.depth.values)
    if (d == kCovered) d = background;
  return r;
}

bool visible(const FrameRender& r, std::size_t i) {
  if (!r.on_image[i]) return false;
  bool ok = true;
  footprint(r.proj[i].u, r.proj[i].v).for_each(r.depth, true, [&](int x, int y) {
    if (r.owner[static_cast<std::size_t>(y) * r.depth.width + x] != static_cast<long>(i)) ok = false;
  });
  return ok;
}

}  // namespace

SynthObservations render_observations(const GaussianScene& scene, const MotionScript& script, const CameraModel& cam,
                                      const RenderOptions& options) {
  cam.validate();
  if (script.moving.size() != scene.count()) throw Error(Errc::input, "motion script does not match the scene");
  if (script.t0_frame >= script.frame_count()) throw Error(Errc::input, "motion script t0 outside its frames");
  if (!(options.background_depth > 0.0)) throw Error(Errc::input, "background depth must be positive");

  const std::size_t frames = script.frame_count();
  std::vector<FrameRender> renders;
  renders.reserve(frames);
  for (std::size_t f = 0; f < frames; ++f)
    renders.push_back(render_frame(scene, script, f, cam, options.background_depth));

  SynthObservations out;
  const FrameRender& ref = renders[script.t0_frame];
  for (std::size_t i = 0; i < scene.count(); ++i) {
    if (!visible(ref, i)) continue;
    Track2D track;
    track.id = static_cast<int>(i);
    track.t0_index = script.t0_frame;
    for (std::size_t f = 0; f < frames; ++f) {
      track.uv.emplace_back(renders[f].proj[i].u, renders[f].proj[i].v);
      const bool vis = visible(renders[f], i);
      track.visible.push_back(vis);
      if (!vis) ++out.occluded_samples;
    }
    out.tracks.push_back(std::move(track));
  }

  for (std::size_t f = 0; f < frames; ++f) {
    FlowField flow(cam.width, cam.height);
    const FrameRender& r = renders[f];
    for (std::size_t p = 0; p < r.owner.size(); ++p) {
      if (r.owner[p] < 0) continue;
      const auto i = static_cast<std::size_t>(r.owner[p]);
      flow.flow[p] = Vec2(ref.proj[i].u - r.proj[i].u, ref.proj[i].v - r.proj[i].v);
    }
    out.time_flows.push_back(std::move(flow));
    out.depths.push_back(renders[f].depth);
  }
  out.gt_depth = ref.depth;
  return out;
}

std::vector<Track2D> fully_visible_tracks(std::span<const Track2D> tracks) {
  std::vector<Track2D> out;
  for (const auto& t : tracks)
    if (std::all_of(t.visible.begin(), t.visible.end(), [](bool v) { return v; })) out.push_back(t);
  return out;
}

FlowField render_cross_view_flow(const GaussianScene& scene, const MotionScript& script, std::size_t frame,
                                 const CameraModel& from, const CameraModel& to) {
  from.validate();
  to.validate();
  if (frame >= script.frame_count()) throw Error(Errc::input, "frame outside the motion script");
  constexpr double kFar = 1e300;
  const FrameRender r = render_frame(scene, script, frame, from, kFar);
  FlowField flow(from.width, from.height);
  for (std::size_t p = 0; p < r.owner.size(); ++p) {
    if (r.owner[p] < 0) continue;
    const auto i = static_cast<std::size_t>(r.owner[p]);
    const Projection target = project(to, script.position(scene, i, frame));
    flow.flow[p] = Vec2(target.u - r.proj[i].u, target.v - r.proj[i].v);
  }
  return flow;
}

std::vector<AnchorTrajectory> ground_truth_anchors(const GaussianScene& scene, const MotionScript& script,
                                                   std::span<const Track2D> tracks, int source_view) {
  std::vector<AnchorTrajectory> out;
  out.reserve(tracks.size());
  for (const auto& track : tracks) {
    const auto point = static_cast<std::size_t>(track.id);
    if (point >= scene.count()) throw Error(Errc::input, "track id is not a scene point");
    AnchorTrajectory a;
    a.id = track.id;
    a.source_view = source_view;
    a.t0_global = script.t0_frame;
    for (std::size_t f = 0; f < script.frame_count(); ++f) a.positions.push_back(script.position(scene, point, f));
    a.observed.assign(script.frame_count(), true);
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace splatmotion

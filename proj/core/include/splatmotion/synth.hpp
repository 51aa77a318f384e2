#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "splatmotion/camera.hpp"
#include "splatmotion/raster.hpp"
#include "splatmotion/scene.hpp"
#include "splatmotion/tracklift.hpp"
#include "splatmotion/umeyama.hpp"

namespace splatmotion {

/// Cumulative world-space similarity per frame relative to the t0 frame,
/// applied to the moving points only.
struct MotionScript {
  std::size_t t0_frame = 0;
  std::vector<Similarity> transforms;
  std::vector<bool> moving;

  std::size_t frame_count() const { return transforms.size(); }
  Vec3 position(const GaussianScene& scene, std::size_t point, std::size_t frame) const;
  Quat rotation(const GaussianScene& scene, std::size_t point, std::size_t frame) const;
  std::vector<Vec3> positions(const GaussianScene& scene, std::size_t frame) const;
  /// Update of frame `frame` relative to frame `from`.
  Similarity relative(std::size_t from, std::size_t frame) const;
};

struct SynthOptions {
  std::size_t frames = 8;
  std::size_t t0_frame = 0;
  double max_step_rotation = 10.0 * 3.14159265358979323846 / 180.0;  // radians
  double max_step_translation = 0.05;                               // meters
  double max_step_scale = 0.0;  // |log s| per step; 0 keeps the script rigid
};

struct SynthScene {
  GaussianScene scene;
  SelectionMask selection;
  BoundingBox3 box;  // contains exactly the moving points at t0
  MotionScript script;
};

/// Moving points fill the -x half of the unit box centred at the origin, the
/// static ones the +x half. The script rotates about the moving block's
/// centre along a fixed random axis with random per-step angle and drift.
SynthScene make_scene(std::uint64_t seed, std::size_t n_points, std::size_t n_static,
                      const SynthOptions& options = {});

struct RenderOptions {
  double background_depth = 10.0;
};

struct SynthObservations {
  std::vector<Track2D> tracks;    // one per point visible at t0, id = point index
  std::vector<DepthMap> depths;   // per frame
  DepthMap gt_depth;              // static scene, i.e. the t0 depth map
  std::vector<FlowField> time_flows;  // frame t -> t0
  std::size_t occluded_samples = 0;   // not-visible (track, frame) pairs
};

/// Points are drawn as 2x2 footprints (every pixel the bilinear sample at
/// the projected centre touches) over a fronto-parallel background plane.
SynthObservations render_observations(const GaussianScene& scene, const MotionScript& script,
                                      const CameraModel& cam, const RenderOptions& options = {});

/// Tracks visible in every frame; their depths never need filling.
std::vector<Track2D> fully_visible_tracks(std::span<const Track2D> tracks);

/// Flow from view `from` to view `to` at frame `frame`; background pixels
/// carry zero flow.
FlowField render_cross_view_flow(const GaussianScene& scene, const MotionScript& script, std::size_t frame,
                                 const CameraModel& from, const CameraModel& to);

/// Ground-truth anchor paths of the given tracks on the script timeline.
std::vector<AnchorTrajectory> ground_truth_anchors(const GaussianScene& scene, const MotionScript& script,
                                                   std::span<const Track2D> tracks, int source_view);

}  // namespace splatmotion

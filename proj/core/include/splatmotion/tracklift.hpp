#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "splatmotion/camera.hpp"
#include "splatmotion/geometry.hpp"
#include "splatmotion/raster.hpp"
#include "splatmotion/scene.hpp"

namespace splatmotion {

/// 2D point track; the seed frame t0_index is always visible.
struct Track2D {
  int id = 0;
  std::vector<Vec2> uv;
  std::vector<bool> visible;
  std::size_t t0_index = 0;

  std::size_t frame_count() const { return uv.size(); }
  void validate() const;
};

struct DepthSequence {
  std::vector<std::optional<double>> raw;
  std::vector<double> filled;
  std::vector<double> aligned;
  double gt_depth_t0 = 0.0;
};

/// World-space path of one lifted track on the aligned timeline.
struct AnchorTrajectory {
  int id = 0;
  int source_view = 0;
  std::size_t t0_global = 0;  // index of the static frame within `positions`
  std::vector<Vec3> positions;
  std::vector<bool> observed;

  std::size_t timestep_count() const { return positions.size(); }
};

/// Lifted track on its own video's frame indices (before temporal alignment).
struct LiftedTrack {
  int id = 0;
  int source_view = 0;
  std::vector<Vec3> positions;
};

/// All lifted tracks of one guidance video.
struct TrajectoryBank {
  int source_view = 0;
  std::size_t t0_index = 0;
  std::size_t frame_count = 0;
  std::vector<LiftedTrack> tracks;
};

struct TrackingCorrection {
  double threshold = 1.2;
  int radius = 2;
};

struct CorrectedTrack {
  Track2D track;
  DepthSequence depth;
  std::size_t repaired_frames = 0;
};

/// Depth at every visible frame by bilinear sampling; absent for occluded
/// frames and for samples that touch an invalid pixel.
DepthSequence sample_depth(const Track2D& track, std::span<const DepthMap> maps);

double depth_ratio(double a, double b);

/// Walks consecutive visible frames outward from t0 and repairs jumps whose
/// depth ratio reaches the threshold by snapping to the best pixel in the
/// (2r+1)^2 neighbourhood. Empty means the track is discarded.
std::optional<CorrectedTrack> correct_track(const Track2D& track, const DepthSequence& seq,
                                            std::span<const DepthMap> maps,
                                            const TrackingCorrection& cfg = {});

/// Natural cubic spline through the known depths, linear continuation past
/// the first/last knot. Throws Errc::insufficient_data with fewer than two.
DepthSequence fill_occluded_depth(const DepthSequence& seq, const std::vector<bool>& visible);

/// aligned[t] = filled[t] * gt / filled[t0]; aligned[t0] is exactly gt.
DepthSequence align_depth(const DepthSequence& seq, std::size_t t0, double gt);

double gt_depth_lookup(const Track2D& track, const DepthMap& gt_map);

std::vector<Vec3> lift_track(const CameraModel& cam, const Track2D& track, const DepthSequence& seq);

std::vector<LiftedTrack> filter_by_bbox(std::span<const LiftedTrack> trajectories, const BoundingBox3& box,
                                        std::size_t t0);

struct TemporalAlignment {
  int window_start = 0;  // global index of the first window step; t0 sits at global 0
  std::size_t window_length = 0;
  std::size_t support = 0;
  std::vector<AnchorTrajectory> anchors;
};

/// Observations a window [start, start + n) covers.
std::size_t window_support(std::span<const TrajectoryBank> banks, int start, std::size_t n);

/// Aligns every bank's t0 at global index 0 and keeps the n-step window with
/// the largest support, preferring the latest window on ties.
TemporalAlignment align_temporal(std::span<const TrajectoryBank> banks);

/// Uniform grid of roughly `count` seed pixels over the image rectangle the
/// box projects to.
std::vector<Vec2> seed_grid(const CameraModel& cam, const BoundingBox3& box, std::size_t count);

/// Per-stage tallies of lift_view / lift_views.
struct LiftCounts {
  std::size_t input = 0;
  std::size_t corrected = 0;
  std::size_t discarded_tracking = 0;
  std::size_t discarded_depth = 0;
  std::size_t discarded_gt = 0;
  std::size_t outside_box = 0;
  std::size_t kept = 0;

  LiftCounts& operator+=(const LiftCounts& other);
};

struct ViewObservations {
  int view_id = 0;
  CameraModel camera;
  std::vector<Track2D> tracks;
  std::vector<DepthMap> depths;
  DepthMap gt_depth;
};

/// sample -> correct -> fill -> align -> lift -> filter for one video.
TrajectoryBank lift_view(const ViewObservations& view, const BoundingBox3& box, const TrackingCorrection& cfg,
                         LiftCounts* counts = nullptr);

std::vector<Track2D> read_tracks(const std::filesystem::path& path);
void write_tracks(const std::filesystem::path& path, std::span<const Track2D> tracks);

std::vector<AnchorTrajectory> read_anchor_bank(const std::filesystem::path& path);
void write_anchor_bank(const std::filesystem::path& path, std::span<const AnchorTrajectory> anchors);

}  // namespace splatmotion

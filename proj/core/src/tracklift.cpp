#include "splatmotion/tracklift.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include <json.hpp>

#include "binary_io.hpp"
#include "json_util.hpp"
#include "splatmotion/error.hpp"
#include "splatmotion/parallel.hpp"
#include "splatmotion/spline.hpp"

namespace splatmotion {

void Track2D::validate() const {
  if (uv.size() != visible.size())
    throw Error(Errc::input, "track " + std::to_string(id) + ": uv and visibility lengths differ");
  if (t0_index >= uv.size())
    throw Error(Errc::input, "track " + std::to_string(id) + ": t0 index outside the track");
  if (!visible[t0_index]) throw Error(Errc::input, "track " + std::to_string(id) + ": not visible at t0");
  for (const auto& p : uv)
    if (!p.allFinite()) throw Error(Errc::input, "track " + std::to_string(id) + ": non-finite pixel");
}

DepthSequence sample_depth(const Track2D& track, std::span<const DepthMap> maps) {
  track.validate();
  if (maps.size() != track.frame_count())
    throw Error(Errc::input, "track " + std::to_string(track.id) + ": expected one depth map per frame");
  DepthSequence seq;
  seq.raw.resize(track.frame_count());
  for (std::size_t t = 0; t < track.frame_count(); ++t) {
    if (!track.visible[t]) continue;
    const Vec2& p = track.uv[t];
    if (!maps[t].in_bounds(p.x(), p.y()))
      throw Error(Errc::input, "track " + std::to_string(track.id) + ": pixel out of bounds at frame " +
                                   std::to_string(t));
    seq.raw[t] = sample_depth_bilinear(maps[t], p.x(), p.y());
  }
  return seq;
}

double depth_ratio(double a, double b) { return std::max(a, b) / std::min(a, b); }

std::optional<CorrectedTrack> correct_track(const Track2D& track, const DepthSequence& seq,
                                            std::span<const DepthMap> maps, const TrackingCorrection& cfg) {
  if (seq.raw.size() != track.frame_count() || maps.size() != track.frame_count())
    throw Error(Errc::input, "track " + std::to_string(track.id) + ": depth sequence does not match the track");

  CorrectedTrack out{track, seq, 0};
  auto known = [&](std::size_t t) { return out.track.visible[t] && out.depth.raw[t].has_value(); };

  // Walks from t0 towards `step`; the frame nearer to t0 is the reference.
  auto walk = [&](int step) -> bool {
    std::optional<std::size_t> reference;
    if (known(track.t0_index)) reference = track.t0_index;
    for (auto t = static_cast<long>(track.t0_index) + step; t >= 0 && t < static_cast<long>(track.frame_count());
         t += step) {
      const auto frame = static_cast<std::size_t>(t);
      if (!known(frame)) continue;
      if (!reference) {
        reference = frame;
        continue;
      }
      const double ref_depth = *out.depth.raw[*reference];
      if (depth_ratio(ref_depth, *out.depth.raw[frame]) >= cfg.threshold) {
        const DepthMap& map = maps[frame];
        const int cx = static_cast<int>(std::lround(out.track.uv[frame].x()));
        const int cy = static_cast<int>(std::lround(out.track.uv[frame].y()));
        double best_ratio = std::numeric_limits<double>::infinity();
        int best_dist = 0;
        int best_x = 0;
        int best_y = 0;
        for (int dy = -cfg.radius; dy <= cfg.radius; ++dy) {
          for (int dx = -cfg.radius; dx <= cfg.radius; ++dx) {
            const int x = cx + dx;
            const int y = cy + dy;
            if (x < 0 || y < 0 || x >= map.width || y >= map.height || !map.valid(x, y)) continue;
            const double r = depth_ratio(ref_depth, map.at(x, y));
            const int dist = dx * dx + dy * dy;
            if (r < best_ratio || (r == best_ratio && dist < best_dist)) {
              best_ratio = r;
              best_dist = dist;
              best_x = x;
              best_y = y;
            }
          }
        }
        if (!(best_ratio < cfg.threshold)) return false;
        out.track.uv[frame] = Vec2(best_x, best_y);
        out.depth.raw[frame] = map.at(best_x, best_y);
        ++out.repaired_frames;
      }
      reference = frame;
    }
    return true;
  };

  if (!walk(+1) || !walk(-1)) return std::nullopt;
  return out;
}

DepthSequence fill_occluded_depth(const DepthSequence& seq, const std::vector<bool>& visible) {
  if (visible.size() != seq.raw.size()) throw Error(Errc::input, "visibility length does not match depth sequence");
  std::vector<double> xs, ys;
  for (std::size_t t = 0; t < seq.raw.size(); ++t) {
    if (visible[t] && seq.raw[t]) {
      xs.push_back(static_cast<double>(t));
      ys.push_back(*seq.raw[t]);
    }
  }
  if (xs.size() < 2) throw Error(Errc::insufficient_data, "fewer than two known depths to fill occlusions");

  DepthSequence out = seq;
  out.filled.resize(seq.raw.size());
  const NaturalCubicSpline spline(xs, ys);
  for (std::size_t t = 0; t < seq.raw.size(); ++t)
    out.filled[t] = (visible[t] && seq.raw[t]) ? *seq.raw[t] : spline(static_cast<double>(t));
  return out;
}

DepthSequence align_depth(const DepthSequence& seq, std::size_t t0, double gt) {
  if (t0 >= seq.filled.size()) throw Error(Errc::input, "t0 outside the filled depth sequence");
  if (!(gt > 0.0) || !std::isfinite(gt)) throw Error(Errc::input, "ground-truth depth must be positive");
  const double estimate = seq.filled[t0];
  if (!(estimate > 0.0) || !std::isfinite(estimate))
    throw Error(Errc::degenerate_depth, "estimated depth at t0 is not positive");

  DepthSequence out = seq;
  const double ratio = gt / estimate;
  out.aligned.resize(seq.filled.size());
  for (std::size_t t = 0; t < seq.filled.size(); ++t) out.aligned[t] = seq.filled[t] * ratio;
  out.aligned[t0] = gt;
  out.gt_depth_t0 = gt;
  return out;
}

double gt_depth_lookup(const Track2D& track, const DepthMap& gt_map) {
  track.validate();
  const Vec2& p = track.uv[track.t0_index];
  if (!gt_map.in_bounds(p.x(), p.y()))
    throw Error(Errc::input, "track " + std::to_string(track.id) + ": t0 pixel outside the ground-truth map");
  const auto depth = sample_depth_bilinear(gt_map, p.x(), p.y());
  if (!depth) throw Error(Errc::missing_gt, "track " + std::to_string(track.id) + ": no valid ground-truth depth");
  return *depth;
}

std::vector<Vec3> lift_track(const CameraModel& cam, const Track2D& track, const DepthSequence& seq) {
  if (seq.aligned.size() != track.frame_count())
    throw Error(Errc::input, "track " + std::to_string(track.id) + ": aligned depth missing");
  std::vector<Vec3> points(track.frame_count());
  for (std::size_t t = 0; t < track.frame_count(); ++t)
    points[t] = unproject(cam, track.uv[t].x(), track.uv[t].y(), seq.aligned[t]);
  return points;
}

std::vector<LiftedTrack> filter_by_bbox(std::span<const LiftedTrack> trajectories, const BoundingBox3& box,
                                        std::size_t t0) {
  box.validate();
  std::vector<LiftedTrack> kept;
  for (const auto& traj : trajectories) {
    if (t0 >= traj.positions.size()) throw Error(Errc::input, "trajectory has no position at t0");
    if (box.contains(traj.positions[t0])) kept.push_back(traj);
  }
  return kept;
}

namespace {

void check_banks(std::span<const TrajectoryBank> banks) {
  if (banks.empty()) throw Error(Errc::input, "temporal alignment needs at least one trajectory bank");
  const std::size_t n = banks.front().frame_count;
  if (n == 0) throw Error(Errc::input, "trajectory banks must have at least one frame");
  for (const auto& bank : banks) {
    if (bank.frame_count != n) throw Error(Errc::input, "trajectory banks disagree on the frame count");
    if (bank.t0_index >= n) throw Error(Errc::input, "bank t0 index outside its frames");
    for (const auto& track : bank.tracks)
      if (track.positions.size() != n) throw Error(Errc::input, "lifted track length differs from bank frames");
  }
}

}  // namespace

std::size_t window_support(std::span<const TrajectoryBank> banks, int start, std::size_t n) {
  std::size_t support = 0;
  for (const auto& bank : banks) {
    const int first = -static_cast<int>(bank.t0_index);
    const int last = first + static_cast<int>(bank.frame_count) - 1;
    const int lo = std::max(first, start);
    const int hi = std::min(last, start + static_cast<int>(n) - 1);
    if (hi >= lo) support += static_cast<std::size_t>(hi - lo + 1) * bank.tracks.size();
  }
  return support;
}

TemporalAlignment align_temporal(std::span<const TrajectoryBank> banks) {
  check_banks(banks);
  const auto n = banks.front().frame_count;
  int lo = 0;
  int hi = 0;
  for (const auto& bank : banks) {
    lo = std::min(lo, -static_cast<int>(bank.t0_index));
    hi = std::max(hi, static_cast<int>(bank.frame_count - 1 - bank.t0_index));
  }

  TemporalAlignment result;
  result.window_length = n;
  result.window_start = lo;
  result.support = 0;
  bool first = true;
  for (int start = lo; start + static_cast<int>(n) - 1 <= hi; ++start) {
    const std::size_t support = window_support(banks, start, n);
    if (first || support >= result.support) {
      result.window_start = start;
      result.support = support;
      first = false;
    }
  }

  for (const auto& bank : banks) {
    for (const auto& track : bank.tracks) {
      AnchorTrajectory anchor;
      anchor.id = track.id;
      anchor.source_view = track.source_view;
      anchor.t0_global = static_cast<std::size_t>(-result.window_start);
      anchor.positions.assign(n, Vec3::Zero());
      anchor.observed.assign(n, false);
      for (std::size_t s = 0; s < n; ++s) {
        const long frame = result.window_start + static_cast<long>(s) + static_cast<long>(bank.t0_index);
        if (frame < 0 || frame >= static_cast<long>(bank.frame_count)) continue;
        anchor.positions[s] = track.positions[static_cast<std::size_t>(frame)];
        anchor.observed[s] = true;
      }
      result.anchors.push_back(std::move(anchor));
    }
  }
  return result;
}

std::vector<Vec2> seed_grid(const CameraModel& cam, const BoundingBox3& box, std::size_t count) {
  box.validate();
  double umin = std::numeric_limits<double>::infinity();
  double vmin = umin;
  double umax = -umin;
  double vmax = -umin;
  for (int corner = 0; corner < 8; ++corner) {
    const Vec3 sign((corner & 1) ? 1.0 : -1.0, (corner & 2) ? 1.0 : -1.0, (corner & 4) ? 1.0 : -1.0);
    const Vec3 world = box.center + box.rotation * sign.cwiseProduct(box.half_extents);
    const Vec3 local = cam.R * world + cam.T;
    if (local.z() <= 0.0) continue;
    const auto p = project(cam, world);
    umin = std::min(umin, p.u);
    umax = std::max(umax, p.u);
    vmin = std::min(vmin, p.v);
    vmax = std::max(vmax, p.v);
  }
  umin = std::max(umin, 0.0);
  vmin = std::max(vmin, 0.0);
  umax = std::min(umax, static_cast<double>(cam.width - 1));
  vmax = std::min(vmax, static_cast<double>(cam.height - 1));
  if (count == 0 || !(umax > umin) || !(vmax > vmin)) return {};

  const double w = umax - umin;
  const double h = vmax - vmin;
  const auto cols = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(std::sqrt(count * w / h))));
  const auto rows = (count + cols - 1) / cols;
  std::vector<Vec2> seeds;
  seeds.reserve(rows * cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      seeds.emplace_back(umin + (c + 0.5) * w / cols, vmin + (r + 0.5) * h / rows);
  return seeds;
}

LiftCounts& LiftCounts::operator+=(const LiftCounts& other) {
  input += other.input;
  corrected += other.corrected;
  discarded_tracking += other.discarded_tracking;
  discarded_depth += other.discarded_depth;
  discarded_gt += other.discarded_gt;
  outside_box += other.outside_box;
  kept += other.kept;
  return *this;
}

namespace {

enum class Outcome { kept, tracking, depth, gt, outside };

struct TrackResult {
  Outcome outcome = Outcome::depth;
  bool corrected = false;
  LiftedTrack lifted;
};

TrackResult lift_one(const ViewObservations& view, const Track2D& track, const BoundingBox3& box,
                     const TrackingCorrection& cfg) {
  TrackResult result;
  const DepthSequence raw = sample_depth(track, view.depths);
  auto corrected = correct_track(track, raw, view.depths, cfg);
  if (!corrected) {
    result.outcome = Outcome::tracking;
    return result;
  }
  result.corrected = corrected->repaired_frames > 0;
  const Track2D& fixed = corrected->track;
  try {
    const DepthSequence filled = fill_occluded_depth(corrected->depth, fixed.visible);
    double gt = 0.0;
    try {
      gt = gt_depth_lookup(fixed, view.gt_depth);
    } catch (const Error& e) {
      if (e.code() != Errc::missing_gt) throw;
      result.outcome = Outcome::gt;
      return result;
    }
    const DepthSequence aligned = align_depth(filled, fixed.t0_index, gt);
    result.lifted = {fixed.id, view.view_id, lift_track(view.camera, fixed, aligned)};
  } catch (const Error& e) {
    if (e.code() != Errc::insufficient_data && e.code() != Errc::degenerate_depth && e.code() != Errc::range)
      throw;
    result.outcome = Outcome::depth;
    return result;
  }
  result.outcome = box.contains(result.lifted.positions[fixed.t0_index]) ? Outcome::kept : Outcome::outside;
  return result;
}

}  // namespace

TrajectoryBank lift_view(const ViewObservations& view, const BoundingBox3& box, const TrackingCorrection& cfg,
                         LiftCounts* counts) {
  box.validate();
  view.camera.validate();
  TrajectoryBank bank;
  bank.source_view = view.view_id;
  bank.frame_count = view.depths.size();
  if (!view.tracks.empty()) bank.t0_index = view.tracks.front().t0_index;
  for (const auto& track : view.tracks) {
    if (track.t0_index != bank.t0_index)
      throw Error(Errc::input, "tracks of one video must share the t0 frame");
  }

  std::vector<TrackResult> results(view.tracks.size());
  parallel_for(view.tracks.size(), [&](std::size_t i) { results[i] = lift_one(view, view.tracks[i], box, cfg); });

  LiftCounts local;
  local.input = view.tracks.size();
  for (auto& r : results) {
    if (r.corrected) ++local.corrected;
    switch (r.outcome) {
      case Outcome::kept:
        ++local.kept;
        bank.tracks.push_back(std::move(r.lifted));
        break;
      case Outcome::tracking: ++local.discarded_tracking; break;
      case Outcome::depth: ++local.discarded_depth; break;
      case Outcome::gt: ++local.discarded_gt; break;
      case Outcome::outside: ++local.outside_box; break;
    }
  }
  if (counts) *counts += local;
  return bank;
}

std::vector<Track2D> read_tracks(const std::filesystem::path& path) {
  std::istringstream in(detail::read_file(path));
  std::vector<Track2D> tracks;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    const auto j = detail::parse_json(line, where);
    Track2D track;
    try {
      track.id = j.at("id").get<int>();
      const long t0 = j.at("t0").get<long>();
      if (t0 < 0) throw Error(Errc::parse, where + ": negative t0");
      track.t0_index = static_cast<std::size_t>(t0);
      for (const auto& p : j.at("uv")) track.uv.push_back(detail::vec2_from(p, where));
      for (const auto& v : j.at("visible")) track.visible.push_back(v.get<bool>());
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::parse, where + ": " + e.what());
    }
    try {
      track.validate();
    } catch (const Error& e) {
      throw Error(Errc::parse, where + ": " + e.what());
    }
    tracks.push_back(std::move(track));
  }
  return tracks;
}

void write_tracks(const std::filesystem::path& path, std::span<const Track2D> tracks) {
  std::string out;
  for (const auto& track : tracks) {
    nlohmann::ordered_json j;
    j["id"] = track.id;
    j["t0"] = track.t0_index;
    auto uv = nlohmann::ordered_json::array();
    for (const auto& p : track.uv) uv.push_back({p.x(), p.y()});
    j["uv"] = std::move(uv);
    auto visible = nlohmann::ordered_json::array();
    for (bool v : track.visible) visible.push_back(v);
    j["visible"] = std::move(visible);
    out += j.dump();
    out += '\n';
  }
  detail::write_file(path, out);
}

std::vector<AnchorTrajectory> read_anchor_bank(const std::filesystem::path& path) {
  std::istringstream in(detail::read_file(path));
  std::vector<AnchorTrajectory> anchors;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    const auto j = detail::parse_json(line, where);
    AnchorTrajectory anchor;
    try {
      anchor.id = j.at("id").get<int>();
      anchor.source_view = j.at("source_view").get<int>();
      anchor.t0_global = j.at("t0_global").get<std::size_t>();
      for (const auto& p : j.at("positions")) {
        if (p.is_null()) {
          anchor.positions.push_back(Vec3::Zero());
          anchor.observed.push_back(false);
        } else {
          anchor.positions.push_back(detail::vec3_from(p, where));
          anchor.observed.push_back(true);
        }
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::parse, where + ": " + e.what());
    }
    if (anchor.t0_global >= anchor.positions.size() || !anchor.observed[anchor.t0_global])
      throw Error(Errc::parse, where + ": anchor is not observed at t0_global");
    anchors.push_back(std::move(anchor));
  }
  return anchors;
}

void write_anchor_bank(const std::filesystem::path& path, std::span<const AnchorTrajectory> anchors) {
  std::string out;
  for (const auto& anchor : anchors) {
    nlohmann::ordered_json j;
    j["id"] = anchor.id;
    j["source_view"] = anchor.source_view;
    j["t0_global"] = anchor.t0_global;
    auto positions = nlohmann::ordered_json::array();
    for (std::size_t s = 0; s < anchor.positions.size(); ++s) {
      if (anchor.observed[s]) {
        const Vec3& p = anchor.positions[s];
        positions.push_back({p.x(), p.y(), p.z()});
      } else {
        positions.push_back(nullptr);
      }
    }
    j["positions"] = std::move(positions);
    out += j.dump();
    out += '\n';
  }
  detail::write_file(path, out);
}

}  // namespace splatmotion

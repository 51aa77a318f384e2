#include "splatmotion/guidance.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "splatmotion/error.hpp"

namespace splatmotion {

LatentTensor blend_latents(const LatentTensor& z_prev, const LatentTensor& z_render, double lambda_prev) {
  if (z_prev.shape != z_render.shape || z_prev.values.size() != z_render.values.size())
    throw Error(Errc::input, "latent shapes differ");
  if (z_prev.values.size() != z_prev.element_count()) throw Error(Errc::input, "latent value count mismatch");
  if (!(lambda_prev >= 0.0 && lambda_prev <= 1.0)) throw Error(Errc::range, "lambda must lie in [0,1]");
  LatentTensor out = z_prev;
  for (std::size_t i = 0; i < out.values.size(); ++i)
    out.values[i] = lambda_prev * z_prev.values[i] + (1.0 - lambda_prev) * z_render.values[i];
  return out;
}

double LinearSchedule::value(int step) const {
  if (total_steps <= 1 || step <= 0) return start;
  if (step >= total_steps - 1) return end;
  const double fraction = static_cast<double>(step) / static_cast<double>(total_steps - 1);
  const double v = start + (end - start) * fraction;
  return std::clamp(v, std::min(start, end), std::max(start, end));
}

double schedule_value(const LinearSchedule& schedule, int step) {
  if (schedule.total_steps < 1) throw Error(Errc::input, "schedule needs at least one step");
  return schedule.value(step);
}

FlowField compose_flow(const FlowField& view_flow_t0, const FlowField& time_flow_ti_to_t0) {
  if (view_flow_t0.width != time_flow_ti_to_t0.width || view_flow_t0.height != time_flow_ti_to_t0.height)
    throw Error(Errc::input, "flow fields differ in size");
  FlowField out(view_flow_t0.width, view_flow_t0.height);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      const Vec2 target = Vec2(x, y) + time_flow_ti_to_t0.at(x, y);
      out.at(x, y) = sample_flow_clamped(view_flow_t0, target.x(), target.y());
    }
  }
  return out;
}

Image warp_frame(const Image& frame, const FlowField& flow, const Image& fill) {
  if (frame.width != flow.width || frame.height != flow.height)
    throw Error(Errc::input, "frame and flow differ in size");
  if (!frame.same_shape(fill)) throw Error(Errc::input, "frame and fill image differ in shape");

  const int w = frame.width;
  const int h = frame.height;
  const int c = frame.channels;
  std::vector<double> accum(frame.data.size(), 0.0);
  std::vector<double> weight(static_cast<std::size_t>(w) * h, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Vec2 q = Vec2(x, y) + flow.at(x, y);
      if (!q.allFinite()) continue;
      const double fx = std::floor(q.x());
      const double fy = std::floor(q.y());
      const double ax = q.x() - fx;
      const double ay = q.y() - fy;
      for (int j = 0; j < 2; ++j) {
        for (int i = 0; i < 2; ++i) {
          const double wgt = (i ? ax : 1.0 - ax) * (j ? ay : 1.0 - ay);
          if (wgt == 0.0) continue;
          const double tx = fx + i;
          const double ty = fy + j;
          if (tx < 0.0 || ty < 0.0 || tx >= w || ty >= h) continue;
          const auto target = static_cast<std::size_t>(ty) * w + static_cast<std::size_t>(tx);
          weight[target] += wgt;
          for (int k = 0; k < c; ++k) accum[target * c + k] += wgt * frame.at(x, y, k);
        }
      }
    }
  }

  constexpr double kMinWeight = 1e-6;
  Image out = fill;
  for (std::size_t p = 0; p < weight.size(); ++p) {
    if (weight[p] < kMinWeight) continue;
    for (int k = 0; k < c; ++k) out.data[p * c + k] = accum[p * c + k] / weight[p];
  }
  return out;
}

std::vector<Image> warp_video(std::span<const Image> frames, const FlowField& view_flow_t0,
                              std::span<const FlowField> time_flows, std::span<const Image> fills,
                              std::size_t t0) {
  if (time_flows.size() != frames.size() || fills.size() != frames.size())
    throw Error(Errc::input, "warp_video needs one time flow and one fill image per frame");
  if (t0 >= frames.size()) throw Error(Errc::input, "t0 outside the video");
  std::vector<Image> out;
  out.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const FlowField flow = i == t0 ? view_flow_t0 : compose_flow(view_flow_t0, time_flows[i]);
    out.push_back(warp_frame(frames[i], flow, fills[i]));
  }
  return out;
}

namespace {

std::vector<std::array<double, 3>> color_wheel() {
  constexpr int RY = 15, YG = 6, GC = 4, CB = 11, BM = 13, MR = 6;
  std::vector<std::array<double, 3>> wheel;
  auto ramp = [](int i, int n) { return std::floor(255.0 * i / n); };
  for (int i = 0; i < RY; ++i) wheel.push_back({255, ramp(i, RY), 0});
  for (int i = 0; i < YG; ++i) wheel.push_back({255 - ramp(i, YG), 255, 0});
  for (int i = 0; i < GC; ++i) wheel.push_back({0, 255, ramp(i, GC)});
  for (int i = 0; i < CB; ++i) wheel.push_back({0, 255 - ramp(i, CB), 255});
  for (int i = 0; i < BM; ++i) wheel.push_back({ramp(i, BM), 0, 255});
  for (int i = 0; i < MR; ++i) wheel.push_back({255, 0, 255 - ramp(i, MR)});
  return wheel;
}

}  // namespace

Image flow_to_color(const FlowField& flow, std::optional<double> max_radius) {
  static const auto wheel = color_wheel();
  const auto ncols = static_cast<int>(wheel.size());
  double radius = 0.0;
  if (max_radius) {
    radius = *max_radius;
  } else {
    for (const auto& f : flow.flow) radius = std::max(radius, f.norm());
  }
  if (!(radius > 0.0)) radius = 1.0;

  Image out(flow.width, flow.height, 3);
  for (int y = 0; y < flow.height; ++y) {
    for (int x = 0; x < flow.width; ++x) {
      const Vec2 f = flow.at(x, y) / radius;
      const double rad = f.norm();
      const double angle = std::atan2(-f.y(), -f.x()) / std::numbers::pi;
      const double fk = (angle + 1.0) / 2.0 * (ncols - 1);
      const int k0 = static_cast<int>(std::floor(fk));
      const int k1 = (k0 + 1) % ncols;
      const double frac = fk - k0;
      for (int ch = 0; ch < 3; ++ch) {
        double col = ((1.0 - frac) * wheel[k0][ch] + frac * wheel[k1][ch]) / 255.0;
        col = rad <= 1.0 ? 1.0 - rad * (1.0 - col) : col * 0.75;
        out.at(x, y, ch) = col;
      }
    }
  }
  return out;
}

}  // namespace splatmotion

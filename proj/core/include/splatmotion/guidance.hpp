#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "splatmotion/formats.hpp"
#include "splatmotion/raster.hpp"

namespace splatmotion {

/// Opaque encoder latent; the encoder itself runs out of process.
using LatentTensor = ShapedArray;

/// lambda * z_prev + (1 - lambda) * z_render, elementwise.
LatentTensor blend_latents(const LatentTensor& z_prev, const LatentTensor& z_render, double lambda_prev);

struct LinearSchedule {
  double start = 0.0;
  double end = 0.0;
  int total_steps = 1;

  double value(int step) const;
};

inline constexpr LinearSchedule kNoiseSchedule{0.75, 0.2, 1};
inline constexpr LinearSchedule kLatentBlendSchedule{0.6, 0.0, 1};
inline constexpr int kGuidanceFrames = 8;
inline constexpr int kDenoisingSteps = 40;

double schedule_value(const LinearSchedule& schedule, int step);

/// Cross-view flow for frame t_i: the t0 view flow sampled (bilinear,
/// clamp-to-edge) at p + time_flow(p).
FlowField compose_flow(const FlowField& view_flow_t0, const FlowField& time_flow_ti_to_t0);

/// Forward bilinear splatting of `frame` along `flow`, in row-major source
/// order. Pixels that receive no weight take the value from `fill`.
Image warp_frame(const Image& frame, const FlowField& flow, const Image& fill);

/// Warps every frame of a video to a new viewpoint: frame t0 uses the view
/// flow directly, the others the composed flow.
std::vector<Image> warp_video(std::span<const Image> frames, const FlowField& view_flow_t0,
                              std::span<const FlowField> time_flows, std::span<const Image> fills,
                              std::size_t t0);

/// Middlebury colour-wheel visualisation; radius normalised by max_radius
/// (defaults to the largest flow magnitude).
Image flow_to_color(const FlowField& flow, std::optional<double> max_radius = std::nullopt);

}  // namespace splatmotion

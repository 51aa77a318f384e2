#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "splatmotion/raster.hpp"

namespace splatmotion {

/// Single-channel PFM ("Pf"), written little-endian (scale -1.0) with the
/// format's bottom-to-top scanline order.
DepthMap read_pfm(const std::filesystem::path& path);
void write_pfm(const std::filesystem::path& path, const DepthMap& map);

/// Middlebury .flo: float 202021.25, int32 width, int32 height, then
/// interleaved (u, v) float32 pairs in row-major order.
FlowField read_flo(const std::filesystem::path& path);
void write_flo(const std::filesystem::path& path, const FlowField& field);

/// 8-bit PNG or binary PPM/PGM (chosen by extension), mapped to [0,1].
Image read_image(const std::filesystem::path& path);
void write_image(const std::filesystem::path& path, const Image& image);

/// Flat little-endian float32 payload with a "<path>.json" sidecar holding
/// {"shape": [...]}.
struct ShapedArray {
  std::vector<std::size_t> shape;
  std::vector<double> values;

  std::size_t element_count() const;
};

ShapedArray read_float_blob(const std::filesystem::path& path);
void write_float_blob(const std::filesystem::path& path, const ShapedArray& array);
std::filesystem::path sidecar_path(const std::filesystem::path& path);

}  // namespace splatmotion

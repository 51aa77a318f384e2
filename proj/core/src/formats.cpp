#include "splatmotion/formats.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>

#include <json.hpp>

#include "binary_io.hpp"
#include "json_util.hpp"
#include "splatmotion/error.hpp"

namespace splatmotion {

namespace {

constexpr float kFloMagic = 202021.25f;

// Reads whitespace-separated ASCII header tokens (PFM/PNM), skipping '#'
// comments. Leaves `pos` on the single whitespace byte after the last token.
std::string next_token(const std::string& bytes, std::size_t& pos, const std::string& where) {
  while (pos < bytes.size()) {
    if (bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
      ++pos;
    } else {
      break;
    }
  }
  const std::size_t start = pos;
  while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
  if (start == pos) throw Error(Errc::parse, where + ": truncated header");
  return bytes.substr(start, pos - start);
}

int parse_dimension(const std::string& token, const std::string& where) {
  char* end = nullptr;
  const long value = std::strtol(token.c_str(), &end, 10);
  if (*end != '\0' || value <= 0 || value > (1 << 20))
    throw Error(Errc::parse, where + ": invalid dimension '" + token + "'");
  return static_cast<int>(value);
}

std::string lowercase_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

std::uint8_t quantize(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v * 255.0), 0L, 255L));
}

Image read_pnm(const std::filesystem::path& path) {
  const std::string bytes = detail::read_file(path);
  const std::string where = path.string();
  std::size_t pos = 0;
  const std::string magic = next_token(bytes, pos, where);
  int channels = 0;
  if (magic == "P6") {
    channels = 3;
  } else if (magic == "P5") {
    channels = 1;
  } else {
    throw Error(Errc::parse, where + ": unsupported PNM magic '" + magic + "'");
  }
  const int width = parse_dimension(next_token(bytes, pos, where), where);
  const int height = parse_dimension(next_token(bytes, pos, where), where);
  if (next_token(bytes, pos, where) != "255") throw Error(Errc::parse, where + ": only 8-bit PNM is supported");
  ++pos;
  const std::size_t count = static_cast<std::size_t>(width) * height * channels;
  if (bytes.size() < pos + count) throw Error(Errc::parse, where + ": truncated pixel data");
  Image image(width, height, channels);
  for (std::size_t i = 0; i < count; ++i)
    image.data[i] = static_cast<unsigned char>(bytes[pos + i]) / 255.0;
  return image;
}

void write_pnm(const std::filesystem::path& path, const Image& image) {
  if (image.channels != 1 && image.channels != 3)
    throw Error(Errc::input, "PNM output needs 1 or 3 channels");
  std::string out = (image.channels == 3 ? "P6\n" : "P5\n") + std::to_string(image.width) + " " +
                    std::to_string(image.height) + "\n255\n";
  out.reserve(out.size() + image.data.size());
  for (double v : image.data) out.push_back(static_cast<char>(quantize(v)));
  detail::write_file(path, out);
}

Image read_png(const std::filesystem::path& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  const std::string where = path.string();
  if (!png_image_begin_read_from_file(&png, where.c_str()))
    throw Error(Errc::parse, where + ": " + png.message);
  png.format = PNG_FORMAT_RGB;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&png);
    throw Error(Errc::parse, where + ": " + png.message);
  }
  Image image(static_cast<int>(png.width), static_cast<int>(png.height), 3);
  for (std::size_t i = 0; i < buffer.size(); ++i) image.data[i] = buffer[i] / 255.0;
  return image;
}

void write_png(const std::filesystem::path& path, const Image& image) {
  if (image.channels != 1 && image.channels != 3)
    throw Error(Errc::input, "PNG output needs 1 or 3 channels");
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = image.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<png_byte> buffer(image.data.size());
  std::transform(image.data.begin(), image.data.end(), buffer.begin(), quantize);
  if (!png_image_write_to_file(&png, path.string().c_str(), 0, buffer.data(), 0, nullptr))
    throw Error(Errc::io, path.string() + ": " + png.message);
}

}  // namespace

DepthMap read_pfm(const std::filesystem::path& path) {
  const std::string bytes = detail::read_file(path);
  const std::string where = path.string();
  std::size_t pos = 0;
  const std::string magic = next_token(bytes, pos, where);
  if (magic != "Pf") throw Error(Errc::parse, where + ": expected single-channel 'Pf' PFM, got '" + magic + "'");
  const int width = parse_dimension(next_token(bytes, pos, where), where);
  const int height = parse_dimension(next_token(bytes, pos, where), where);
  const std::string scale_token = next_token(bytes, pos, where);
  char* end = nullptr;
  const double scale = std::strtod(scale_token.c_str(), &end);
  if (*end != '\0' || scale == 0.0 || !std::isfinite(scale))
    throw Error(Errc::parse, where + ": invalid PFM scale '" + scale_token + "'");
  ++pos;
  const bool little = scale < 0.0;

  const std::size_t count = static_cast<std::size_t>(width) * height;
  if (bytes.size() - std::min(pos, bytes.size()) < count * 4)
    throw Error(Errc::parse, where + ": truncated PFM payload");
  DepthMap map(width, height);
  for (int row = 0; row < height; ++row) {
    const int y = height - 1 - row;
    for (int x = 0; x < width; ++x) {
      const char* p = bytes.data() + pos + (static_cast<std::size_t>(row) * width + x) * 4;
      float value;
      if (little) {
        value = detail::get_le<float>(p);
      } else {
        char swapped[4] = {p[3], p[2], p[1], p[0]};
        value = detail::get_le<float>(swapped);
      }
      map.at(x, y) = value;
    }
  }
  return map;
}

void write_pfm(const std::filesystem::path& path, const DepthMap& map) {
  if (map.width <= 0 || map.height <= 0 || map.values.size() != static_cast<std::size_t>(map.width) * map.height)
    throw Error(Errc::input, "depth map shape is inconsistent");
  std::string out = "Pf\n" + std::to_string(map.width) + " " + std::to_string(map.height) + "\n-1.0\n";
  out.reserve(out.size() + map.values.size() * 4);
  for (int y = map.height - 1; y >= 0; --y)
    for (int x = 0; x < map.width; ++x) detail::put_le(out, static_cast<float>(map.at(x, y)));
  detail::write_file(path, out);
}

FlowField read_flo(const std::filesystem::path& path) {
  const std::string bytes = detail::read_file(path);
  const std::string where = path.string();
  detail::Reader reader(bytes, where);
  if (reader.read<float>() != kFloMagic) throw Error(Errc::parse, where + ": bad .flo magic");
  const auto width = reader.read<std::int32_t>();
  const auto height = reader.read<std::int32_t>();
  if (width <= 0 || height <= 0 || width > (1 << 20) || height > (1 << 20))
    throw Error(Errc::parse, where + ": invalid .flo dimensions");
  FlowField field(width, height);
  for (auto& f : field.flow) {
    const float u = reader.read<float>();
    const float v = reader.read<float>();
    f = Vec2(u, v);
  }
  if (!std::all_of(field.flow.begin(), field.flow.end(), [](const Vec2& f) { return f.allFinite(); }))
    throw Error(Errc::parse, where + ": non-finite flow values");
  return field;
}

void write_flo(const std::filesystem::path& path, const FlowField& field) {
  if (field.width <= 0 || field.height <= 0 ||
      field.flow.size() != static_cast<std::size_t>(field.width) * field.height)
    throw Error(Errc::input, "flow field shape is inconsistent");
  std::string out;
  out.reserve(12 + field.flow.size() * 8);
  detail::put_le(out, kFloMagic);
  detail::put_le<std::int32_t>(out, field.width);
  detail::put_le<std::int32_t>(out, field.height);
  for (const auto& f : field.flow) {
    detail::put_le(out, static_cast<float>(f.x()));
    detail::put_le(out, static_cast<float>(f.y()));
  }
  detail::write_file(path, out);
}

Image read_image(const std::filesystem::path& path) {
  const std::string ext = lowercase_extension(path);
  if (ext == ".png") return read_png(path);
  if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm") return read_pnm(path);
  throw Error(Errc::input, path.string() + ": unsupported image extension (png/ppm/pgm)");
}

void write_image(const std::filesystem::path& path, const Image& image) {
  if (image.data.size() != static_cast<std::size_t>(image.width) * image.height * image.channels)
    throw Error(Errc::input, "image shape is inconsistent");
  const std::string ext = lowercase_extension(path);
  if (ext == ".png") return write_png(path, image);
  if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm") return write_pnm(path, image);
  throw Error(Errc::input, path.string() + ": unsupported image extension (png/ppm/pgm)");
}

std::size_t ShapedArray::element_count() const {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".json");
}

ShapedArray read_float_blob(const std::filesystem::path& path) {
  ShapedArray array;
  const auto meta = detail::parse_json(detail::read_file(sidecar_path(path)), sidecar_path(path).string());
  try {
    array.shape = meta.at("shape").get<std::vector<std::size_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse, sidecar_path(path).string() + ": " + e.what());
  }
  if (array.shape.empty() || std::find(array.shape.begin(), array.shape.end(), 0u) != array.shape.end())
    throw Error(Errc::parse, sidecar_path(path).string() + ": shape must be a list of positive integers");

  const std::string bytes = detail::read_file(path);
  const std::size_t n = array.element_count();
  if (bytes.size() != n * 4)
    throw Error(Errc::parse, path.string() + ": payload holds " + std::to_string(bytes.size() / 4) +
                                 " floats, shape needs " + std::to_string(n));
  array.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    array.values[i] = detail::get_le<float>(bytes.data() + i * 4);
    if (!std::isfinite(array.values[i]))
      throw Error(Errc::parse, path.string() + ": non-finite value at element " + std::to_string(i));
  }
  return array;
}

void write_float_blob(const std::filesystem::path& path, const ShapedArray& array) {
  if (array.values.size() != array.element_count())
    throw Error(Errc::input, "shaped array value count does not match its shape");
  std::string out;
  out.reserve(array.values.size() * 4);
  for (double v : array.values) detail::put_le(out, static_cast<float>(v));
  detail::write_file(path, out);
  nlohmann::ordered_json meta;
  meta["shape"] = array.shape;
  meta["dtype"] = "float32";
  meta["byte_order"] = "little";
  detail::write_file(sidecar_path(path), meta.dump() + "\n");
}

}  // namespace splatmotion

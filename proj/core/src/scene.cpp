#include "splatmotion/scene.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "binary_io.hpp"
#include "splatmotion/error.hpp"

namespace splatmotion {

namespace {

constexpr double kUnitTolerance = 1e-6;
constexpr double kOpacityClamp = 1e-7;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double logit(double p) {
  p = std::clamp(p, kOpacityClamp, 1.0 - kOpacityClamp);
  return std::log(p) - std::log1p(-p);
}

enum class PlyType { i8, u8, i16, u16, i32, u32, f32, f64 };

std::optional<PlyType> parse_ply_type(const std::string& name) {
  static const std::map<std::string, PlyType> table = {
      {"char", PlyType::i8},     {"int8", PlyType::i8},      {"uchar", PlyType::u8},
      {"uint8", PlyType::u8},    {"short", PlyType::i16},    {"int16", PlyType::i16},
      {"ushort", PlyType::u16},  {"uint16", PlyType::u16},   {"int", PlyType::i32},
      {"int32", PlyType::i32},   {"uint", PlyType::u32},     {"uint32", PlyType::u32},
      {"float", PlyType::f32},   {"float32", PlyType::f32},  {"double", PlyType::f64},
      {"float64", PlyType::f64},
  };
  auto it = table.find(name);
  if (it == table.end()) return std::nullopt;
  return it->second;
}

std::size_t type_size(PlyType type) {
  switch (type) {
    case PlyType::i8:
    case PlyType::u8: return 1;
    case PlyType::i16:
    case PlyType::u16: return 2;
    case PlyType::i32:
    case PlyType::u32:
    case PlyType::f32: return 4;
    case PlyType::f64: return 8;
  }
  return 0;
}

double read_scalar(const char* data, PlyType type) {
  switch (type) {
    case PlyType::i8: return detail::get_le<std::int8_t>(data);
    case PlyType::u8: return detail::get_le<std::uint8_t>(data);
    case PlyType::i16: return detail::get_le<std::int16_t>(data);
    case PlyType::u16: return detail::get_le<std::uint16_t>(data);
    case PlyType::i32: return detail::get_le<std::int32_t>(data);
    case PlyType::u32: return detail::get_le<std::uint32_t>(data);
    case PlyType::f32: return detail::get_le<float>(data);
    case PlyType::f64: return detail::get_le<double>(data);
  }
  return 0.0;
}

struct PlyProperty {
  std::string name;
  PlyType type;
  std::size_t offset;
};

struct PlyHeader {
  std::size_t vertex_count = 0;
  std::size_t stride = 0;
  std::vector<PlyProperty> properties;
  std::size_t body_offset = 0;
};

PlyHeader parse_header(const std::string& bytes, const std::string& where) {
  const std::string terminator = "end_header\n";
  const auto end = bytes.find(terminator);
  if (end == std::string::npos) throw Error(Errc::parse, where + ": missing end_header");

  PlyHeader header;
  header.body_offset = end + terminator.size();
  std::istringstream lines(bytes.substr(0, end));
  std::string line;
  bool seen_magic = false;
  bool seen_format = false;
  bool in_vertex = false;
  bool vertex_done = false;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream tok(line);
    std::string keyword;
    tok >> keyword;
    if (line_no == 1) {
      if (line != "ply") throw Error(Errc::parse, where + ": missing 'ply' magic");
      seen_magic = true;
      continue;
    }
    if (keyword.empty() || keyword == "comment" || keyword == "obj_info") continue;
    if (keyword == "format") {
      std::string kind, version;
      tok >> kind >> version;
      if (kind != "binary_little_endian")
        throw Error(Errc::parse, where + ": unsupported format '" + kind + "'");
      seen_format = true;
    } else if (keyword == "element") {
      std::string name;
      std::size_t count = 0;
      tok >> name >> count;
      if (!tok) throw Error(Errc::parse, where + ": malformed element line " + std::to_string(line_no));
      if (in_vertex) vertex_done = true;
      in_vertex = false;
      if (name == "vertex") {
        if (vertex_done || !header.properties.empty())
          throw Error(Errc::parse, where + ": vertex must be the first element");
        header.vertex_count = count;
        in_vertex = true;
      } else if (!vertex_done && header.properties.empty()) {
        throw Error(Errc::parse, where + ": element '" + name + "' precedes vertex");
      }
    } else if (keyword == "property") {
      std::string type_name, name;
      tok >> type_name;
      if (type_name == "list") {
        if (in_vertex) throw Error(Errc::parse, where + ": list properties on vertex are unsupported");
        continue;
      }
      tok >> name;
      if (!tok) throw Error(Errc::parse, where + ": malformed property line " + std::to_string(line_no));
      if (!in_vertex) continue;
      auto type = parse_ply_type(type_name);
      if (!type) throw Error(Errc::parse, where + ": property '" + name + "' has unknown type '" + type_name + "'");
      header.properties.push_back({name, *type, header.stride});
      header.stride += type_size(*type);
    } else {
      throw Error(Errc::parse, where + ": unexpected header keyword '" + keyword + "'");
    }
  }
  if (!seen_magic) throw Error(Errc::parse, where + ": missing 'ply' magic");
  if (!seen_format) throw Error(Errc::parse, where + ": missing format line");
  if (header.properties.empty()) throw Error(Errc::parse, where + ": no vertex element");
  return header;
}

std::optional<std::size_t> rest_index(const std::string& name) {
  constexpr std::string_view prefix = "f_rest_";
  if (name.rfind(prefix, 0) != 0) return std::nullopt;
  std::size_t value = 0;
  const char* first = name.data() + prefix.size();
  const char* last = name.data() + name.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return value;
}

}  // namespace

void GaussianScene::resize(std::size_t n) {
  positions.assign(n, Vec3::Zero());
  scales.assign(n, Vec3::Ones());
  rotations.assign(n, Quat::Identity());
  opacities.assign(n, 1.0);
  colors.assign(n, Vec3::Zero());
  normals.assign(n, {0.0f, 0.0f, 0.0f});
  rest.assign(n * rest_per_gaussian, 0.0f);
}

void GaussianScene::validate() const {
  const std::size_t n = count();
  if (scales.size() != n || rotations.size() != n || opacities.size() != n || colors.size() != n ||
      normals.size() != n || rest.size() != n * rest_per_gaussian)
    throw Error(Errc::input, "scene attribute arrays have inconsistent lengths");
  for (std::size_t i = 0; i < n; ++i) {
    const std::string row = " of Gaussian " + std::to_string(i);
    if (!positions[i].allFinite()) throw Error(Errc::input, "non-finite position" + row);
    if (!scales[i].allFinite() || (scales[i].array() <= 0.0).any())
      throw Error(Errc::input, "non-positive scale" + row);
    if (!rotations[i].coeffs().allFinite() || std::abs(rotations[i].norm() - 1.0) > kUnitTolerance)
      throw Error(Errc::input, "non-unit rotation" + row);
    if (!std::isfinite(opacities[i]) || opacities[i] < 0.0 || opacities[i] > 1.0)
      throw Error(Errc::input, "opacity outside [0,1]" + row);
    if (!colors[i].allFinite()) throw Error(Errc::input, "non-finite color" + row);
  }
}

GaussianScene load_scene(const std::filesystem::path& path) {
  const std::string bytes = detail::read_file(path);
  const std::string where = path.string();
  const PlyHeader header = parse_header(bytes, where);

  std::map<std::string, const PlyProperty*> by_name;
  std::vector<std::pair<std::size_t, const PlyProperty*>> rest_props;
  for (const auto& prop : header.properties) {
    if (!by_name.emplace(prop.name, &prop).second)
      throw Error(Errc::parse, where + ": duplicate property '" + prop.name + "'");
    if (auto idx = rest_index(prop.name)) rest_props.emplace_back(*idx, &prop);
  }
  std::sort(rest_props.begin(), rest_props.end());
  for (std::size_t i = 0; i < rest_props.size(); ++i)
    if (rest_props[i].first != i)
      throw Error(Errc::parse, where + ": missing property 'f_rest_" + std::to_string(i) + "'");

  auto require = [&](const char* name) -> const PlyProperty& {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw Error(Errc::parse, where + ": missing property '" + name + "'");
    return *it->second;
  };
  auto optional = [&](const char* name) -> const PlyProperty* {
    auto it = by_name.find(name);
    return it == by_name.end() ? nullptr : it->second;
  };

  const PlyProperty* pos[3] = {&require("x"), &require("y"), &require("z")};
  const PlyProperty* dc[3] = {&require("f_dc_0"), &require("f_dc_1"), &require("f_dc_2")};
  const PlyProperty* scl[3] = {&require("scale_0"), &require("scale_1"), &require("scale_2")};
  const PlyProperty* rot[4] = {&require("rot_0"), &require("rot_1"), &require("rot_2"), &require("rot_3")};
  const PlyProperty& opacity = require("opacity");
  const PlyProperty* nrm[3] = {optional("nx"), optional("ny"), optional("nz")};

  const std::size_t n = header.vertex_count;
  if (bytes.size() - header.body_offset < n * header.stride)
    throw Error(Errc::parse, where + ": body holds fewer than " + std::to_string(n) + " vertices");

  GaussianScene scene;
  scene.rest_per_gaussian = rest_props.size();
  scene.resize(n);

  for (std::size_t i = 0; i < n; ++i) {
    const char* row = bytes.data() + header.body_offset + i * header.stride;
    auto value = [&](const PlyProperty& prop) {
      const double v = read_scalar(row + prop.offset, prop.type);
      if (!std::isfinite(v))
        throw Error(Errc::parse, where + ": property '" + prop.name + "' row " + std::to_string(i) + " is not finite");
      return v;
    };
    for (int k = 0; k < 3; ++k) {
      scene.positions[i][k] = value(*pos[k]);
      scene.colors[i][k] = value(*dc[k]);
      scene.scales[i][k] = std::exp(value(*scl[k]));
      if (nrm[k]) scene.normals[i][k] = static_cast<float>(value(*nrm[k]));
    }
    Quat q(value(*rot[0]), value(*rot[1]), value(*rot[2]), value(*rot[3]));
    const double norm = q.norm();
    if (norm == 0.0)
      throw Error(Errc::parse, where + ": property 'rot_0..3' row " + std::to_string(i) + " has zero norm");
    // already-unit quaternions are kept as stored so re-export is byte-exact
    if (std::abs(norm - 1.0) > kUnitTolerance) q.coeffs() /= norm;
    scene.rotations[i] = q;
    scene.opacities[i] = sigmoid(value(opacity));
    for (std::size_t r = 0; r < rest_props.size(); ++r)
      scene.rest[i * scene.rest_per_gaussian + r] = static_cast<float>(value(*rest_props[r].second));
  }
  return scene;
}

void save_scene(const GaussianScene& scene, const std::filesystem::path& path) {
  scene.validate();
  std::ostringstream header;
  header << "ply\nformat binary_little_endian 1.0\nelement vertex " << scene.count() << "\n";
  for (const char* name : {"x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2"})
    header << "property float " << name << "\n";
  for (std::size_t r = 0; r < scene.rest_per_gaussian; ++r) header << "property float f_rest_" << r << "\n";
  for (const char* name : {"opacity", "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"})
    header << "property float " << name << "\n";
  header << "end_header\n";

  std::string out = header.str();
  const std::size_t floats_per_row = 17 + scene.rest_per_gaussian;
  out.reserve(out.size() + scene.count() * floats_per_row * 4);
  auto put = [&](double v) { detail::put_le(out, static_cast<float>(v)); };
  for (std::size_t i = 0; i < scene.count(); ++i) {
    for (int k = 0; k < 3; ++k) put(scene.positions[i][k]);
    for (int k = 0; k < 3; ++k) detail::put_le(out, scene.normals[i][k]);
    for (int k = 0; k < 3; ++k) put(scene.colors[i][k]);
    for (std::size_t r = 0; r < scene.rest_per_gaussian; ++r)
      detail::put_le(out, scene.rest[i * scene.rest_per_gaussian + r]);
    put(logit(scene.opacities[i]));
    for (int k = 0; k < 3; ++k) put(std::log(scene.scales[i][k]));
    const Quat& q = scene.rotations[i];
    put(q.w());
    put(q.x());
    put(q.y());
    put(q.z());
  }
  detail::write_file(path, out);
}

bool BoundingBox3::contains(const Vec3& point) const {
  const Vec3 local = rotation.conjugate() * (point - center);
  return (local.array().abs() <= half_extents.array()).all();
}

void BoundingBox3::validate() const {
  if (!center.allFinite() || !half_extents.allFinite() || (half_extents.array() <= 0.0).any())
    throw Error(Errc::input, "bounding box half extents must be positive and finite");
  if (std::abs(rotation.norm() - 1.0) > kUnitTolerance)
    throw Error(Errc::input, "bounding box rotation must be a unit quaternion");
}

std::size_t SelectionMask::selected_count() const {
  return static_cast<std::size_t>(std::count(flags.begin(), flags.end(), true));
}

std::vector<std::size_t> SelectionMask::indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < flags.size(); ++i)
    if (flags[i]) out.push_back(i);
  return out;
}

SelectionMask select_by_bbox(const GaussianScene& scene, const BoundingBox3& box) {
  box.validate();
  SelectionMask mask;
  mask.flags.resize(scene.count());
  for (std::size_t i = 0; i < scene.count(); ++i) mask.flags[i] = box.contains(scene.positions[i]);
  return mask;
}

void write_selection(const std::filesystem::path& path, const SelectionMask& mask) {
  std::string out;
  out.reserve(mask.size() * 2);
  for (bool flag : mask.flags) {
    out.push_back(flag ? '1' : '0');
    out.push_back('\n');
  }
  detail::write_file(path, out);
}

SelectionMask read_selection(const std::filesystem::path& path) {
  std::istringstream in(detail::read_file(path));
  SelectionMask mask;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line == "1") {
      mask.flags.push_back(true);
    } else if (line == "0") {
      mask.flags.push_back(false);
    } else if (!line.empty()) {
      throw Error(Errc::parse, path.string() + ": line " + std::to_string(line_no) + " is not 0/1");
    }
  }
  return mask;
}

GaussianScene apply_deformation(const GaussianScene& scene, const DynamicScene& dyn, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw Error(Errc::range, "deformation time must lie in [0,1]");
  dyn.validate();
  if (dyn.num_gaussians != scene.count())
    throw Error(Errc::input, "dynamic scene covers " + std::to_string(dyn.num_gaussians) +
                                 " Gaussians but the scene has " + std::to_string(scene.count()));

  GaussianScene out = scene;
  if (dyn.frame_count() == 0) return out;

  const double position = t * static_cast<double>(dyn.frame_count() - 1);
  const std::size_t lower = std::min(static_cast<std::size_t>(std::floor(position)), dyn.frame_count() - 1);
  const std::size_t upper = std::min(lower + 1, dyn.frame_count() - 1);
  const double alpha = position - static_cast<double>(lower);

  for (std::size_t slot = 0; slot < dyn.selected_count(); ++slot) {
    const std::size_t i = dyn.selected[slot];
    const GaussianUpdate& a = dyn.frames[lower][slot];
    GaussianUpdate u = a;
    if (alpha > 0.0) {
      const GaussianUpdate& b = dyn.frames[upper][slot];
      u.translation = (1.0 - alpha) * a.translation + alpha * b.translation;
      u.scale_factor = (1.0 - alpha) * a.scale_factor + alpha * b.scale_factor;
      u.rotation_delta = slerp_shortest(a.rotation_delta, b.rotation_delta, alpha);
    }
    out.positions[i] = scene.positions[i] + u.translation;
    out.scales[i] = scene.scales[i] * u.scale_factor;
    if (u.rotation_delta.coeffs() != Quat::Identity().coeffs())
      out.rotations[i] = (u.rotation_delta * scene.rotations[i]).normalized();
  }
  return out;
}

}  // namespace splatmotion

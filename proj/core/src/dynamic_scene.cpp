#include "splatmotion/dynamic_scene.hpp"

#include <cmath>
#include <string>

#include <json.hpp>

#include "binary_io.hpp"
#include "splatmotion/error.hpp"

namespace splatmotion {

namespace {

constexpr std::string_view kMagic = "SMDYN001";
constexpr std::size_t kFloatsPerUpdate = 8;

}  // namespace

std::string_view to_string(TransferMode mode) noexcept {
  return mode == TransferMode::rigid ? "rigid" : "linear";
}

TransferMode parse_transfer_mode(std::string_view text) {
  if (text == "rigid") return TransferMode::rigid;
  if (text == "linear") return TransferMode::linear;
  throw Error(Errc::input, "unknown transfer mode '" + std::string(text) + "' (expected linear|rigid)");
}

double DynamicScene::time_of(std::size_t frame) const {
  if (frames.size() <= 1) return 0.0;
  return static_cast<double>(frame) / static_cast<double>(frames.size() - 1);
}

void DynamicScene::validate() const {
  if (timeline.size() != frames.size())
    throw Error(Errc::input, "dynamic scene timeline and frame counts differ");
  if (!frames.empty() && t0_frame >= frames.size())
    throw Error(Errc::input, "dynamic scene t0 frame lies outside the timeline");
  for (std::size_t s = 0; s < selected.size(); ++s) {
    if (selected[s] >= num_gaussians) throw Error(Errc::input, "selected index exceeds Gaussian count");
    if (s > 0 && selected[s] <= selected[s - 1]) throw Error(Errc::input, "selected indices must ascend");
  }
  for (const auto& frame : frames) {
    if (frame.size() != selected.size())
      throw Error(Errc::input, "dynamic scene frame does not cover every selected Gaussian");
    for (const auto& u : frame) {
      if (!u.translation.allFinite() || !std::isfinite(u.scale_factor) || u.scale_factor <= 0.0)
        throw Error(Errc::input, "dynamic scene update is not finite/positive");
      if (std::abs(u.rotation_delta.norm() - 1.0) > 1e-6)
        throw Error(Errc::input, "dynamic scene rotation delta is not unit");
    }
  }
  if (!frames.empty()) {
    constexpr double kTol = 1e-9;
    for (const auto& u : frames[t0_frame]) {
      if (u.translation.norm() > kTol || std::abs(u.scale_factor - 1.0) > kTol ||
          u.rotation_delta.vec().norm() > kTol)
        throw Error(Errc::input, "dynamic scene frame at t0 is not the identity");
    }
  }
}

void write_dynamic_scene(const std::filesystem::path& path, const DynamicScene& dyn) {
  dyn.validate();
  nlohmann::json header = {
      {"format", "splatmotion.dynamic_scene"},
      {"version", 1},
      {"timeline", dyn.timeline},
      {"t0_frame", dyn.t0_frame},
      {"num_gaussians", dyn.num_gaussians},
      {"selected", dyn.selected},
      {"mode", to_string(dyn.mode)},
      {"K", dyn.neighbors},
      {"tau", dyn.tau},
      {"layout", "per frame, per selected Gaussian: float32 tx ty tz qw qx qy qz scale"},
  };
  const std::string text = header.dump();

  std::string out(kMagic);
  detail::put_le<std::uint64_t>(out, text.size());
  out += text;
  out.reserve(out.size() + dyn.frames.size() * dyn.selected.size() * kFloatsPerUpdate * 4);
  for (const auto& frame : dyn.frames) {
    for (const auto& u : frame) {
      const Quat& q = u.rotation_delta;
      for (double v : {u.translation.x(), u.translation.y(), u.translation.z(), q.w(), q.x(), q.y(), q.z(),
                       u.scale_factor})
        detail::put_le(out, static_cast<float>(v));
    }
  }
  detail::write_file(path, out);
}

DynamicScene read_dynamic_scene(const std::filesystem::path& path) {
  const std::string bytes = detail::read_file(path);
  const std::string where = path.string();
  detail::Reader reader(bytes, where);
  if (reader.take(kMagic.size()) != kMagic) throw Error(Errc::parse, where + ": not a dynamic scene file");
  const auto header_len = reader.read<std::uint64_t>();
  if (header_len > reader.remaining()) throw Error(Errc::parse, where + ": truncated header");

  DynamicScene dyn;
  try {
    const auto header = nlohmann::json::parse(reader.take(header_len));
    dyn.timeline = header.at("timeline").get<std::vector<int>>();
    dyn.t0_frame = header.at("t0_frame").get<std::size_t>();
    dyn.num_gaussians = header.at("num_gaussians").get<std::size_t>();
    dyn.selected = header.at("selected").get<std::vector<std::size_t>>();
    dyn.mode = parse_transfer_mode(header.at("mode").get<std::string>());
    dyn.neighbors = header.at("K").get<std::size_t>();
    dyn.tau = header.at("tau").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse, where + ": bad header: " + e.what());
  }

  const std::size_t expected = dyn.timeline.size() * dyn.selected.size() * kFloatsPerUpdate * sizeof(float);
  if (reader.remaining() != expected)
    throw Error(Errc::parse, where + ": body size " + std::to_string(reader.remaining()) + " != expected " +
                                 std::to_string(expected));
  dyn.frames.assign(dyn.timeline.size(), std::vector<GaussianUpdate>(dyn.selected.size()));
  for (auto& frame : dyn.frames) {
    for (auto& u : frame) {
      float v[kFloatsPerUpdate];
      for (auto& x : v) x = reader.read<float>();
      u.translation = Vec3(v[0], v[1], v[2]);
      Quat q(v[3], v[4], v[5], v[6]);
      if (q.norm() == 0.0) throw Error(Errc::parse, where + ": zero rotation delta");
      u.rotation_delta = q.normalized();
      u.scale_factor = v[7];
    }
  }
  dyn.validate();
  return dyn;
}

}  // namespace splatmotion

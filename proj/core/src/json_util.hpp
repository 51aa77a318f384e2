#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "splatmotion/error.hpp"
#include "splatmotion/geometry.hpp"

namespace splatmotion::detail {

inline nlohmann::json parse_json(std::string_view text, const std::string& where) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse, where + ": " + e.what());
  }
}

inline std::vector<double> row_major(const Mat3& m) {
  std::vector<double> out;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) out.push_back(m(r, c));
  return out;
}

inline Mat3 mat3_from(const nlohmann::json& j, const std::string& where) {
  const auto values = j.get<std::vector<double>>();
  if (values.size() != 9) throw Error(Errc::parse, where + ": expected 9 row-major reals");
  Mat3 m;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) m(r, c) = values[r * 3 + c];
  return m;
}

inline Vec3 vec3_from(const nlohmann::json& j, const std::string& where) {
  const auto values = j.get<std::vector<double>>();
  if (values.size() != 3) throw Error(Errc::parse, where + ": expected 3 reals");
  return {values[0], values[1], values[2]};
}

inline Vec2 vec2_from(const nlohmann::json& j, const std::string& where) {
  const auto values = j.get<std::vector<double>>();
  if (values.size() != 2) throw Error(Errc::parse, where + ": expected 2 reals");
  return {values[0], values[1]};
}

}  // namespace splatmotion::detail

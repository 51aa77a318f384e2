#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace splatmotion {

/// Failure categories surfaced by the library. The CLI maps the input-side
/// categories to exit code 2 and everything else to 1.
enum class Errc {
  parse,
  io,
  range,
  behind_camera,
  input,
  insufficient_data,
  degenerate_depth,
  missing_gt,
  empty_guidance,
  fixture,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

inline std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::parse: return "parse error";
    case Errc::io: return "I/O error";
    case Errc::range: return "range error";
    case Errc::behind_camera: return "behind-camera error";
    case Errc::input: return "input error";
    case Errc::insufficient_data: return "insufficient-data error";
    case Errc::degenerate_depth: return "degenerate-depth error";
    case Errc::missing_gt: return "missing-GT error";
    case Errc::empty_guidance: return "empty-guidance error";
    case Errc::fixture: return "fixture error";
  }
  return "error";
}

}  // namespace splatmotion

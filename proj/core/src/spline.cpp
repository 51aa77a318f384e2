#include "splatmotion/spline.hpp"

#include <algorithm>

#include "splatmotion/error.hpp"

namespace splatmotion {

NaturalCubicSpline::NaturalCubicSpline(std::span<const double> xs, std::span<const double> ys)
    : xs_(xs.begin(), xs.end()), ys_(ys.begin(), ys.end()), second_(xs.size(), 0.0) {
  const std::size_t n = xs_.size();
  if (n != ys_.size()) throw Error(Errc::input, "spline knot arrays differ in length");
  if (n < 2) throw Error(Errc::insufficient_data, "spline needs at least two knots");
  for (std::size_t i = 1; i < n; ++i)
    if (!(xs_[i] > xs_[i - 1])) throw Error(Errc::input, "spline knots must strictly increase");
  if (n == 2) return;

  // Thomas algorithm on the interior second derivatives.
  const std::size_t m = n - 2;
  std::vector<double> diag(m), upper(m), rhs(m);
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t i = k + 1;
    const double h0 = xs_[i] - xs_[i - 1];
    const double h1 = xs_[i + 1] - xs_[i];
    diag[k] = 2.0 * (h0 + h1);
    upper[k] = h1;
    rhs[k] = 6.0 * ((ys_[i + 1] - ys_[i]) / h1 - (ys_[i] - ys_[i - 1]) / h0);
  }
  for (std::size_t k = 1; k < m; ++k) {
    const double lower = xs_[k + 1] - xs_[k];
    const double factor = lower / diag[k - 1];
    diag[k] -= factor * upper[k - 1];
    rhs[k] -= factor * rhs[k - 1];
  }
  for (std::size_t k = m; k-- > 0;) {
    const double next = (k + 1 < m) ? second_[k + 2] : 0.0;
    second_[k + 1] = (rhs[k] - upper[k] * next) / diag[k];
  }
}

std::size_t NaturalCubicSpline::segment(double x) const {
  auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
  const auto idx = static_cast<std::size_t>(std::distance(xs_.begin(), it));
  return std::clamp<std::size_t>(idx, 1, xs_.size() - 1) - 1;
}

double NaturalCubicSpline::operator()(double x) const {
  if (x < xs_.front()) return ys_.front() + derivative(xs_.front()) * (x - xs_.front());
  if (x > xs_.back()) return ys_.back() + derivative(xs_.back()) * (x - xs_.back());
  const std::size_t i = segment(x);
  const double h = xs_[i + 1] - xs_[i];
  const double a = (xs_[i + 1] - x) / h;
  const double b = (x - xs_[i]) / h;
  return a * ys_[i] + b * ys_[i + 1] +
         ((a * a * a - a) * second_[i] + (b * b * b - b) * second_[i + 1]) * h * h / 6.0;
}

double NaturalCubicSpline::derivative(double x) const {
  x = std::clamp(x, xs_.front(), xs_.back());
  const std::size_t i = segment(x);
  const double h = xs_[i + 1] - xs_[i];
  const double a = (xs_[i + 1] - x) / h;
  const double b = (x - xs_[i]) / h;
  return (ys_[i + 1] - ys_[i]) / h - (3.0 * a * a - 1.0) * h * second_[i] / 6.0 +
         (3.0 * b * b - 1.0) * h * second_[i + 1] / 6.0;
}

}  // namespace splatmotion

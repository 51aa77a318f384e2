#pragma once

#include <span>
#include <vector>

namespace splatmotion {

/// Natural cubic spline (zero second derivative at both ends) through
/// strictly increasing knots. Outside the knot range it continues linearly
/// with the endpoint slope.
class NaturalCubicSpline {
 public:
  NaturalCubicSpline(std::span<const double> xs, std::span<const double> ys);

  double operator()(double x) const;
  double derivative(double x) const;

 private:
  std::size_t segment(double x) const;

  std::vector<double> xs_;
  std::vector<double> ys_;
  std::vector<double> second_;  // second derivatives at the knots
};

}  // namespace splatmotion

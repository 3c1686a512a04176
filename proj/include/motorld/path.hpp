#pragma once

#include <span>
#include <vector>

namespace motorld {

/// Piecewise-linear path through (t_k, x_k), t_0 = 0 < t_1 < ... < t_K.
/// Points are stored row-major, `dimension` values per time.
struct PathSample {
  int dimension = 1;
  std::vector<double> times;
  std::vector<double> points;

  std::size_t size() const { return times.size(); }
  std::span<const double> point(std::size_t k) const {
    return {points.data() + k * dimension, static_cast<std::size_t>(dimension)};
  }

  /// Throws ModelError unless times start at 0, increase strictly and all
  /// points are finite.
  void validate() const;

  /// Linear interpolation at t; throws ModelError outside [t_0, t_K].
  void interpolate(double t, std::span<double> out) const;
};

}  // namespace motorld

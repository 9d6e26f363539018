#pragma once

#include <cstddef>
#include <vector>

namespace kinlv {

// Uniform cell-centered mesh on [0, x_max].
struct Mesh1D {
  double x_max = 1.0;
  std::size_t n_cells = 0;

  double dx() const { return x_max / static_cast<double>(n_cells); }
  double left(std::size_t i) const { return dx() * static_cast<double>(i); }
  double right(std::size_t i) const {
    return dx() * static_cast<double>(i + 1);
  }
  double center(std::size_t i) const {
    return dx() * (static_cast<double>(i) + 0.5);
  }
};

// Piecewise-constant density: f[i] is the cell-average value on cell i.
struct GridDensity {
  Mesh1D mesh;
  std::vector<double> f;

  double mass() const;
  double mean() const;
  double second_moment() const;
  double variance() const;
};

}  // namespace kinlv

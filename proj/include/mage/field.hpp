#pragma once

#include "mage/geometry.hpp"

#include <functional>
#include <vector>

namespace mage {

/// Grid values of a scalar function of (r1, t). No angular coordinates.
struct Field {
  ReducedGrid grid;
  std::vector<double> values;

  explicit Field(const ReducedGrid& g, double fill = 0.0)
      : grid(g), values(static_cast<size_t>(g.size()), fill) {}

  double operator()(int i, int j) const { return values[grid.flat(grid.wrap(i), j)]; }
  double& operator()(int i, int j) { return values[grid.flat(grid.wrap(i), j)]; }

  static Field sample(const ReducedGrid& g,
                      const std::function<double(double, double)>& f) {
    Field out(g);
    for (int j = 0; j < g.nt(); ++j)
      for (int i = 0; i < g.nx(); ++i) out(i, j) = f(g.x(i), g.t(j));
    return out;
  }
};

}  // namespace mage

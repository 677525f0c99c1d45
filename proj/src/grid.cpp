#include "declust/grid.hpp"

namespace declust {

QuadratureGrid QuadratureGrid::make(const Box& bounds, const std::vector<int>& nodes_per_axis) {
  bounds.validate();
  int d = bounds.dim();
  if (d > 2)
    throw ParameterError("QuadratureGrid: only dimensions 1 and 2 are supported");
  if (static_cast<int>(nodes_per_axis.size()) != d)
    throw ParameterError("QuadratureGrid: nodes_per_axis size must match dimension");

  QuadratureGrid g;
  g.bounds_ = bounds;
  g.nodes_ = nodes_per_axis;
  g.spacing_.resize(static_cast<size_t>(d));
  g.cell_weight_ = 1.0;
  size_t total = 1;
  for (int j = 0; j < d; ++j) {
    int nj = nodes_per_axis[static_cast<size_t>(j)];
    if (nj < 2) throw ParameterError("QuadratureGrid: need at least two nodes per axis");
    g.spacing_[static_cast<size_t>(j)] = (bounds.hi[static_cast<size_t>(j)] - bounds.lo[static_cast<size_t>(j)]) / nj;
    g.cell_weight_ *= g.spacing_[static_cast<size_t>(j)];
    total *= static_cast<size_t>(nj);
  }

  g.node_coords_.resize(total * static_cast<size_t>(d));
  if (d == 1) {
    for (size_t i = 0; i < total; ++i)
      g.node_coords_[i] = bounds.lo[0] + (static_cast<double>(i) + 0.5) * g.spacing_[0];
  } else {
    size_t n0 = static_cast<size_t>(nodes_per_axis[0]);
    for (size_t g2 = 0; g2 < total; ++g2) {
      size_t i0 = g2 % n0;
      size_t i1 = g2 / n0;
      g.node_coords_[2 * g2] = bounds.lo[0] + (static_cast<double>(i0) + 0.5) * g.spacing_[0];
      g.node_coords_[2 * g2 + 1] = bounds.lo[1] + (static_cast<double>(i1) + 0.5) * g.spacing_[1];
    }
  }
  return g;
}

}  // namespace declust

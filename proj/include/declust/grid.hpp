#pragma once

#include <vector>

#include "declust/common.hpp"

namespace declust {

// Midpoint-rule lattice on an axis-aligned box, d in {1,2}. Every node
// carries the same weight (the product of axis spacings), so the weights sum
// to the box volume exactly up to rounding.
class QuadratureGrid {
public:
  static QuadratureGrid make(const Box& bounds, const std::vector<int>& nodes_per_axis);

  int dim() const { return bounds_.dim(); }
  size_t node_count() const { return node_coords_.size() / static_cast<size_t>(dim()); }
  int nodes_on_axis(int axis) const { return nodes_[static_cast<size_t>(axis)]; }
  double spacing(int axis) const { return spacing_[static_cast<size_t>(axis)]; }

  /// Constant quadrature weight per node.
  double node_weight() const { return cell_weight_; }

  const Box& bounds() const { return bounds_; }

  /// Pointer to the dim coordinates of node g. Nodes are ordered row-major
  /// with axis 0 fastest.
  const double* node(size_t g) const { return node_coords_.data() + g * static_cast<size_t>(dim()); }

  double node_coord(size_t g, int axis) const { return node(g)[axis]; }

private:
  QuadratureGrid() = default;
  Box bounds_;
  std::vector<int> nodes_;
  std::vector<double> spacing_;
  double cell_weight_ = 0.0;
  std::vector<double> node_coords_;
};

}  // namespace declust

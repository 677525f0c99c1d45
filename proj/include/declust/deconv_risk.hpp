#pragma once

#include <span>

#include "declust/codebook.hpp"
#include "declust/grid.hpp"
#include "declust/kernels.hpp"

namespace declust {

// Deconvolution density estimate sampled on a quadrature grid. Values are a
// signed average of kernel products and are never clipped; negative lobes
// are part of the estimator.
struct DeconvDensity {
  QuadratureGrid grid;
  std::vector<double> values;
  std::vector<double> bandwidths;
  size_t sample_size = 0;

  /// Quadrature of the estimate over the grid box (near 1 for reasonable
  /// configurations, not enforced).
  double integral() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s * grid.node_weight();
  }
};

/// f_n(x) = (1/n) sum_i product_j table_j(Z_ij - x_j) at every grid node.
/// Every observation must lie in the table's sample box; a stray point
/// raises CoverageError naming it.
DeconvDensity deconv_density(const PointSet& sample, const DeconvKernelTable& table,
                             const QuadratureGrid& grid);

/// min_j ||x - c_j||^2.
double clustering_loss(const Codebook& codebook, const double* x);

/// Deconvolved loss of codebook c at observation z: quadrature over the grid
/// of kernel(z - x) * clustering_loss(c, x).
double deconvolved_loss(const Codebook& codebook, const double* z,
                        const DeconvKernelTable& table, const QuadratureGrid& grid);

/// Empirical deconvolution risk: average deconvolved loss over the sample.
/// Summed so that it matches risk_against_density(deconv_density(...))
/// to within accumulation roundoff (the Fubini identity).
double empirical_risk(const Codebook& codebook, const PointSet& sample,
                      const DeconvKernelTable& table, const QuadratureGrid& grid);

/// Quadrature of clustering_loss against a density sampled on the grid.
double risk_against_density(const Codebook& codebook, const QuadratureGrid& grid,
                            std::span<const double> density);

}  // namespace declust

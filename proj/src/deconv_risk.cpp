#include "declust/deconv_risk.hpp"

#include <cmath>
#include <string>

namespace declust {

namespace {

std::string point_to_string(const double* p, int d) {
  std::string s = "(";
  for (int j = 0; j < d; ++j) {
    if (j) s += ", ";
    s += format_double(p[j]);
  }
  return s + ")";
}

void require_covered(const PointSet& sample, const DeconvKernelTable& table) {
  for (size_t i = 0; i < sample.size(); ++i) {
    const double* z = sample.point(i);
    if (!table.covers(z))
      throw CoverageError("observation " + std::to_string(i) + " at " +
                          point_to_string(z, sample.dim) +
                          " lies outside the kernel table's sample box");
  }
}

}  // namespace

DeconvDensity deconv_density(const PointSet& sample, const DeconvKernelTable& table,
                             const QuadratureGrid& grid) {
  if (sample.dim != grid.dim())
    throw ParameterError("deconv_density: sample dimension does not match grid");
  if (table.dim() != grid.dim())
    throw ParameterError("deconv_density: table dimension does not match grid");
  size_t n = sample.size();
  if (n == 0) throw ParameterError("deconv_density: sample is empty");
  require_covered(sample, table);

  DeconvDensity out{grid, {}, table.bandwidths, n};
  size_t count = grid.node_count();
  out.values.assign(count, 0.0);

  const int d = grid.dim();
  if (d == 1) {
    const AxisTable& ax = table.axes[0];
    for (size_t i = 0; i < n; ++i) {
      double z = sample.point(i)[0];
      for (size_t g = 0; g < count; ++g)
        out.values[g] += ax.value_at(z - grid.node(g)[0]);
    }
  } else {
    const AxisTable& ax0 = table.axes[0];
    const AxisTable& ax1 = table.axes[1];
    for (size_t i = 0; i < n; ++i) {
      const double* z = sample.point(i);
      for (size_t g = 0; g < count; ++g) {
        const double* x = grid.node(g);
        out.values[g] += ax0.value_at(z[0] - x[0]) * ax1.value_at(z[1] - x[1]);
      }
    }
  }
  double inv_n = 1.0 / static_cast<double>(n);
  for (double& v : out.values) v *= inv_n;
  return out;
}

double clustering_loss(const Codebook& codebook, const double* x) {
  if (codebook.k < 1) throw ParameterError("clustering_loss: empty codebook");
  double best = squared_distance(codebook.center(0), x, codebook.dim);
  for (int j = 1; j < codebook.k; ++j)
    best = std::min(best, squared_distance(codebook.center(j), x, codebook.dim));
  return best;
}

double deconvolved_loss(const Codebook& codebook, const double* z,
                        const DeconvKernelTable& table, const QuadratureGrid& grid) {
  if (codebook.dim != grid.dim())
    throw ParameterError("deconvolved_loss: codebook dimension does not match grid");
  if (table.dim() != grid.dim())
    throw ParameterError("deconvolved_loss: table dimension does not match grid");
  if (!table.covers(z))
    throw CoverageError("observation at " + point_to_string(z, grid.dim()) +
                        " lies outside the kernel table's sample box");
  double acc = 0.0;
  size_t count = grid.node_count();
  for (size_t g = 0; g < count; ++g) {
    const double* x = grid.node(g);
    acc += table.product_offset(z, x) * clustering_loss(codebook, x);
  }
  return acc * grid.node_weight();
}

double empirical_risk(const Codebook& codebook, const PointSet& sample,
                      const DeconvKernelTable& table, const QuadratureGrid& grid) {
  size_t n = sample.size();
  if (n == 0) throw ParameterError("empirical_risk: sample is empty");
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i)
    acc += deconvolved_loss(codebook, sample.point(i), table, grid);
  return acc / static_cast<double>(n);
}

double risk_against_density(const Codebook& codebook, const QuadratureGrid& grid,
                            std::span<const double> density) {
  if (codebook.dim != grid.dim())
    throw ParameterError("risk_against_density: codebook dimension does not match grid");
  if (density.size() != grid.node_count())
    throw ParameterError("risk_against_density: density size does not match grid");
  double acc = 0.0;
  for (size_t g = 0; g < density.size(); ++g)
    acc += density[g] * clustering_loss(codebook, grid.node(g));
  return acc * grid.node_weight();
}

}  // namespace declust

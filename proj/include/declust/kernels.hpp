#pragma once

#include <complex>
#include <functional>
#include <span>
#include <vector>

#include "declust/grid.hpp"
#include "declust/noise.hpp"

namespace declust {

enum class KernelKind { sinc, flat_top };

// Band-limited smoothing kernel described by its Fourier profile. The
// profile vanishes identically outside [-support_radius, support_radius],
// and equals 1 near the origin, so every moment of the kernel vanishes
// (both built-in kinds are of infinite order).
struct BaseKernel {
  KernelKind kind = KernelKind::flat_top;
  double taper_start = 0.5;    // flat_top: profile is 1 on [-taper_start, taper_start]
  double support_radius = 1.0;

  /// Fourier profile value at frequency u.
  double ft(double u) const;

  bool infinite_order() const { return true; }
};

BaseKernel make_base_kernel(KernelKind kind, double taper_start = 0.5);

struct InversionOptions {
  int freq_nodes = 4096;    // composite-trapezoid panels over the profile support
  double cf_floor = 1e-12;  // minimum usable |cf|; below is ill-posed
  double imag_tol = 1e-8;   // residual imaginary tolerance, relative to table scale
};

// Per-axis sample of the scaled kernel t -> (1/lambda) K((z-x)/lambda ...) on
// the uniform offset lattice m * offset_step, |m| <= half. Values at lattice
// points are exact table entries; off-lattice queries are linearly
// interpolated, with near-lattice queries snapped so grid-aligned offsets
// never interpolate.
struct AxisTable {
  double offset_step = 0.0;
  int half = 0;
  std::vector<double> values;  // size 2*half+1, index m+half <-> offset m*offset_step

  double truncation_radius() const { return half * offset_step; }
  double value_at(double offset) const;
  double value_at_index(int m) const { return values[static_cast<size_t>(m + half)]; }
  double max_abs() const;
};

/// Samples the base kernel itself: t -> (1/lambda) K(t/lambda), by numerical
/// Fourier inversion of the profile over its compact support.
AxisTable sample_base_kernel(const BaseKernel& kernel, double lambda,
                             double offset_step, double truncation_radius,
                             const InversionOptions& opts = {});

/// Samples the deconvolution kernel for one axis: the profile divided by the
/// noise cf evaluated at u/lambda before inversion. With cf identically 1
/// this reproduces sample_base_kernel exactly. Raises NumericalError when the
/// cf magnitude drops below cf_floor at a frequency where the profile is
/// nonzero (ill-posed division) or when the inverted values fail to be real
/// within imag_tol (cf not conjugate-symmetric, i.e. not a valid noise law).
AxisTable deconv_kernel_axis(const BaseKernel& kernel,
                             const std::function<std::complex<double>(double)>& noise_cf,
                             double lambda, double offset_step,
                             double truncation_radius,
                             const InversionOptions& opts = {});

// Product-form deconvolution kernel over all axes, sampled once per (kernel,
// noise, bandwidths, geometry) and then reused for every query. The sample
// box records which observation coordinates the axis tables cover.
struct DeconvKernelTable {
  std::vector<double> bandwidths;
  std::vector<AxisTable> axes;
  Box sample_box;

  int dim() const { return static_cast<int>(axes.size()); }
  bool covers(const double* z) const { return sample_box.contains(z, dim()); }

  /// Product over axes of the axis table at offsets z_j - x_j.
  double product_offset(const double* z, const double* x) const {
    double v = 1.0;
    for (int j = 0; j < dim(); ++j)
      v *= axes[static_cast<size_t>(j)].value_at(z[j] - x[j]);
    return v;
  }
};

/// Builds axis tables whose offset lattices divide the grid spacing exactly
/// (offset_step = spacing / offset_refine) and whose truncation radius covers
/// every offset between a point of sample_box and a grid node.
DeconvKernelTable build_kernel_table(const BaseKernel& kernel, const NoiseModel& noise,
                                     std::span<const double> bandwidths,
                                     const QuadratureGrid& grid, const Box& sample_box,
                                     const InversionOptions& opts = {},
                                     int offset_refine = 2);

/// Default observation coverage: the grid box expanded per axis by
/// margin_sigmas times the noise scale (zero for identity axes).
Box default_sample_box(const QuadratureGrid& grid, const NoiseModel& noise,
                       double margin_sigmas = 40.0);

}  // namespace declust

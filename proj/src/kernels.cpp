#include "declust/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace declust {

namespace {

// Smooth cubic step from 1 at w=0 down to 0 at w=1, C1 at both ends.
double taper_down(double w) { return 1.0 - w * w * (3.0 - 2.0 * w); }

struct InversionPlan {
  double lambda = 0.0;
  double h = 0.0;                  // frequency step
  double support = 0.0;            // profile support radius
  std::vector<double> weighted;    // trapezoid coefficient * profile, per node
  std::vector<std::complex<double>> divisor;  // cf(u_j / lambda); empty => no division
  bool divisor_real = true;
  double scale = 0.0;              // magnitude bound for the inverted values
};

InversionPlan make_plan(const BaseKernel& kernel,
                        const std::function<std::complex<double>(double)>* noise_cf,
                        double lambda, const InversionOptions& opts) {
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw ParameterError("kernel inversion: bandwidth must be positive");
  if (opts.freq_nodes < 16)
    throw ParameterError("kernel inversion: freq_nodes must be at least 16");
  if (!(opts.cf_floor > 0.0))
    throw ParameterError("kernel inversion: cf_floor must be positive");

  InversionPlan plan;
  plan.lambda = lambda;
  plan.support = kernel.support_radius;
  int n = opts.freq_nodes;
  plan.h = 2.0 * plan.support / n;
  plan.weighted.resize(static_cast<size_t>(n) + 1);
  double mag_sum = 0.0;
  if (noise_cf) plan.divisor.resize(static_cast<size_t>(n) + 1);
  for (int j = 0; j <= n; ++j) {
    double u = -plan.support + j * plan.h;
    double trap = (j == 0 || j == n) ? 0.5 : 1.0;
    double w = trap * kernel.ft(u);
    plan.weighted[static_cast<size_t>(j)] = w;
    if (noise_cf) {
      std::complex<double> q = (*noise_cf)(u / lambda);
      // A frequency is "needed" when the profile is nonzero there; a cf
      // collapse elsewhere cannot contaminate the quotient.
      if (w != 0.0 && std::abs(q) < opts.cf_floor)
        throw NumericalError(
            "kernel inversion: noise cf magnitude below cf_floor at frequency " +
            format_double(u / lambda) + " (ill-posed deconvolution)");
      plan.divisor[static_cast<size_t>(j)] = q;
      if (q.imag() != 0.0) plan.divisor_real = false;
      if (w != 0.0) mag_sum += std::abs(w) / std::abs(q);
    } else {
      mag_sum += std::abs(w);
    }
  }
  if (noise_cf && plan.divisor_real) {
    // Real cf: fold the division into the node weights once instead of
    // dividing per offset. With cf identically 1 this leaves the weights
    // bit-for-bit equal to the base-kernel weights.
    for (size_t j = 0; j < plan.weighted.size(); ++j) {
      if (plan.weighted[j] != 0.0) plan.weighted[j] /= plan.divisor[j].real();
    }
    plan.divisor.clear();
  }
  plan.scale = plan.h * mag_sum / (2.0 * kPi * lambda);
  return plan;
}

// Inverts the planned quotient at spatial offset t = m * offset_step:
//   (1 / (2 pi lambda)) * trapezoid over u in [-S, S] of
//       profile(u) / cf(u/lambda) * exp(-i u t / lambda).
// The phase walks by a fixed rotation per node; it is re-anchored with exact
// trigonometry every block to stop drift from compounding.
std::complex<double> invert_at(const InversionPlan& plan, double t) {
  double theta = plan.h * t / plan.lambda;  // phase decrement per node
  size_t count = plan.weighted.size();
  std::complex<double> rot(std::cos(theta), -std::sin(theta));
  std::complex<double> acc(0.0, 0.0);
  std::complex<double> cur(1.0, 0.0);
  const int anchor_block = 512;
  for (size_t j = 0; j < count; ++j) {
    if (j % anchor_block == 0) {
      double phase = -theta * static_cast<double>(j);
      cur = {std::cos(phase), std::sin(phase)};
    }
    double w = plan.weighted[j];
    if (w != 0.0) {
      if (plan.divisor.empty())
        acc += w * cur;
      else
        acc += w / plan.divisor[j] * cur;
    }
    cur *= rot;
  }
  // Undo the node offset: u_0 = -S, so multiply by exp(+i S t / lambda).
  double lead = plan.support * t / plan.lambda;
  acc *= std::complex<double>(std::cos(lead), std::sin(lead));
  return acc * (plan.h / (2.0 * kPi * plan.lambda));
}

AxisTable run_inversion(const InversionPlan& plan, double offset_step,
                        double truncation_radius, const InversionOptions& opts) {
  if (!(offset_step > 0.0) || !std::isfinite(offset_step))
    throw ParameterError("kernel inversion: offset_step must be positive");
  if (!(truncation_radius >= 0.0) || !std::isfinite(truncation_radius))
    throw ParameterError("kernel inversion: truncation_radius must be non-negative");

  AxisTable table;
  table.offset_step = offset_step;
  table.half = static_cast<int>(std::ceil(truncation_radius / offset_step - 1e-12));
  if (table.half < 0) table.half = 0;
  size_t total = 2 * static_cast<size_t>(table.half) + 1;
  if (total > 40'000'000)
    throw ParameterError("kernel inversion: axis table would exceed 40M entries");
  table.values.assign(total, 0.0);

  double imag_limit = opts.imag_tol * std::max(plan.scale, 1e-300);
  if (plan.divisor_real) {
    // Real divisors make the inverse even; one half is computed and mirrored
    // so the symmetry holds bit-for-bit.
    for (int m = 0; m <= table.half; ++m) {
      std::complex<double> v = invert_at(plan, m * offset_step);
      table.values[static_cast<size_t>(table.half + m)] = v.real();
      table.values[static_cast<size_t>(table.half - m)] = v.real();
    }
  } else {
    for (int m = -table.half; m <= table.half; ++m) {
      std::complex<double> v = invert_at(plan, m * offset_step);
      if (std::abs(v.imag()) > imag_limit)
        throw NumericalError(
            "kernel inversion: residual imaginary part " + format_double(v.imag()) +
            " at offset " + format_double(m * offset_step) +
            " exceeds tolerance; noise cf is not conjugate-symmetric");
      table.values[static_cast<size_t>(table.half + m)] = v.real();
    }
  }
  return table;
}

}  // namespace

double BaseKernel::ft(double u) const {
  double a = std::abs(u);
  if (a >= support_radius) {
    // The profile is identically zero outside the support; the boundary
    // itself belongs to the sinc plateau.
    if (kind == KernelKind::sinc && a == support_radius) return 1.0;
    return 0.0;
  }
  if (kind == KernelKind::sinc) return 1.0;
  double ts = taper_start * support_radius;
  if (a <= ts) return 1.0;
  return taper_down((a - ts) / (support_radius - ts));
}

BaseKernel make_base_kernel(KernelKind kind, double taper_start) {
  BaseKernel k;
  k.kind = kind;
  k.support_radius = 1.0;
  k.taper_start = taper_start;
  if (kind == KernelKind::flat_top) {
    if (!(taper_start > 0.0) || !(taper_start < 1.0))
      throw ParameterError("flat_top kernel: taper_start must lie strictly in (0, 1)");
  }
  return k;
}

double AxisTable::value_at(double offset) const {
  double idx = offset / offset_step;
  double nearest = std::round(idx);
  if (std::abs(idx - nearest) < 1e-9) {
    // Grid-aligned query: return the lattice entry exactly.
    int m = static_cast<int>(nearest);
    if (m < -half || m > half)
      throw CoverageError("AxisTable: offset " + format_double(offset) +
                          " outside truncation radius " +
                          format_double(truncation_radius()));
    return value_at_index(m);
  }
  double fl = std::floor(idx);
  int m0 = static_cast<int>(fl);
  if (m0 < -half || m0 + 1 > half)
    throw CoverageError("AxisTable: offset " + format_double(offset) +
                        " outside truncation radius " +
                        format_double(truncation_radius()));
  double frac = idx - fl;
  return value_at_index(m0) * (1.0 - frac) + value_at_index(m0 + 1) * frac;
}

double AxisTable::max_abs() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

AxisTable sample_base_kernel(const BaseKernel& kernel, double lambda,
                             double offset_step, double truncation_radius,
                             const InversionOptions& opts) {
  InversionPlan plan = make_plan(kernel, nullptr, lambda, opts);
  return run_inversion(plan, offset_step, truncation_radius, opts);
}

AxisTable deconv_kernel_axis(const BaseKernel& kernel,
                             const std::function<std::complex<double>(double)>& noise_cf,
                             double lambda, double offset_step,
                             double truncation_radius, const InversionOptions& opts) {
  if (!noise_cf) throw ParameterError("deconv_kernel_axis: noise cf is required");
  InversionPlan plan = make_plan(kernel, &noise_cf, lambda, opts);
  return run_inversion(plan, offset_step, truncation_radius, opts);
}

DeconvKernelTable build_kernel_table(const BaseKernel& kernel, const NoiseModel& noise,
                                     std::span<const double> bandwidths,
                                     const QuadratureGrid& grid, const Box& sample_box,
                                     const InversionOptions& opts, int offset_refine) {
  int d = grid.dim();
  if (noise.dim() != d)
    throw ParameterError("build_kernel_table: noise dimension does not match grid");
  if (static_cast<int>(bandwidths.size()) != d)
    throw ParameterError("build_kernel_table: need one bandwidth per axis");
  sample_box.validate();
  if (sample_box.dim() != d)
    throw ParameterError("build_kernel_table: sample box dimension does not match grid");
  if (offset_refine < 1)
    throw ParameterError("build_kernel_table: offset_refine must be >= 1");

  DeconvKernelTable table;
  table.bandwidths.assign(bandwidths.begin(), bandwidths.end());
  table.sample_box = sample_box;
  table.axes.reserve(static_cast<size_t>(d));
  for (int j = 0; j < d; ++j) {
    double step = grid.spacing(j) / offset_refine;
    // Largest offset |z_j - x_j| between any covered observation and any
    // grid coordinate, measured box edge to box edge (conservative).
    double reach = std::max(sample_box.hi[static_cast<size_t>(j)] - grid.bounds().lo[static_cast<size_t>(j)],
                            grid.bounds().hi[static_cast<size_t>(j)] - sample_box.lo[static_cast<size_t>(j)]);
    reach = std::max(reach, 0.0);
    double trunc = (std::ceil(reach / step - 1e-12) + 1.0) * step;
    auto cf = [&noise, j](double t) { return noise.cf(j, t); };
    table.axes.push_back(
        deconv_kernel_axis(kernel, cf, bandwidths[static_cast<size_t>(j)], step, trunc, opts));
  }
  return table;
}

Box default_sample_box(const QuadratureGrid& grid, const NoiseModel& noise,
                       double margin_sigmas) {
  if (noise.dim() != grid.dim())
    throw ParameterError("default_sample_box: noise dimension does not match grid");
  Box out = grid.bounds();
  for (int j = 0; j < grid.dim(); ++j) {
    const NoiseComponent& c = noise.component(j);
    double margin = c.kind == NoiseKind::identity ? 0.0 : margin_sigmas * c.sigma;
    out.lo[static_cast<size_t>(j)] -= margin;
    out.hi[static_cast<size_t>(j)] += margin;
  }
  return out;
}

}  // namespace declust

#pragma once

#include <span>
#include <vector>

#include "declust/clustering.hpp"
#include "declust/deconv_risk.hpp"

namespace declust {

enum class SourceKind { uniform_box, gaussian_mixture };

// Clean-signal law. Supported shapes: uniform on a box, and an isotropic
// Gaussian mixture truncated to the centered ball of radius M (all mass
// inside that ball, density renormalized accordingly).
class SourceModel {
public:
  static SourceModel uniform(const Box& bounds, double holder_gamma = 2.0);
  static SourceModel gaussian_mixture(std::vector<double> weights, PointSet means,
                                      std::vector<double> stds, double truncation_radius,
                                      double holder_gamma = 2.0);

  SourceKind kind() const { return kind_; }
  int dim() const { return dim_; }

  /// Radius M of the ball carrying all mass.
  double truncation_radius() const { return M_; }

  /// Smoothness exponent asserted for bandwidth rules; never inferred.
  double holder_gamma() const { return gamma_; }

  double density(const double* x) const;
  std::vector<double> density_on_grid(const QuadratureGrid& grid) const;

  /// Axis-aligned box containing the support.
  Box bounding_box() const;

  // Mixture internals (normalized weights); ParameterError for uniform sources.
  const std::vector<double>& mixture_weights() const;
  const PointSet& mixture_means() const;
  const std::vector<double>& mixture_stds() const;

  /// n i.i.d. draws; mixtures sample by rejection against the ball and fail
  /// with ConfigError when the acceptance rate collapses below 1%.
  PointSet sample(size_t n, uint64_t seed) const;

private:
  SourceModel() = default;
  SourceKind kind_ = SourceKind::uniform_box;
  int dim_ = 1;
  double M_ = 1.0;
  double gamma_ = 2.0;
  Box box_;  // uniform support
  std::vector<double> weights_, stds_;
  PointSet means_;
  double norm_ = 1.0;  // mixture mass inside the ball
};

/// Z = X + eps with independent noise draws; identity noise returns X as is.
PointSet contaminate(const PointSet& clean, const NoiseModel& noise, uint64_t seed);

/// gamma / (gamma + 2 beta_bar), the excess-risk decay exponent the
/// bandwidth rule below targets.
double rate_exponent(double gamma, double beta_bar);

/// c0 * n^(-1 / (gamma + 2 beta_bar)).
double theoretical_bandwidth(size_t n, double gamma, double beta_bar, double c0 = 1.0);

// ---------------------------------------------------------------------------
// Cross-validated bandwidth

struct CvContext {
  BaseKernel kernel;
  NoiseModel noise;
  QuadratureGrid grid;
  Box sample_box;
  InversionOptions inversion;
  int offset_refine = 2;
  int k = 2;
  int restarts = 4;
  LloydOptions lloyd;
};

/// K-fold cross-validation over candidate bandwidths: fit on the training
/// folds, score by average held-out deconvolved loss at the same bandwidth.
/// Candidates that error out are skipped; ties resolve to the smaller
/// bandwidth; if every candidate fails, NumericalError.
double cv_bandwidth(const PointSet& sample, std::span<const double> candidates,
                    int folds, uint64_t seed, const CvContext& ctx);

// ---------------------------------------------------------------------------
// Smoothing-bias experiment (noise-free channel, d = 1)

struct BiasExperimentConfig {
  SourceModel source;
  BaseKernel kernel;
  InversionOptions inversion;
  int grid_nodes = 256;
  double margin_bandwidths = 3.0;  // grid margin, in units of the largest bandwidth
  int offset_refine = 8;           // inner lattice refinement for the smoothed density
  std::vector<double> lambdas;
  Codebook codebook_a, codebook_b;
};

struct BiasResult {
  std::vector<double> lambdas;
  std::vector<double> biases;  // |(R - R_lambda)(a) - (R - R_lambda)(b)|
  double slope = 0.0;          // log bias vs log lambda
};

/// Isolates the kernel-smoothing bias: compares the loss-difference
/// functional under the true density against the same functional under the
/// true density convolved with the bandwidth-lambda kernel. Bias below 1e-12
/// at the largest bandwidth leaves no slope to fit and raises ConfigError.
BiasResult run_bias_experiment(const BiasExperimentConfig& config);

std::string bias_rows_csv(const BiasResult& result);

// ---------------------------------------------------------------------------
// Monte Carlo rate experiment

struct RateExperimentConfig {
  SourceModel source;
  NoiseModel noise;
  BaseKernel kernel;
  InversionOptions inversion;
  int offset_refine = 2;
  int grid_nodes = 256;            // per axis, experiment grid
  double margin_bandwidths = 3.0;  // grid margin in units of the largest bandwidth
  double sample_margin_sigmas = 40.0;
  int k = 2;
  std::vector<size_t> n_schedule;
  int replications = 10;
  int restarts = 8;
  double c0 = 1.0;             // bandwidth calibration constant
  int ref_grid_factor = 2;     // reference grid resolution multiplier
  int ref_restart_factor = 8;  // restart multiplier for the reference optimum
  double hessian_step = 1e-4;
  LloydOptions lloyd;
  uint64_t master_seed = 1;
  int threads = 1;
};

struct RateRow {
  size_t n = 0;
  int rep = 0;
  double excess_deconv = 0.0;
  double excess_naive = 0.0;
  double lambda = 0.0;
  uint64_t seed = 0;
};

struct RateFit {
  std::vector<double> mean_excess;
  std::vector<double> std_error;
  double slope = 0.0;
  double slope_stderr = 0.0;
};

struct RateResult {
  std::vector<size_t> sample_sizes;
  std::vector<double> lambdas;  // per sample size
  std::vector<RateRow> rows;    // schedule-major, replication-minor
  RateFit deconv;
  RateFit naive;
  double theoretical_exponent = 0.0;
  Codebook cstar;
  double cstar_risk = 0.0;
  int distinct_optima = 1;
  double hessian_min_eig = 0.0;
};

/// Paired deconvolution-vs-naive excess-risk study over the sample-size
/// schedule, with the bandwidth rule lambda(n) = c0 * n^(-1/(gamma+2*beta_bar)).
/// Bit-reproducible for a fixed (config, master_seed) regardless of threads.
/// A failing replication aborts with its seed quoted for replay.
RateResult run_rate_experiment(const RateExperimentConfig& config);

std::string rate_rows_csv(const RateResult& result);

}  // namespace declust

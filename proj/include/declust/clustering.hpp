#pragma once

#include <span>

#include "declust/codebook.hpp"
#include "declust/deconv_risk.hpp"
#include "declust/grid.hpp"

namespace declust {

struct LloydOptions {
  int max_iters = 200;
  double tol = 1e-7;             // max center displacement at which to stop
  double mass_floor_rel = 1e-10; // degenerate-cell threshold, relative to total positive mass
};

struct LloydReport {
  Codebook codebook;
  double final_risk = 0.0;
  int iterations = 0;
  bool converged = false;
  int restarts_used = 1;
  int reseed_events = 0;
  // Risk before the first update and after each one; non-increasing as long
  // as every cell keeps positive mass.
  std::vector<double> risk_trace;
};

/// Lloyd iteration on a signed density sampled over the grid. Nodes join
/// their nearest center (ties to the lowest center index); centers move to
/// the signed weighted mean of their cell and are clamped into the grid box.
/// A cell whose signed mass falls to the floor is reseeded onto the
/// worst-fit positive-density node. The returned codebook is sorted
/// canonically and its risk is recomputed independently of the iteration.
LloydReport weighted_lloyd(const QuadratureGrid& grid, std::span<const double> density,
                           int k, const Codebook& init, const LloydOptions& opts = {});

/// Best of `restarts` weighted-sampling initializations (proportional to the
/// positive part of the density) plus one spread initialization that picks
/// successive seeds far from the ones already chosen. Deterministic for a
/// fixed seed. The winner's report is returned with restarts_used set to the
/// total number of runs.
LloydReport multi_start_minimize(const QuadratureGrid& grid, std::span<const double> density,
                                 int k, int restarts, uint64_t seed,
                                 const LloydOptions& opts = {});

/// Classical k-means on the raw observations with the same multi-start
/// scheme; the baseline that ignores contamination.
Codebook naive_kmeans(const PointSet& sample, int k, int restarts, uint64_t seed,
                      const LloydOptions& opts = {});

struct OptimalCodebook {
  Codebook codebook;
  double risk = 0.0;
  /// Number of distinct near-optimal codebooks seen across restarts (1 when
  /// the minimizer is unique up to center relabeling).
  int distinct_optima = 1;
};

/// Reference minimizer against the true density with an intensive restart
/// budget; the anchor for excess-risk computations.
OptimalCodebook optimal_codebook(const QuadratureGrid& grid, std::span<const double> true_density,
                                 int k, int restarts, uint64_t seed,
                                 const LloydOptions& opts = {});

/// risk_against_density(c) - cstar_risk. Slightly negative values within
/// quadrature/optimization tolerance pass through; below -1e-6 the reference
/// risk cannot have been optimal and OracleError is raised.
double excess_risk(const Codebook& codebook, double cstar_risk,
                   const QuadratureGrid& grid, std::span<const double> true_density);

/// Smallest eigenvalue of the central-difference Hessian of the risk at
/// cstar (step per coordinate). Positive definite curvature separates
/// well-posed configurations from degenerate ones.
double pollard_hessian_min_eig(const QuadratureGrid& grid, std::span<const double> true_density,
                               const Codebook& cstar, double step);

}  // namespace declust

// Acceptance gate: one line per criterion, nonzero exit when any fails.
#include <cmath>
#include <complex>
#include <cstdio>
#include <string>
#include <vector>

#include "declust/clustering.hpp"
#include "declust/config.hpp"
#include "declust/deconv_risk.hpp"
#include "declust/experiments.hpp"

using namespace declust;

namespace {

bool g_all_ok = true;

void report(const char* id, const char* name, bool ok, const std::string& detail = "") {
  std::printf("%s %s: %s%s%s%s\n", id, name, ok ? "PASS" : "FAIL",
              detail.empty() ? "" : " (", detail.c_str(), detail.empty() ? "" : ")");
  if (!ok) g_all_ok = false;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

PointSet means_1d(std::initializer_list<double> values) {
  PointSet ps(1);
  for (double v : values) ps.append(&v);
  return ps;
}

// The pinned rate study: well-separated truncated Gaussians observed through
// Laplace noise, theoretical bandwidth rule with calibration 0.4.
RateExperimentConfig pinned_rate_config() {
  RateExperimentConfig cfg{
      SourceModel::gaussian_mixture({0.5, 0.5}, means_1d({-1.0, 1.0}), {0.25, 0.25}, 2.5),
      NoiseModel::laplace(1, 0.3),
      make_base_kernel(KernelKind::flat_top, 0.5)};
  cfg.grid_nodes = 256;
  cfg.n_schedule = {250, 500, 1000, 2000, 4000, 8000};
  cfg.replications = 100;
  cfg.restarts = 8;
  cfg.c0 = 0.4;
  cfg.master_seed = 1;
  cfg.threads = 1;
  return cfg;
}

BiasExperimentConfig pinned_bias_config() {
  return BiasExperimentConfig{
      SourceModel::gaussian_mixture({0.5, 0.5}, means_1d({-1.0, 1.0}), {0.5, 0.5}, 2.5),
      make_base_kernel(KernelKind::flat_top, 0.5),
      {},
      256,
      3.0,
      8,
      {0.4, 0.2, 0.1},
      Codebook::from_flat(1, {-1.0, 1.0}),
      Codebook::from_flat(1, {-0.9, 1.1})};
}

void criterion_a1() {
  double sup = 0.0;
  for (KernelKind kind : {KernelKind::sinc, KernelKind::flat_top}) {
    const BaseKernel kernel = make_base_kernel(kind, 0.5);
    for (double lambda : {0.3, 1.0}) {
      const AxisTable base = sample_base_kernel(kernel, lambda, 0.01, 5.0);
      const auto unit_cf = [](double) { return std::complex<double>(1.0, 0.0); };
      const AxisTable ident = deconv_kernel_axis(kernel, unit_cf, lambda, 0.01, 5.0);
      for (size_t i = 0; i < base.values.size(); ++i)
        sup = std::max(sup, std::abs(base.values[i] - ident.values[i]));

      const QuadratureGrid grid = QuadratureGrid::make(Box{{-2.0}, {2.0}}, {96});
      const NoiseModel identity = NoiseModel::identity(1);
      const Box sbox = default_sample_box(grid, identity, 40.0);
      const std::vector<double> lam{lambda};
      const DeconvKernelTable table = build_kernel_table(kernel, identity, lam, grid, sbox);
      const AxisTable& axis = table.axes[0];
      const AxisTable resampled =
          sample_base_kernel(kernel, lambda, axis.offset_step, axis.truncation_radius());
      for (size_t i = 0; i < axis.values.size(); ++i)
        sup = std::max(sup, std::abs(axis.values[i] - resampled.values[i]));
    }
  }
  report("A1", "identity-noise reduction", sup < 1e-10, "sup " + fmt(sup));
}

void criterion_a2() {
  Rng rng(7);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const int d = (i % 5 == 4) ? 2 : 1;
    const size_t n = 20 + static_cast<size_t>(rng.next() % 481);
    std::vector<double> lo(static_cast<size_t>(d)), hi(static_cast<size_t>(d));
    std::vector<int> nodes(static_cast<size_t>(d));
    for (int j = 0; j < d; ++j) {
      lo[static_cast<size_t>(j)] = -1.0 - rng.uniform01();
      hi[static_cast<size_t>(j)] = 1.0 + rng.uniform01();
      nodes[static_cast<size_t>(j)] =
          static_cast<int>(d == 1 ? 48 + rng.next() % 81 : 16 + rng.next() % 17);
    }
    const QuadratureGrid grid = QuadratureGrid::make(Box{lo, hi}, nodes);
    const NoiseModel noise = (i % 2 == 0) ? NoiseModel::identity(d)
                                          : NoiseModel::laplace(d, rng.uniform(0.1, 0.4));
    const Box sbox = default_sample_box(grid, noise, 10.0);
    const std::vector<double> lambdas(static_cast<size_t>(d), rng.uniform(0.15, 0.5));
    const BaseKernel kernel =
        make_base_kernel(i % 3 == 0 ? KernelKind::sinc : KernelKind::flat_top, 0.5);
    const DeconvKernelTable table = build_kernel_table(kernel, noise, lambdas, grid, sbox);

    PointSet pts(d);
    double p[2];
    for (size_t s = 0; s < n; ++s) {
      for (int j = 0; j < d; ++j)
        p[j] = rng.uniform(lo[static_cast<size_t>(j)], hi[static_cast<size_t>(j)]);
      pts.append(p);
    }
    std::vector<double> flat;
    for (int c = 0; c < 2; ++c)
      for (int j = 0; j < d; ++j)
        flat.push_back(rng.uniform(lo[static_cast<size_t>(j)], hi[static_cast<size_t>(j)]));
    const Codebook codebook = Codebook::from_flat(d, flat);

    const double direct = empirical_risk(codebook, pts, table, grid);
    const DeconvDensity density = deconv_density(pts, table, grid);
    const double via_density = risk_against_density(codebook, grid, density.values);
    worst = std::max(worst, std::abs(direct - via_density) / (1.0 + std::abs(direct)));
  }
  report("A2", "risk-density exchange", worst < 1e-9, "worst rel " + fmt(worst));
}

void criterion_a3() {
  bool ok = true;
  double worst_gap = 0.0;
  for (int i = 0; i < 10; ++i) {
    const uint64_t seed = 100 + static_cast<uint64_t>(i);
    Rng rng(seed);
    const double width = 1.0 + rng.uniform01();
    const QuadratureGrid grid = QuadratureGrid::make(Box{{0.0}, {width}}, {32});
    const NoiseModel noise = NoiseModel::laplace(1, 0.2);
    const Box sbox = default_sample_box(grid, noise, 40.0);
    const std::vector<double> lambdas{0.3};
    const DeconvKernelTable table =
        build_kernel_table(make_base_kernel(KernelKind::flat_top, 0.5), noise, lambdas, grid, sbox);
    PointSet pts(1);
    for (int s = 0; s < 100; ++s) {
      const double x = rng.uniform(0.0, width);
      pts.append(&x);
    }
    const DeconvDensity density = deconv_density(pts, table, grid);
    const LloydReport found = multi_start_minimize(grid, density.values, 2, 8, seed);

    double oracle = std::numeric_limits<double>::infinity();
    for (size_t a = 0; a < grid.node_count(); ++a)
      for (size_t b = a; b < grid.node_count(); ++b) {
        const Codebook pair = Codebook::from_flat(1, {grid.node(a)[0], grid.node(b)[0]});
        oracle = std::min(oracle, risk_against_density(pair, grid, density.values));
      }
    worst_gap = std::max(worst_gap, found.final_risk - oracle);
    if (!(found.final_risk <= oracle + 1e-3)) ok = false;
  }
  report("A3", "exhaustive-oracle equivalence", ok, "worst gap " + fmt(worst_gap));
}

void criterion_a4() {
  const QuadratureGrid grid = QuadratureGrid::make(Box{{0.0}, {1.0}}, {512});
  const std::vector<double> uniform(grid.node_count(), 1.0);
  const LloydReport report_run = multi_start_minimize(grid, uniform, 2, 8, 3);
  const double c0 = report_run.codebook.at(0, 0);
  const double c1 = report_run.codebook.at(1, 0);
  const bool ok = std::abs(c0 - 0.25) < 0.01 && std::abs(c1 - 0.75) < 0.01 &&
                  std::abs(report_run.final_risk - 1.0 / 48.0) < 1e-3;
  report("A4", "closed-form uniform optimum", ok,
         "centers " + fmt(c0) + ", " + fmt(c1) + "; risk " + fmt(report_run.final_risk));
}

void criterion_a5() {
  const BiasResult res = run_bias_experiment(pinned_bias_config());
  report("A5", "smoothing-bias slope", res.slope >= 1.8, "slope " + fmt(res.slope));
}

void criterion_a6() {
  const BaseKernel kernel = make_base_kernel(KernelKind::flat_top, 0.5);
  const double sigma = 0.5;
  const auto laplace_cf = [sigma](double t) {
    return std::complex<double>(1.0 / (1.0 + sigma * sigma * t * t), 0.0);
  };
  std::vector<double> log_inv_lambda, log_max;
  for (double lambda : {0.4, 0.2, 0.1, 0.05}) {
    const AxisTable table =
        deconv_kernel_axis(kernel, laplace_cf, lambda, lambda / 100.0, 30.0 * lambda);
    log_inv_lambda.push_back(std::log(1.0 / lambda));
    log_max.push_back(std::log(table.max_abs()));
  }
  const LineFit fit = fit_line(log_inv_lambda, log_max);
  report("A6", "kernel sup-norm growth", fit.slope >= 2.15 && fit.slope <= 2.85,
         "slope " + fmt(fit.slope));
}

void criterion_a7() {
  const double fitted = beta_decay_check(NoiseModel::laplace(1, 0.3), 0);
  report("A7", "noise cf decay", std::abs(fitted - (-2.0)) < 0.05, "fitted " + fmt(fitted));
}

void criteria_a8_a9_a10() {
  const RateExperimentConfig cfg = pinned_rate_config();
  const RateResult res = run_rate_experiment(cfg);

  const double slope = res.deconv.slope;
  const double first = res.deconv.mean_excess.front();
  const double last = res.deconv.mean_excess.back();
  const bool a8_ok = slope < 0.0 && slope >= -1.0 && slope <= -0.15 && first >= 2.0 * last;
  report("A8", "excess-risk rate", a8_ok,
         "fitted " + fmt(slope) + ", theoretical " + fmt(-res.theoretical_exponent) +
             ", drop x" + fmt(first / last));

  int wins = 0, ties = 0;
  for (const RateRow& row : res.rows) {
    if (row.n != res.sample_sizes.back()) continue;
    if (row.excess_deconv < row.excess_naive)
      ++wins;
    else if (row.excess_deconv == row.excess_naive)
      ++ties;
  }
  const int decisive = cfg.replications - ties;
  const double p = binomial_tail_pvalue(decisive, wins);
  const bool a9_ok =
      res.deconv.mean_excess.back() < res.naive.mean_excess.back() && p < 0.05;
  report("A9", "deconvolution beats naive", a9_ok,
         "wins " + std::to_string(wins) + "/" + std::to_string(decisive) + ", p " + fmt(p));

  RateExperimentConfig threaded = cfg;
  threaded.threads = 3;
  const RateResult rerun = run_rate_experiment(threaded);
  const bool rate_stable = rate_rows_csv(res) == rate_rows_csv(rerun);
  const bool bias_stable =
      bias_rows_csv(run_bias_experiment(pinned_bias_config())) ==
      bias_rows_csv(run_bias_experiment(pinned_bias_config()));
  report("A10", "byte-identical reruns", rate_stable && bias_stable,
         rate_stable ? (bias_stable ? "rate and bias outputs match" : "bias output drifted")
                     : "rate output drifted");
}

}  // namespace

int main() {
  criterion_a1();
  criterion_a2();
  criterion_a3();
  criterion_a4();
  criterion_a5();
  criterion_a6();
  criterion_a7();
  criteria_a8_a9_a10();
  std::printf(g_all_ok ? "all criteria passed\n" : "criteria failed\n");
  return g_all_ok ? 0 : 1;
}

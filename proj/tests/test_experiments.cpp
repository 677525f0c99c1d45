#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "declust/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"

using namespace declust;

namespace {

PointSet means_1d(std::initializer_list<double> values) {
  PointSet ps(1);
  for (double v : values) ps.append(&v);
  return ps;
}

SourceModel standard_mixture(double std_dev) {
  return SourceModel::gaussian_mixture({0.5, 0.5}, means_1d({-1.0, 1.0}),
                                       {std_dev, std_dev}, 2.5);
}

}  // namespace

TEST_CASE("uniform sources sample inside the box with the right mean") {
  SourceModel src = SourceModel::uniform(Box{{0.0}, {1.0}});
  CHECK(src.kind() == SourceKind::uniform_box);
  CHECK(src.dim() == 1);
  CHECK(src.truncation_radius() == doctest::Approx(1.0));
  CHECK(src.holder_gamma() == 2.0);

  PointSet pts = src.sample(100000, 5);
  double mean = 0.0;
  for (size_t i = 0; i < pts.size(); ++i) {
    const double x = pts.at(i, 0);
    CHECK(x >= 0.0);
    CHECK(x <= 1.0);
    mean += x;
  }
  mean /= static_cast<double>(pts.size());
  CHECK(std::abs(mean - 0.5) < 0.005);

  const double inside = 0.5;
  const double outside = 1.5;
  CHECK(src.density(&inside) == doctest::Approx(1.0));
  CHECK(src.density(&outside) == 0.0);

  PointSet again = src.sample(100, 5);
  PointSet first_hundred = src.sample(100, 5);
  CHECK(again.coords == first_hundred.coords);
  CHECK_THROWS_AS(src.mixture_weights(), ParameterError);
}

TEST_CASE("mixture sources live inside the truncation ball") {
  SourceModel src = standard_mixture(0.25);
  CHECK(src.kind() == SourceKind::gaussian_mixture);
  CHECK(src.truncation_radius() == 2.5);
  CHECK(src.mixture_weights() == std::vector<double>{0.5, 0.5});
  CHECK(src.mixture_stds() == std::vector<double>{0.25, 0.25});

  PointSet pts = src.sample(20000, 9);
  for (size_t i = 0; i < pts.size(); ++i)
    CHECK(std::abs(pts.at(i, 0)) <= 2.5);

  const QuadratureGrid grid = QuadratureGrid::make(Box{{-2.5}, {2.5}}, {1024});
  const std::vector<double> dens = src.density_on_grid(grid);
  double mass = 0.0;
  for (double v : dens) mass += v;
  mass *= grid.node_weight();
  CHECK(std::abs(mass - 1.0) < 1e-3);

  const double beyond = 2.6;
  CHECK(src.density(&beyond) == 0.0);

  // Unnormalized weights are accepted and normalized.
  SourceModel scaled = SourceModel::gaussian_mixture({2.0, 2.0}, means_1d({-1.0, 1.0}),
                                                     {0.25, 0.25}, 2.5);
  CHECK(scaled.mixture_weights() == std::vector<double>{0.5, 0.5});
}

TEST_CASE("two-dimensional mixtures normalize on the ball") {
  PointSet means(2);
  const double m0[2] = {-1.0, 0.0};
  const double m1[2] = {1.0, 0.0};
  means.append(m0);
  means.append(m1);
  SourceModel src = SourceModel::gaussian_mixture({0.5, 0.5}, means, {0.3, 0.3}, 2.0);
  CHECK(src.dim() == 2);

  PointSet pts = src.sample(5000, 33);
  for (size_t i = 0; i < pts.size(); ++i) {
    const double r2 = pts.at(i, 0) * pts.at(i, 0) + pts.at(i, 1) * pts.at(i, 1);
    CHECK(r2 <= 4.0 + 1e-12);
  }

  const QuadratureGrid grid =
      QuadratureGrid::make(Box{{-2.0, -2.0}, {2.0, 2.0}}, {128, 128});
  const std::vector<double> dens = src.density_on_grid(grid);
  double mass = 0.0;
  for (double v : dens) mass += v;
  mass *= grid.node_weight();
  CHECK(std::abs(mass - 1.0) < 2e-3);
}

TEST_CASE("degenerate mixtures are rejected") {
  // No mass inside the ball at all: construction fails.
  CHECK_THROWS_AS(SourceModel::gaussian_mixture({1.0}, means_1d({10.0}), {0.25}, 0.1),
                  ConfigError);
  // A sliver of mass loads, but rejection sampling cannot keep up.
  SourceModel sliver =
      SourceModel::gaussian_mixture({1.0}, means_1d({0.8}), {0.25}, 0.1);
  CHECK_THROWS_AS(sliver.sample(100, 3), ConfigError);
}

TEST_CASE("contamination adds independent noise") {
  SourceModel src = SourceModel::uniform(Box{{0.0}, {1.0}});
  PointSet clean = src.sample(100000, 21);

  PointSet ident = contaminate(clean, NoiseModel::identity(1), 99);
  CHECK(ident.coords == clean.coords);

  const double sigma = 0.4;
  PointSet noisy = contaminate(clean, NoiseModel::laplace(1, sigma), 99);
  double mean = 0.0;
  double var = 0.0;
  for (size_t i = 0; i < clean.size(); ++i) {
    const double e = noisy.at(i, 0) - clean.at(i, 0);
    mean += e;
    var += e * e;
  }
  mean /= static_cast<double>(clean.size());
  var = var / static_cast<double>(clean.size()) - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(var == doctest::Approx(2.0 * sigma * sigma).epsilon(0.05));

  PointSet replay = contaminate(clean, NoiseModel::laplace(1, sigma), 99);
  CHECK(replay.coords == noisy.coords);
}

TEST_CASE("bandwidth rule and rate exponent") {
  CHECK(theoretical_bandwidth(1024, 2.0, 2.0) ==
        doctest::Approx(0.314980262473718).epsilon(1e-12));
  CHECK(theoretical_bandwidth(10000, 2.0, 0.0) == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(theoretical_bandwidth(1024, 2.0, 2.0, 2.0) ==
        doctest::Approx(2.0 * 0.314980262473718).epsilon(1e-12));
  CHECK(rate_exponent(2.0, 2.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(rate_exponent(2.0, 0.0) == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(theoretical_bandwidth(0, 2.0, 2.0), ParameterError);
  CHECK_THROWS_AS(theoretical_bandwidth(100, 0.0, 2.0), ParameterError);
  CHECK_THROWS_AS(theoretical_bandwidth(100, 2.0, -1.0), ParameterError);
  CHECK_THROWS_AS(rate_exponent(-2.0, 2.0), ParameterError);
}

TEST_CASE("cross-validation picks a usable bandwidth") {
  SourceModel src = SourceModel::uniform(Box{{0.0}, {1.0}});
  const NoiseModel noise = NoiseModel::laplace(1, 0.2);
  PointSet obs = contaminate(src.sample(60, 17), noise, 18);

  const QuadratureGrid grid = QuadratureGrid::make(Box{{-1.05}, {2.05}}, {128});
  CvContext ctx{make_base_kernel(KernelKind::flat_top, 0.5),
                noise,
                grid,
                default_sample_box(grid, noise, 40.0),
                {},
                2,
                2,
                4,
                {}};

  // The tiny candidate is ill-posed for laplace noise and must be skipped.
  const std::vector<double> cands{1e-7, 0.3};
  CHECK(cv_bandwidth(obs, cands, 5, 7, ctx) == 0.3);

  const std::vector<double> pair{0.2, 0.35};
  const double picked = cv_bandwidth(obs, pair, 5, 7, ctx);
  CHECK((picked == 0.2 || picked == 0.35));
  CHECK(cv_bandwidth(obs, pair, 5, 7, ctx) == picked);

  const std::vector<double> hopeless{1e-7, 1e-8};
  CHECK_THROWS_AS(cv_bandwidth(obs, hopeless, 5, 7, ctx), NumericalError);

  CHECK_THROWS_AS(cv_bandwidth(obs, pair, 1, 7, ctx), ParameterError);
  PointSet tiny(1);
  const double x = 0.5;
  tiny.append(&x);
  tiny.append(&x);
  CHECK_THROWS_AS(cv_bandwidth(tiny, pair, 5, 7, ctx), ParameterError);
}

TEST_CASE("smoothing bias decays fast for smooth mixtures") {
  BiasExperimentConfig cfg{standard_mixture(0.5),
                           make_base_kernel(KernelKind::flat_top, 0.5),
                           {},
                           256,
                           3.0,
                           8,
                           {0.4, 0.2, 0.1},
                           Codebook::from_flat(1, {-1.0, 1.0}),
                           Codebook::from_flat(1, {-0.9, 1.1})};
  const BiasResult res = run_bias_experiment(cfg);
  REQUIRE(res.biases.size() == 3);
  CHECK(res.biases[0] > res.biases[1]);
  CHECK(res.biases[1] > res.biases[2]);
  CHECK(res.slope >= 1.8);

  // Once the grid resolves the smallest bandwidth, doubling it again barely
  // moves the fitted slope.
  BiasExperimentConfig fine = cfg;
  fine.grid_nodes = 512;
  const BiasResult res2 = run_bias_experiment(fine);
  BiasExperimentConfig finer = cfg;
  finer.grid_nodes = 1024;
  const BiasResult res3 = run_bias_experiment(finer);
  CHECK(std::abs(res3.slope - res2.slope) < 0.05);

  const std::string csv = bias_rows_csv(res);
  CHECK(csv.find("lambda,bias") == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);

  // Identical codebooks leave nothing to compare.
  BiasExperimentConfig same = cfg;
  same.codebook_b = same.codebook_a;
  CHECK_THROWS_AS(run_bias_experiment(same), ConfigError);
}

TEST_CASE("rate experiment on a clean channel shrinks with sample size") {
  RateExperimentConfig cfg{SourceModel::uniform(Box{{0.0}, {1.0}}),
                           NoiseModel::identity(1),
                           make_base_kernel(KernelKind::flat_top, 0.5)};
  cfg.grid_nodes = 64;
  cfg.n_schedule = {200, 400, 800};
  cfg.replications = 3;
  cfg.restarts = 3;
  cfg.master_seed = 11;

  const RateResult res = run_rate_experiment(cfg);
  CHECK(res.sample_sizes == std::vector<size_t>{200, 400, 800});
  REQUIRE(res.rows.size() == 9);
  CHECK(res.rows[0].n == 200);
  CHECK(res.rows[3].n == 400);
  CHECK(res.rows[3].rep == 0);
  CHECK(res.rows[8].n == 800);

  // Identity noise: beta_bar = 0, lambda(n) = n^(-1/2), exponent 1.
  CHECK(res.theoretical_exponent == doctest::Approx(1.0));
  CHECK(res.lambdas[0] == doctest::Approx(std::pow(200.0, -0.5)));

  CHECK(std::abs(res.cstar.at(0, 0) - 0.25) < 0.01);
  CHECK(std::abs(res.cstar.at(1, 0) - 0.75) < 0.01);
  CHECK(std::abs(res.cstar_risk - 1.0 / 48.0) < 1e-3);
  CHECK(res.hessian_min_eig > 0.0);

  REQUIRE(res.deconv.mean_excess.size() == 3);
  for (double m : res.deconv.mean_excess) CHECK(m > 0.0);
  CHECK(res.deconv.mean_excess.back() < res.deconv.mean_excess.front());

  const std::string csv = rate_rows_csv(res);
  CHECK(csv.find("n,rep,excess_deconv,excess_naive,lambda,seed") == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 10);

  // Bitwise reproducibility, including across thread counts.
  const RateResult rerun = run_rate_experiment(cfg);
  CHECK(rate_rows_csv(rerun) == csv);
  RateExperimentConfig threaded = cfg;
  threaded.threads = 4;
  const RateResult parallel = run_rate_experiment(threaded);
  CHECK(rate_rows_csv(parallel) == csv);
  CHECK(parallel.deconv.slope == res.deconv.slope);
}

TEST_CASE("a replication failure quotes its seed") {
  RateExperimentConfig cfg{SourceModel::uniform(Box{{0.0}, {1.0}}),
                           NoiseModel::laplace(1, 1.0),
                           make_base_kernel(KernelKind::flat_top, 0.5)};
  cfg.grid_nodes = 48;
  cfg.n_schedule = {50};
  cfg.replications = 2;
  cfg.restarts = 2;
  cfg.sample_margin_sigmas = 0.1;
  cfg.master_seed = 3;
  CHECK_THROWS_WITH_AS(run_rate_experiment(cfg), doctest::Contains("seed"),
                       CoverageError);
}

TEST_CASE("experiment configuration validation") {
  RateExperimentConfig cfg{SourceModel::uniform(Box{{0.0}, {1.0}}),
                           NoiseModel::identity(1),
                           make_base_kernel(KernelKind::flat_top, 0.5)};
  cfg.n_schedule = {};
  CHECK_THROWS_AS(run_rate_experiment(cfg), ParameterError);
  cfg.n_schedule = {100};
  cfg.k = 0;
  CHECK_THROWS_AS(run_rate_experiment(cfg), ParameterError);
  cfg.k = 2;
  cfg.replications = 0;
  CHECK_THROWS_AS(run_rate_experiment(cfg), ParameterError);

  BiasExperimentConfig bias{standard_mixture(0.5),
                            make_base_kernel(KernelKind::flat_top, 0.5),
                            {},
                            256,
                            3.0,
                            8,
                            {0.4},
                            Codebook::from_flat(1, {-1.0, 1.0}),
                            Codebook::from_flat(1, {-0.9, 1.1})};
  CHECK_THROWS_AS(run_bias_experiment(bias), ParameterError);
}

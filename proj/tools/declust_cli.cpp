#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "declust/config.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw declust::ConfigError("cannot open for writing: " + path.string());
  out << content;
  out.flush();
  if (!out) throw declust::ConfigError("failed while writing: " + path.string());
}

// One point per line, axis values whitespace-separated, blank lines ignored.
declust::PointSet load_sample_file(const std::string& path, int dim) {
  std::ifstream in(path);
  if (!in) throw declust::ConfigError("cannot read sample file: " + path);
  declust::PointSet points(dim);
  std::string line;
  size_t line_no = 0;
  double p[2] = {0.0, 0.0};
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream row(line);
    int axis = 0;
    double value = 0.0;
    while (row >> value) {
      if (axis >= dim)
        throw declust::ConfigError(path + ":" + std::to_string(line_no) +
                                   ": too many coordinates for dimension " + std::to_string(dim));
      p[axis++] = value;
    }
    if (!row.eof())
      throw declust::ConfigError(path + ":" + std::to_string(line_no) + ": malformed number");
    if (axis == 0) continue;
    if (axis != dim)
      throw declust::ConfigError(path + ":" + std::to_string(line_no) + ": expected " +
                                 std::to_string(dim) + " coordinates");
    points.append(p);
  }
  if (points.size() == 0) throw declust::ConfigError(path + ": no points found");
  return points;
}

ordered_json centers_json(const declust::Codebook& codebook) {
  ordered_json rows = ordered_json::array();
  for (int j = 0; j < codebook.k; ++j) {
    ordered_json row = ordered_json::array();
    for (int axis = 0; axis < codebook.dim; ++axis) row.push_back(codebook.at(j, axis));
    rows.push_back(row);
  }
  return rows;
}

// Everything the per-sample commands share: the resolved bandwidths, the
// quadrature grid sized to them, the kernel table, and (when needed) the
// contaminated sample the bandwidth choice may have consumed.
struct Pipeline {
  std::vector<double> lambdas;
  declust::QuadratureGrid grid;
  declust::Box sample_box;
  declust::DeconvKernelTable table;
  declust::PointSet observed;
};

Pipeline prepare_pipeline(const declust::ResolvedConfig& cfg, uint64_t seed, bool need_sample) {
  const int dim = cfg.source.dim();
  declust::PointSet observed(dim);
  if (need_sample || cfg.rule == declust::BandwidthRuleKind::cv) {
    if (!cfg.sample_file.empty()) {
      observed = load_sample_file(cfg.sample_file, dim);
    } else {
      const declust::PointSet clean = cfg.source.sample(cfg.n, declust::derive_seed(seed, 10));
      observed = declust::contaminate(clean, cfg.noise, declust::derive_seed(seed, 11));
    }
  }
  const size_t effective_n = observed.size() > 0 ? observed.size() : cfg.n;

  const double gamma = cfg.source.holder_gamma();
  const double beta_bar = cfg.noise.beta_bar();
  std::vector<double> lambdas;
  if (cfg.rule == declust::BandwidthRuleKind::fixed) {
    lambdas = cfg.fixed_lambda;
  } else if (cfg.rule == declust::BandwidthRuleKind::theoretical) {
    lambdas.assign(static_cast<size_t>(dim),
                   declust::theoretical_bandwidth(effective_n, gamma, beta_bar, cfg.c0));
  } else {
    const double candidate_max =
        *std::max_element(cfg.cv_candidates.begin(), cfg.cv_candidates.end());
    const declust::Box cv_bounds =
        cfg.source.bounding_box().expanded(cfg.margin_bandwidths * candidate_max);
    const declust::QuadratureGrid cv_grid = declust::QuadratureGrid::make(cv_bounds, cfg.grid_nodes);
    const declust::CvContext context{cfg.kernel,
                                     cfg.noise,
                                     cv_grid,
                                     declust::default_sample_box(cv_grid, cfg.noise,
                                                                 cfg.sample_margin_sigmas),
                                     cfg.inversion,
                                     cfg.offset_refine,
                                     cfg.k,
                                     cfg.restarts,
                                     cfg.lloyd};
    const double chosen = declust::cv_bandwidth(observed, cfg.cv_candidates, cfg.cv_folds,
                                                declust::derive_seed(seed, 12), context);
    lambdas.assign(static_cast<size_t>(dim), chosen);
  }

  const double lambda_max = *std::max_element(lambdas.begin(), lambdas.end());
  const declust::Box bounds =
      cfg.source.bounding_box().expanded(cfg.margin_bandwidths * lambda_max);
  declust::QuadratureGrid grid = declust::QuadratureGrid::make(bounds, cfg.grid_nodes);
  declust::Box sample_box =
      declust::default_sample_box(grid, cfg.noise, cfg.sample_margin_sigmas);
  declust::DeconvKernelTable table = declust::build_kernel_table(
      cfg.kernel, cfg.noise, lambdas, grid, sample_box, cfg.inversion, cfg.offset_refine);
  return Pipeline{std::move(lambdas), std::move(grid), std::move(sample_box), std::move(table),
                  std::move(observed)};
}

void run_kernel_dump(const declust::ResolvedConfig& cfg, const fs::path& out, uint64_t seed) {
  const Pipeline pipe = prepare_pipeline(cfg, seed, /*need_sample=*/false);
  for (size_t axis = 0; axis < pipe.table.axes.size(); ++axis) {
    const declust::AxisTable& table = pipe.table.axes[axis];
    std::string csv = "offset,value\n";
    for (long m = -table.half; m <= table.half; ++m) {
      csv += declust::format_double(static_cast<double>(m) * table.offset_step) + "," +
             declust::format_double(table.value_at_index(m)) + "\n";
    }
    write_file(out / ("kernel_axis" + std::to_string(axis) + ".csv"), csv);
  }
  std::printf("wrote %zu kernel table(s) to %s\n", pipe.table.axes.size(), out.c_str());
}

void run_density(const declust::ResolvedConfig& cfg, const fs::path& out, uint64_t seed) {
  const Pipeline pipe = prepare_pipeline(cfg, seed, /*need_sample=*/true);
  const declust::DeconvDensity density =
      declust::deconv_density(pipe.observed, pipe.table, pipe.grid);
  const int dim = pipe.grid.dim();
  std::string csv = dim == 1 ? "x,density\n" : "x0,x1,density\n";
  for (size_t g = 0; g < pipe.grid.node_count(); ++g) {
    const double* node = pipe.grid.node(g);
    for (int j = 0; j < dim; ++j) csv += declust::format_double(node[j]) + ",";
    csv += declust::format_double(density.values[g]) + "\n";
  }
  write_file(out / "density.csv", csv);
  std::printf("wrote density.csv (%zu nodes, integral %.6f)\n", pipe.grid.node_count(),
              density.integral());
}

void run_cluster(const declust::ResolvedConfig& cfg, const fs::path& out, uint64_t seed) {
  const Pipeline pipe = prepare_pipeline(cfg, seed, /*need_sample=*/true);
  const declust::DeconvDensity density =
      declust::deconv_density(pipe.observed, pipe.table, pipe.grid);
  const declust::LloydReport report =
      declust::multi_start_minimize(pipe.grid, density.values, cfg.k, cfg.restarts,
                                    declust::derive_seed(seed, 13), cfg.lloyd);
  ordered_json doc;
  doc["n"] = pipe.observed.size();
  doc["lambda"] = pipe.lambdas;
  doc["centers"] = centers_json(report.codebook);
  doc["risk"] = report.final_risk;
  doc["iterations"] = report.iterations;
  doc["converged"] = report.converged;
  doc["reseed_events"] = report.reseed_events;
  doc["restarts_used"] = report.restarts_used;
  write_file(out / "cluster.json", doc.dump(2) + "\n");
  std::printf("wrote cluster.json (risk %.6g, %d iterations)\n", report.final_risk,
              report.iterations);
}

void run_rate_experiment(const declust::ResolvedConfig& cfg, const fs::path& out, uint64_t seed) {
  if (cfg.rule != declust::BandwidthRuleKind::theoretical)
    throw declust::ConfigError("rate-experiment requires bandwidth.rule = theoretical");
  declust::RateExperimentConfig experiment{cfg.source,
                                           cfg.noise,
                                           cfg.kernel,
                                           cfg.inversion,
                                           cfg.offset_refine,
                                           cfg.grid_nodes[0],
                                           cfg.margin_bandwidths,
                                           cfg.sample_margin_sigmas,
                                           cfg.k,
                                           cfg.n_schedule,
                                           cfg.replications,
                                           cfg.restarts,
                                           cfg.c0,
                                           cfg.ref_grid_factor,
                                           cfg.ref_restart_factor,
                                           1e-4,
                                           cfg.lloyd,
                                           seed,
                                           cfg.threads};
  const declust::RateResult result = declust::run_rate_experiment(experiment);
  write_file(out / "rate_rows.csv", declust::rate_rows_csv(result));

  ordered_json doc;
  doc["sample_sizes"] = result.sample_sizes;
  doc["lambdas"] = result.lambdas;
  doc["theoretical_exponent"] = result.theoretical_exponent;
  ordered_json deconv;
  deconv["mean_excess"] = result.deconv.mean_excess;
  deconv["std_error"] = result.deconv.std_error;
  deconv["slope"] = result.deconv.slope;
  deconv["slope_stderr"] = result.deconv.slope_stderr;
  doc["deconv"] = deconv;
  ordered_json naive;
  naive["mean_excess"] = result.naive.mean_excess;
  naive["std_error"] = result.naive.std_error;
  naive["slope"] = result.naive.slope;
  naive["slope_stderr"] = result.naive.slope_stderr;
  doc["naive"] = naive;
  doc["cstar"] = centers_json(result.cstar);
  doc["cstar_risk"] = result.cstar_risk;
  doc["distinct_optima"] = result.distinct_optima;
  doc["hessian_min_eig"] = result.hessian_min_eig;
  write_file(out / "rate_summary.json", doc.dump(2) + "\n");
  std::printf("wrote rate_rows.csv and rate_summary.json (deconv slope %.4f, theory %.4f)\n",
              result.deconv.slope, -result.theoretical_exponent);
}

void run_bias_experiment(const declust::ResolvedConfig& cfg, const fs::path& out) {
  if (cfg.bias_a.k < 1 || cfg.bias_b.k < 1)
    throw declust::ConfigError(
        "bias-experiment requires experiment.codebook_a and experiment.codebook_b");
  declust::BiasExperimentConfig experiment{cfg.source,     cfg.kernel,       cfg.inversion,
                                           cfg.grid_nodes[0], cfg.margin_bandwidths,
                                           cfg.offset_refine, cfg.bias_lambdas,
                                           cfg.bias_a,     cfg.bias_b};
  const declust::BiasResult result = declust::run_bias_experiment(experiment);
  write_file(out / "bias_rows.csv", declust::bias_rows_csv(result));
  ordered_json doc;
  doc["lambdas"] = result.lambdas;
  doc["biases"] = result.biases;
  doc["slope"] = result.slope;
  write_file(out / "bias_summary.json", doc.dump(2) + "\n");
  std::printf("wrote bias_rows.csv and bias_summary.json (slope %.4f)\n", result.slope);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deconvolution k-means on noise-contaminated samples"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  uint64_t seed = 1;
  int threads = 0;
  app.add_option("--config", config_path, "Path to the INI configuration file")->required();
  app.add_option("--out", out_dir, "Output directory (created if missing)")->required();
  app.add_option("--seed", seed, "Master seed for all randomized work");
  app.add_option("--threads", threads, "Worker threads (0 keeps the configured value)");

  CLI::App* cmd_kernel =
      app.add_subcommand("kernel-dump", "Write the deconvolution kernel tables as CSV");
  CLI::App* cmd_density =
      app.add_subcommand("density", "Estimate the deconvolved density on the grid");
  CLI::App* cmd_cluster =
      app.add_subcommand("cluster", "Minimize the deconvolved empirical risk");
  CLI::App* cmd_rate = app.add_subcommand("rate-experiment",
                                          "Monte Carlo excess-risk study over a sample-size schedule");
  CLI::App* cmd_bias =
      app.add_subcommand("bias-experiment", "Kernel smoothing bias versus bandwidth");
  for (CLI::App* sub : {cmd_kernel, cmd_density, cmd_cluster, cmd_rate, cmd_bias})
    sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const declust::ConfigFile file = declust::ConfigFile::parse_file(config_path);
    declust::ResolvedConfig cfg = declust::resolve_config(file);
    if (threads > 0) cfg.threads = threads;
    if (app.count("--seed") > 0) cfg.master_seed = seed;
    const uint64_t run_seed = cfg.master_seed;

    const fs::path out(out_dir);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw declust::ConfigError("cannot create output directory: " + out.string());
    write_file(out / "effective_config.ini", cfg.echo());

    if (cmd_kernel->parsed()) run_kernel_dump(cfg, out, run_seed);
    if (cmd_density->parsed()) run_density(cfg, out, run_seed);
    if (cmd_cluster->parsed()) run_cluster(cfg, out, run_seed);
    if (cmd_rate->parsed()) run_rate_experiment(cfg, out, run_seed);
    if (cmd_bias->parsed()) run_bias_experiment(cfg, out);
  } catch (const declust::OracleError& e) {
    std::fprintf(stderr, "oracle inconsistency: %s\n", e.what());
    return 4;
  } catch (const declust::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const declust::ParameterError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const declust::NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}

#include "declust/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>

namespace declust {

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_pdf(double x, double mean, double sd) {
  const double u = (x - mean) / sd;
  return std::exp(-0.5 * u * u) / (sd * std::sqrt(2.0 * kPi));
}

double squared_norm(const double* x, int dim) {
  double s = 0.0;
  for (int j = 0; j < dim; ++j) s += x[j] * x[j];
  return s;
}

[[noreturn]] void rethrow_with_context(const std::string& prefix) {
  try {
    throw;
  } catch (const CoverageError& e) {
    throw CoverageError(prefix + e.what());
  } catch (const OracleError& e) {
    throw OracleError(prefix + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(prefix + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(prefix + e.what());
  } catch (const ParameterError& e) {
    throw ParameterError(prefix + e.what());
  }
}

// Work-stealing loop over [0, count). Slot-indexed bodies keep results
// independent of the thread count; the first failure wins and the rest of
// the pool drains without starting new work.
void parallel_run(size_t count, int threads, const std::function<void(size_t)>& body) {
  if (threads <= 1 || count <= 1) {
    for (size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= count || failed.load()) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true);
        return;
      }
    }
  };
  const size_t pool_size = std::min<size_t>(static_cast<size_t>(threads), count);
  std::vector<std::thread> pool;
  pool.reserve(pool_size);
  for (size_t t = 0; t < pool_size; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace

// ---------------------------------------------------------------------------
// SourceModel

SourceModel SourceModel::uniform(const Box& bounds, double holder_gamma) {
  bounds.validate();
  if (!(holder_gamma > 0.0)) throw ParameterError("holder_gamma must be positive");
  SourceModel m;
  m.kind_ = SourceKind::uniform_box;
  m.dim_ = bounds.dim();
  m.gamma_ = holder_gamma;
  m.box_ = bounds;
  double radius2 = 0.0;
  if (m.dim_ == 1) {
    radius2 = std::max(bounds.lo[0] * bounds.lo[0], bounds.hi[0] * bounds.hi[0]);
  } else {
    for (double x : {bounds.lo[0], bounds.hi[0]})
      for (double y : {bounds.lo[1], bounds.hi[1]}) radius2 = std::max(radius2, x * x + y * y);
  }
  m.M_ = std::sqrt(radius2);
  return m;
}

SourceModel SourceModel::gaussian_mixture(std::vector<double> weights, PointSet means,
                                          std::vector<double> stds, double truncation_radius,
                                          double holder_gamma) {
  const size_t count = weights.size();
  if (count == 0) throw ParameterError("mixture needs at least one component");
  if (means.size() != count || stds.size() != count)
    throw ParameterError("mixture weights, means and stds must have matching lengths");
  if (means.dim < 1 || means.dim > 2) throw ParameterError("mixture supports dim 1 or 2");
  if (!(truncation_radius > 0.0)) throw ParameterError("truncation_radius must be positive");
  if (!(holder_gamma > 0.0)) throw ParameterError("holder_gamma must be positive");
  double weight_sum = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw ParameterError("mixture weights must be positive");
    weight_sum += w;
  }
  for (double s : stds)
    if (!(s > 0.0)) throw ParameterError("mixture stds must be positive");
  for (double& w : weights) w /= weight_sum;

  SourceModel m;
  m.kind_ = SourceKind::gaussian_mixture;
  m.dim_ = means.dim;
  m.gamma_ = holder_gamma;
  m.M_ = truncation_radius;
  m.weights_ = std::move(weights);
  m.stds_ = std::move(stds);
  m.means_ = std::move(means);

  // Mass each component leaves inside the ball; the density divides by it.
  if (m.dim_ == 1) {
    double mass = 0.0;
    for (size_t c = 0; c < count; ++c) {
      const double mu = m.means_.at(c, 0), s = m.stds_[c];
      mass += m.weights_[c] * (normal_cdf((m.M_ - mu) / s) - normal_cdf((-m.M_ - mu) / s));
    }
    m.norm_ = mass;
  } else {
    const int cells = 1024;
    const double h = 2.0 * m.M_ / cells;
    const double r2 = m.M_ * m.M_;
    double mass = 0.0;
    for (int i = 0; i < cells; ++i) {
      const double x = -m.M_ + (i + 0.5) * h;
      for (int j = 0; j < cells; ++j) {
        const double y = -m.M_ + (j + 0.5) * h;
        if (x * x + y * y > r2) continue;
        double value = 0.0;
        for (size_t c = 0; c < count; ++c)
          value += m.weights_[c] * normal_pdf(x, m.means_.at(c, 0), m.stds_[c]) *
                   normal_pdf(y, m.means_.at(c, 1), m.stds_[c]);
        mass += value;
      }
    }
    m.norm_ = mass * h * h;
  }
  if (!(m.norm_ > 1e-12))
    throw ConfigError("mixture carries no mass inside the truncation ball");
  return m;
}

double SourceModel::density(const double* x) const {
  if (kind_ == SourceKind::uniform_box) {
    return box_.contains(x, dim_) ? 1.0 / box_.volume() : 0.0;
  }
  if (squared_norm(x, dim_) > M_ * M_) return 0.0;
  double value = 0.0;
  for (size_t c = 0; c < weights_.size(); ++c) {
    double component = weights_[c];
    for (int j = 0; j < dim_; ++j) component *= normal_pdf(x[j], means_.at(c, j), stds_[c]);
    value += component;
  }
  return value / norm_;
}

std::vector<double> SourceModel::density_on_grid(const QuadratureGrid& grid) const {
  if (grid.dim() != dim_) throw ParameterError("grid dimension does not match the source");
  std::vector<double> values(grid.node_count());
  for (size_t g = 0; g < values.size(); ++g) values[g] = density(grid.node(g));
  return values;
}

const std::vector<double>& SourceModel::mixture_weights() const {
  if (kind_ != SourceKind::gaussian_mixture) throw ParameterError("not a mixture source");
  return weights_;
}

const PointSet& SourceModel::mixture_means() const {
  if (kind_ != SourceKind::gaussian_mixture) throw ParameterError("not a mixture source");
  return means_;
}

const std::vector<double>& SourceModel::mixture_stds() const {
  if (kind_ != SourceKind::gaussian_mixture) throw ParameterError("not a mixture source");
  return stds_;
}

Box SourceModel::bounding_box() const {
  if (kind_ == SourceKind::uniform_box) return box_;
  Box b;
  b.lo.assign(static_cast<size_t>(dim_), -M_);
  b.hi.assign(static_cast<size_t>(dim_), M_);
  return b;
}

PointSet SourceModel::sample(size_t n, uint64_t seed) const {
  Rng rng(seed);
  PointSet out(dim_);
  out.reserve(n);
  if (kind_ == SourceKind::uniform_box) {
    double p[2];
    for (size_t i = 0; i < n; ++i) {
      for (int j = 0; j < dim_; ++j) p[j] = rng.uniform(box_.lo[j], box_.hi[j]);
      out.append(p);
    }
    return out;
  }
  std::vector<double> cumulative(weights_.size());
  double acc = 0.0;
  for (size_t c = 0; c < weights_.size(); ++c) cumulative[c] = (acc += weights_[c]);
  const double r2 = M_ * M_;
  size_t attempts = 0;
  double p[2];
  while (out.size() < n) {
    ++attempts;
    if (attempts > 1000 && 100 * out.size() < attempts)
      throw ConfigError("mixture rejection sampling acceptance rate fell below 1%");
    const double u = rng.uniform01();
    const size_t c = static_cast<size_t>(
        std::lower_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
    const size_t comp = std::min(c, weights_.size() - 1);
    for (int j = 0; j < dim_; ++j) p[j] = means_.at(comp, j) + stds_[comp] * rng.normal();
    if (squared_norm(p, dim_) <= r2) out.append(p);
  }
  return out;
}

// ---------------------------------------------------------------------------

PointSet contaminate(const PointSet& clean, const NoiseModel& noise, uint64_t seed) {
  if (noise.dim() != clean.dim) throw ParameterError("noise dimension does not match the sample");
  PointSet eps = noise.sample(clean.size(), seed);
  PointSet out(clean.dim);
  out.reserve(clean.size());
  double p[2];
  for (size_t i = 0; i < clean.size(); ++i) {
    for (int j = 0; j < clean.dim; ++j) p[j] = clean.at(i, j) + eps.at(i, j);
    out.append(p);
  }
  return out;
}

double rate_exponent(double gamma, double beta_bar) {
  if (!(gamma > 0.0)) throw ParameterError("gamma must be positive");
  if (!(beta_bar >= 0.0)) throw ParameterError("beta_bar must be nonnegative");
  return gamma / (gamma + 2.0 * beta_bar);
}

double theoretical_bandwidth(size_t n, double gamma, double beta_bar, double c0) {
  if (n == 0) throw ParameterError("sample size must be positive");
  if (!(gamma > 0.0)) throw ParameterError("gamma must be positive");
  if (!(beta_bar >= 0.0)) throw ParameterError("beta_bar must be nonnegative");
  if (!(c0 > 0.0)) throw ParameterError("c0 must be positive");
  return c0 * std::pow(static_cast<double>(n), -1.0 / (gamma + 2.0 * beta_bar));
}

// ---------------------------------------------------------------------------
// Cross-validated bandwidth

double cv_bandwidth(const PointSet& sample, std::span<const double> candidates, int folds,
                    uint64_t seed, const CvContext& ctx) {
  const size_t n = sample.size();
  if (candidates.empty()) throw ParameterError("no bandwidth candidates");
  for (double c : candidates)
    if (!(c > 0.0)) throw ParameterError("bandwidth candidates must be positive");
  if (folds < 2) throw ParameterError("cross-validation needs at least 2 folds");
  if (n < static_cast<size_t>(folds)) throw ParameterError("fewer observations than folds");
  if (sample.dim != ctx.grid.dim() || sample.dim != ctx.noise.dim())
    throw ParameterError("sample, grid and noise dimensions must agree");

  // Random balanced fold assignment, fixed across candidates.
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  Rng shuffle_rng(derive_seed(seed, 0xF01d));
  for (size_t i = n; i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.index(i)]);
  std::vector<int> fold_of(n);
  for (size_t p = 0; p < n; ++p) fold_of[order[p]] = static_cast<int>(p % folds);

  bool have_best = false;
  double best_score = 0.0, best_lambda = 0.0;
  std::string failures;
  for (size_t ci = 0; ci < candidates.size(); ++ci) {
    const double lambda = candidates[ci];
    try {
      const std::vector<double> bandwidths(static_cast<size_t>(sample.dim), lambda);
      const DeconvKernelTable table = build_kernel_table(
          ctx.kernel, ctx.noise, bandwidths, ctx.grid, ctx.sample_box, ctx.inversion,
          ctx.offset_refine);
      double held_out_sum = 0.0;
      for (int f = 0; f < folds; ++f) {
        PointSet train(sample.dim);
        train.reserve(n);
        for (size_t i = 0; i < n; ++i)
          if (fold_of[i] != f) train.append(sample.point(i));
        const DeconvDensity fitted = deconv_density(train, table, ctx.grid);
        const LloydReport report = multi_start_minimize(
            ctx.grid, fitted.values, ctx.k, ctx.restarts,
            derive_seed(seed, 0xCF, ci * 131 + static_cast<size_t>(f)), ctx.lloyd);
        for (size_t i = 0; i < n; ++i)
          if (fold_of[i] == f)
            held_out_sum += deconvolved_loss(report.codebook, sample.point(i), table, ctx.grid);
      }
      const double score = held_out_sum / static_cast<double>(n);
      if (!have_best || score < best_score ||
          (score == best_score && lambda < best_lambda)) {
        have_best = true;
        best_score = score;
        best_lambda = lambda;
      }
    } catch (const Error& e) {
      failures += "\n  lambda=" + format_double(lambda) + ": " + e.what();
    }
  }
  if (!have_best)
    throw NumericalError("every bandwidth candidate failed cross-validation:" + failures);
  return best_lambda;
}

// ---------------------------------------------------------------------------
// Smoothing-bias experiment

BiasResult run_bias_experiment(const BiasExperimentConfig& config) {
  const SourceModel& source = config.source;
  if (source.dim() != 1) throw ParameterError("bias experiment supports dim 1 only");
  if (config.lambdas.size() < 2) throw ParameterError("bias experiment needs at least 2 bandwidths");
  for (double l : config.lambdas)
    if (!(l > 0.0)) throw ParameterError("bandwidths must be positive");
  if (config.grid_nodes < 2) throw ParameterError("grid_nodes must be at least 2");
  if (config.offset_refine < 1) throw ParameterError("offset_refine must be at least 1");
  if (config.codebook_a.dim != 1 || config.codebook_b.dim != 1)
    throw ParameterError("bias experiment codebooks must be one-dimensional");

  const double lambda_max = *std::max_element(config.lambdas.begin(), config.lambdas.end());
  const Box support = source.bounding_box();
  const Box bounds = support.expanded(config.margin_bandwidths * lambda_max);
  const QuadratureGrid grid = QuadratureGrid::make(bounds, {config.grid_nodes});
  const double w = grid.node_weight();
  const size_t node_count = grid.node_count();

  std::vector<double> loss_diff(node_count);
  for (size_t g = 0; g < node_count; ++g)
    loss_diff[g] = clustering_loss(config.codebook_a, grid.node(g)) -
                   clustering_loss(config.codebook_b, grid.node(g));

  double functional_true = 0.0;
  for (size_t g = 0; g < node_count; ++g)
    functional_true += w * loss_diff[g] * source.density(grid.node(g));

  // The smoothing lattice shares the kernel table's offset lattice (anchored
  // at node 0), so every lookup lands on a stored entry.
  const double anchor = grid.node_coord(0, 0);
  const double step = grid.spacing(0) / config.offset_refine;
  const long m_lo = static_cast<long>(std::ceil((support.lo[0] - anchor) / step - 1e-9));
  const long m_hi = static_cast<long>(std::floor((support.hi[0] - anchor) / step + 1e-9));
  const double reach =
      std::max(support.hi[0] - bounds.lo[0], bounds.hi[0] - support.lo[0]) + 2.0 * step;

  BiasResult result;
  result.lambdas = config.lambdas;
  result.biases.resize(config.lambdas.size());
  for (size_t li = 0; li < config.lambdas.size(); ++li) {
    const double lambda = config.lambdas[li];
    const AxisTable table =
        sample_base_kernel(config.kernel, lambda, step, reach, config.inversion);
    double functional_smoothed = 0.0;
    for (size_t g = 0; g < node_count; ++g) {
      const double xg = grid.node_coord(g, 0);
      double smoothed = 0.0;
      for (long m = m_lo; m <= m_hi; ++m) {
        const double y = anchor + static_cast<double>(m) * step;
        const double f = source.density(&y);
        if (f != 0.0) smoothed += f * table.value_at(y - xg);
      }
      functional_smoothed += w * loss_diff[g] * smoothed * step;
    }
    result.biases[li] = std::abs(functional_true - functional_smoothed);
  }

  const size_t largest = static_cast<size_t>(
      std::max_element(config.lambdas.begin(), config.lambdas.end()) - config.lambdas.begin());
  if (result.biases[largest] < 1e-12)
    throw ConfigError(
        "bias at the largest bandwidth is below 1e-12; the configuration leaves nothing to fit");
  std::vector<double> log_lambda, log_bias;
  for (size_t li = 0; li < config.lambdas.size(); ++li) {
    if (!(result.biases[li] > 0.0))
      throw ConfigError("bias vanished at bandwidth " + format_double(config.lambdas[li]));
    log_lambda.push_back(std::log(config.lambdas[li]));
    log_bias.push_back(std::log(result.biases[li]));
  }
  result.slope = fit_line(log_lambda, log_bias).slope;
  return result;
}

std::string bias_rows_csv(const BiasResult& result) {
  std::string out = "lambda,bias\n";
  for (size_t i = 0; i < result.lambdas.size(); ++i)
    out += format_double(result.lambdas[i]) + "," + format_double(result.biases[i]) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Monte Carlo rate experiment

RateResult run_rate_experiment(const RateExperimentConfig& config) {
  const int d = config.source.dim();
  if (config.noise.dim() != d) throw ParameterError("noise dimension does not match the source");
  if (config.n_schedule.empty()) throw ParameterError("empty sample-size schedule");
  if (config.k < 1) throw ParameterError("k must be at least 1");
  for (size_t n : config.n_schedule)
    if (n < static_cast<size_t>(std::max(config.k, 2)))
      throw ParameterError("every scheduled sample size must be at least max(k, 2)");
  if (config.replications < 1) throw ParameterError("replications must be at least 1");
  if (config.restarts < 0) throw ParameterError("restarts must be nonnegative");
  if (config.grid_nodes < 2) throw ParameterError("grid_nodes must be at least 2");
  if (config.ref_grid_factor < 1 || config.ref_restart_factor < 1)
    throw ParameterError("reference factors must be at least 1");
  if (config.threads < 1) throw ParameterError("threads must be at least 1");

  const double gamma = config.source.holder_gamma();
  const double beta_bar = config.noise.beta_bar();

  RateResult result;
  result.sample_sizes = config.n_schedule;
  result.theoretical_exponent = rate_exponent(gamma, beta_bar);
  const size_t schedule = config.n_schedule.size();
  result.lambdas.resize(schedule);
  for (size_t i = 0; i < schedule; ++i)
    result.lambdas[i] = theoretical_bandwidth(config.n_schedule[i], gamma, beta_bar, config.c0);
  const double lambda_max = *std::max_element(result.lambdas.begin(), result.lambdas.end());

  const Box bounds = config.source.bounding_box().expanded(config.margin_bandwidths * lambda_max);
  const QuadratureGrid grid =
      QuadratureGrid::make(bounds, std::vector<int>(static_cast<size_t>(d), config.grid_nodes));
  const QuadratureGrid ref_grid = QuadratureGrid::make(
      bounds,
      std::vector<int>(static_cast<size_t>(d), config.grid_nodes * config.ref_grid_factor));

  // Reference optimum on the finer grid, with a deeper restart budget.
  const std::vector<double> f_ref = config.source.density_on_grid(ref_grid);
  const OptimalCodebook reference =
      optimal_codebook(ref_grid, f_ref, config.k, config.restarts * config.ref_restart_factor,
                       derive_seed(config.master_seed, 0x0C57), config.lloyd);
  result.cstar = reference.codebook;
  result.cstar_risk = reference.risk;
  result.distinct_optima = reference.distinct_optima;
  result.hessian_min_eig =
      pollard_hessian_min_eig(ref_grid, f_ref, reference.codebook, config.hessian_step);
  if (!(result.hessian_min_eig > 0.0))
    throw ConfigError("reference optimum fails the curvature check (min eigenvalue " +
                      format_double(result.hessian_min_eig) +
                      "); pick a source with a nondegenerate optimum");

  const Box sample_box = default_sample_box(grid, config.noise, config.sample_margin_sigmas);
  std::vector<DeconvKernelTable> tables;
  tables.reserve(schedule);
  for (size_t i = 0; i < schedule; ++i) {
    const std::vector<double> bandwidths(static_cast<size_t>(d), result.lambdas[i]);
    tables.push_back(build_kernel_table(config.kernel, config.noise, bandwidths, grid, sample_box,
                                        config.inversion, config.offset_refine));
  }

  const size_t reps = static_cast<size_t>(config.replications);
  result.rows.assign(schedule * reps, RateRow{});
  parallel_run(schedule * reps, config.threads, [&](size_t slot) {
    const size_t ni = slot / reps;
    const size_t rep = slot % reps;
    const size_t n = config.n_schedule[ni];
    const uint64_t rep_seed = derive_seed(config.master_seed, 100 + ni, rep);
    try {
      const PointSet clean = config.source.sample(n, derive_seed(rep_seed, 1));
      const PointSet observed = contaminate(clean, config.noise, derive_seed(rep_seed, 2));
      const DeconvDensity fitted = deconv_density(observed, tables[ni], grid);
      const LloydReport fit = multi_start_minimize(grid, fitted.values, config.k, config.restarts,
                                                   derive_seed(rep_seed, 3), config.lloyd);
      const double excess_deconv = excess_risk(fit.codebook, result.cstar_risk, ref_grid, f_ref);
      const Codebook naive = naive_kmeans(observed, config.k, config.restarts,
                                          derive_seed(rep_seed, 4), config.lloyd);
      const double excess_naive = excess_risk(naive, result.cstar_risk, ref_grid, f_ref);
      result.rows[slot] = RateRow{n,
                                  static_cast<int>(rep),
                                  excess_deconv,
                                  excess_naive,
                                  result.lambdas[ni],
                                  rep_seed};
    } catch (const Error&) {
      char prefix[128];
      std::snprintf(prefix, sizeof prefix, "replication n=%llu rep=%llu seed=%llu: ",
                    static_cast<unsigned long long>(n), static_cast<unsigned long long>(rep),
                    static_cast<unsigned long long>(rep_seed));
      rethrow_with_context(prefix);
    }
  });

  auto aggregate = [&](bool deconv) {
    RateFit fit;
    fit.mean_excess.resize(schedule);
    fit.std_error.resize(schedule);
    for (size_t ni = 0; ni < schedule; ++ni) {
      double sum = 0.0;
      for (size_t r = 0; r < reps; ++r) {
        const RateRow& row = result.rows[ni * reps + r];
        sum += deconv ? row.excess_deconv : row.excess_naive;
      }
      const double mean = sum / static_cast<double>(reps);
      double ss = 0.0;
      for (size_t r = 0; r < reps; ++r) {
        const RateRow& row = result.rows[ni * reps + r];
        const double v = (deconv ? row.excess_deconv : row.excess_naive) - mean;
        ss += v * v;
      }
      fit.mean_excess[ni] = mean;
      fit.std_error[ni] =
          reps > 1 ? std::sqrt(ss / static_cast<double>(reps - 1)) / std::sqrt(static_cast<double>(reps))
                   : 0.0;
    }
    std::vector<double> log_n, log_mean;
    for (size_t ni = 0; ni < schedule; ++ni) {
      if (!(fit.mean_excess[ni] > 0.0))
        throw NumericalError("mean excess risk is not positive at n=" +
                             std::to_string(config.n_schedule[ni]) + "; no rate to fit");
      log_n.push_back(std::log(static_cast<double>(config.n_schedule[ni])));
      log_mean.push_back(std::log(fit.mean_excess[ni]));
    }
    if (schedule >= 2) {
      const LineFit line = fit_line(log_n, log_mean);
      fit.slope = line.slope;
      fit.slope_stderr = line.slope_stderr;
    }
    return fit;
  };
  result.deconv = aggregate(true);
  result.naive = aggregate(false);
  return result;
}

std::string rate_rows_csv(const RateResult& result) {
  std::string out = "n,rep,excess_deconv,excess_naive,lambda,seed\n";
  char buf[64];
  for (const RateRow& row : result.rows) {
    std::snprintf(buf, sizeof buf, "%llu,%d,", static_cast<unsigned long long>(row.n), row.rep);
    out += buf;
    out += format_double(row.excess_deconv) + "," + format_double(row.excess_naive) + "," +
           format_double(row.lambda) + ",";
    std::snprintf(buf, sizeof buf, "%llu\n", static_cast<unsigned long long>(row.seed));
    out += buf;
  }
  return out;
}

}  // namespace declust

#include "declust/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace declust {

namespace {

// Per-node nearest-center assignment with accumulated signed masses and
// moments. dist2[g] is the distance to the winning center.
struct AssignPass {
  std::vector<double> mass;     // per center
  std::vector<double> moment;   // per center, dim components
  std::vector<double> dist2;    // per node
  std::vector<int> owner;       // per node
};

void run_assignment(const QuadratureGrid& grid, std::span<const double> weights,
                    const Codebook& centers, AssignPass& pass) {
  int k = centers.k;
  int d = centers.dim;
  size_t count = grid.node_count();
  pass.mass.assign(static_cast<size_t>(k), 0.0);
  pass.moment.assign(static_cast<size_t>(k) * d, 0.0);
  pass.dist2.resize(count);
  pass.owner.resize(count);
  for (size_t g = 0; g < count; ++g) {
    const double* x = grid.node(g);
    int best = 0;
    double best_d = squared_distance(centers.center(0), x, d);
    for (int j = 1; j < k; ++j) {
      double dj = squared_distance(centers.center(j), x, d);
      if (dj < best_d) {  // ties keep the lowest index
        best_d = dj;
        best = j;
      }
    }
    pass.owner[g] = best;
    pass.dist2[g] = best_d;
    double w = weights[g];
    pass.mass[static_cast<size_t>(best)] += w;
    for (int a = 0; a < d; ++a)
      pass.moment[static_cast<size_t>(best) * d + a] += w * x[a];
  }
}

// Worst-fit positive-density node not yet claimed in this update.
size_t pick_reseed_node(const QuadratureGrid& grid, std::span<const double> weights,
                        const AssignPass& pass, const std::vector<char>& taken) {
  size_t best = SIZE_MAX;
  double best_score = -1.0;
  for (size_t g = 0; g < weights.size(); ++g) {
    if (taken[g] || weights[g] <= 0.0) continue;
    double score = weights[g] * pass.dist2[g];
    if (score > best_score) {
      best_score = score;
      best = g;
    }
  }
  if (best == SIZE_MAX)
    throw NumericalError("weighted_lloyd: no positive-density node available for reseeding");
  return best;
}

}  // namespace

LloydReport weighted_lloyd(const QuadratureGrid& grid, std::span<const double> density,
                           int k, const Codebook& init, const LloydOptions& opts) {
  if (k < 1) throw ParameterError("weighted_lloyd: k must be positive");
  if (init.k != k || init.dim != grid.dim())
    throw ParameterError("weighted_lloyd: init codebook shape mismatch");
  if (density.size() != grid.node_count())
    throw ParameterError("weighted_lloyd: density size does not match grid");
  if (static_cast<size_t>(k) > grid.node_count())
    throw ParameterError("weighted_lloyd: more centers than grid nodes");
  if (opts.max_iters < 1 || !(opts.tol > 0.0))
    throw ParameterError("weighted_lloyd: invalid iteration options");

  const int d = grid.dim();
  double total_pos = 0.0;
  for (double w : density) total_pos += std::max(w, 0.0);
  if (!(total_pos > 0.0))
    throw ParameterError("weighted_lloyd: density has no positive mass");
  const double mass_floor = opts.mass_floor_rel * total_pos;

  LloydReport report;
  report.codebook = init;
  // Canonical order up front so a permuted init walks the same trajectory.
  report.codebook.sort_canonical();

  AssignPass pass;
  std::vector<char> taken(grid.node_count(), 0);
  report.risk_trace.push_back(risk_against_density(report.codebook, grid, density));
  for (int it = 0; it < opts.max_iters; ++it) {
    run_assignment(grid, density, report.codebook, pass);
    std::fill(taken.begin(), taken.end(), 0);
    double max_move2 = 0.0;
    for (int j = 0; j < k; ++j) {
      double* c = report.codebook.center(j);
      double fresh[2];
      if (pass.mass[static_cast<size_t>(j)] <= mass_floor) {
        size_t g = pick_reseed_node(grid, density, pass, taken);
        taken[g] = 1;
        for (int a = 0; a < d; ++a) fresh[a] = grid.node(g)[a];
        ++report.reseed_events;
      } else {
        for (int a = 0; a < d; ++a) {
          fresh[a] = pass.moment[static_cast<size_t>(j) * d + a] / pass.mass[static_cast<size_t>(j)];
          fresh[a] = std::clamp(fresh[a], grid.bounds().lo[static_cast<size_t>(a)],
                                grid.bounds().hi[static_cast<size_t>(a)]);
        }
      }
      double move2 = squared_distance(c, fresh, d);
      max_move2 = std::max(max_move2, move2);
      for (int a = 0; a < d; ++a) c[a] = fresh[a];
    }
    ++report.iterations;
    report.risk_trace.push_back(risk_against_density(report.codebook, grid, density));
    if (std::sqrt(max_move2) < opts.tol) {
      report.converged = true;
      break;
    }
  }

  report.codebook.sort_canonical();
  report.final_risk = risk_against_density(report.codebook, grid, density);
  return report;
}

namespace {

// Cumulative-weight draw over the positive part of the density.
size_t draw_weighted(const std::vector<double>& cumulative, double total, Rng& rng) {
  double u = rng.uniform01() * total;
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  size_t g = static_cast<size_t>(it - cumulative.begin());
  return std::min(g, cumulative.size() - 1);
}

Codebook init_weighted_draw(const QuadratureGrid& grid, const std::vector<double>& cumulative,
                            double total, int k, Rng& rng) {
  int d = grid.dim();
  Codebook c(d, k);
  std::vector<size_t> chosen;
  for (int j = 0; j < k; ++j) {
    size_t g = draw_weighted(cumulative, total, rng);
    for (int attempt = 0; attempt < 64; ++attempt) {
      if (std::find(chosen.begin(), chosen.end(), g) == chosen.end()) break;
      g = draw_weighted(cumulative, total, rng);
    }
    chosen.push_back(g);
    for (int a = 0; a < d; ++a) c.center(j)[a] = grid.node(g)[a];
  }
  return c;
}

// Spread initialization: first seed by positive weight, later seeds by
// positive weight times squared distance to the chosen set.
Codebook init_spread(const QuadratureGrid& grid, std::span<const double> density,
                     const std::vector<double>& cumulative, double total, int k, Rng& rng) {
  int d = grid.dim();
  size_t count = grid.node_count();
  Codebook c(d, k);
  size_t g0 = draw_weighted(cumulative, total, rng);
  for (int a = 0; a < d; ++a) c.center(0)[a] = grid.node(g0)[a];
  std::vector<double> best_d2(count, std::numeric_limits<double>::infinity());
  for (int j = 1; j < k; ++j) {
    const double* prev = c.center(j - 1);
    double running = 0.0;
    std::vector<double> cum(count);
    for (size_t g = 0; g < count; ++g) {
      best_d2[g] = std::min(best_d2[g], squared_distance(prev, grid.node(g), d));
      running += std::max(density[g], 0.0) * best_d2[g];
      cum[g] = running;
    }
    size_t pick = running > 0.0 ? draw_weighted(cum, running, rng)
                                : draw_weighted(cumulative, total, rng);
    for (int a = 0; a < d; ++a) c.center(j)[a] = grid.node(pick)[a];
  }
  return c;
}

}  // namespace

LloydReport multi_start_minimize(const QuadratureGrid& grid, std::span<const double> density,
                                 int k, int restarts, uint64_t seed,
                                 const LloydOptions& opts) {
  if (restarts < 1) throw ParameterError("multi_start_minimize: restarts must be positive");
  if (density.size() != grid.node_count())
    throw ParameterError("multi_start_minimize: density size does not match grid");

  size_t count = grid.node_count();
  std::vector<double> cumulative(count);
  double total = 0.0;
  for (size_t g = 0; g < count; ++g) {
    total += std::max(density[g], 0.0);
    cumulative[g] = total;
  }
  if (!(total > 0.0))
    throw ParameterError("multi_start_minimize: density has no positive mass");

  LloydReport best;
  bool have = false;
  int runs = restarts + 1;
  for (int r = 0; r < runs; ++r) {
    Rng rng(derive_seed(seed, 0xC1A5, static_cast<uint64_t>(r)));
    Codebook init = r < restarts
                        ? init_weighted_draw(grid, cumulative, total, k, rng)
                        : init_spread(grid, density, cumulative, total, k, rng);
    LloydReport rep = weighted_lloyd(grid, density, k, init, opts);
    if (!have || rep.final_risk < best.final_risk) {
      best = std::move(rep);
      have = true;
    }
  }
  best.restarts_used = runs;
  return best;
}

namespace {

struct PointPass {
  std::vector<double> moment;
  std::vector<size_t> count;
  std::vector<double> dist2;
};

void run_point_assignment(const PointSet& sample, const Codebook& centers, PointPass& pass) {
  int k = centers.k;
  int d = centers.dim;
  size_t n = sample.size();
  pass.moment.assign(static_cast<size_t>(k) * d, 0.0);
  pass.count.assign(static_cast<size_t>(k), 0);
  pass.dist2.resize(n);
  for (size_t i = 0; i < n; ++i) {
    const double* z = sample.point(i);
    int best = 0;
    double best_d = squared_distance(centers.center(0), z, d);
    for (int j = 1; j < k; ++j) {
      double dj = squared_distance(centers.center(j), z, d);
      if (dj < best_d) {
        best_d = dj;
        best = j;
      }
    }
    pass.dist2[i] = best_d;
    pass.count[static_cast<size_t>(best)] += 1;
    for (int a = 0; a < d; ++a)
      pass.moment[static_cast<size_t>(best) * d + a] += z[a];
  }
}

double sample_risk(const PointSet& sample, const Codebook& centers) {
  double acc = 0.0;
  for (size_t i = 0; i < sample.size(); ++i)
    acc += clustering_loss(centers, sample.point(i));
  return acc / static_cast<double>(sample.size());
}

Codebook lloyd_on_points(const PointSet& sample, int k, const Codebook& init,
                         const LloydOptions& opts) {
  int d = sample.dim;
  Codebook centers = init;
  centers.sort_canonical();
  PointPass pass;
  std::vector<char> taken(sample.size(), 0);
  for (int it = 0; it < opts.max_iters; ++it) {
    run_point_assignment(sample, centers, pass);
    std::fill(taken.begin(), taken.end(), 0);
    double max_move2 = 0.0;
    for (int j = 0; j < k; ++j) {
      double fresh[2];
      if (pass.count[static_cast<size_t>(j)] == 0) {
        // Empty cluster: restart it on the point that fits worst.
        size_t pick = SIZE_MAX;
        double score = -1.0;
        for (size_t i = 0; i < sample.size(); ++i) {
          if (!taken[i] && pass.dist2[i] > score) {
            score = pass.dist2[i];
            pick = i;
          }
        }
        if (pick == SIZE_MAX)
          throw NumericalError("naive_kmeans: cannot reseed an empty cluster");
        taken[pick] = 1;
        for (int a = 0; a < d; ++a) fresh[a] = sample.point(pick)[a];
      } else {
        for (int a = 0; a < d; ++a)
          fresh[a] = pass.moment[static_cast<size_t>(j) * d + a] /
                     static_cast<double>(pass.count[static_cast<size_t>(j)]);
      }
      max_move2 = std::max(max_move2, squared_distance(centers.center(j), fresh, d));
      for (int a = 0; a < d; ++a) centers.center(j)[a] = fresh[a];
    }
    if (std::sqrt(max_move2) < opts.tol) break;
  }
  centers.sort_canonical();
  return centers;
}

}  // namespace

Codebook naive_kmeans(const PointSet& sample, int k, int restarts, uint64_t seed,
                      const LloydOptions& opts) {
  if (k < 1) throw ParameterError("naive_kmeans: k must be positive");
  if (restarts < 1) throw ParameterError("naive_kmeans: restarts must be positive");
  size_t n = sample.size();
  if (n < static_cast<size_t>(k))
    throw ParameterError("naive_kmeans: need at least k observations");

  int d = sample.dim;
  Codebook best;
  double best_risk = std::numeric_limits<double>::infinity();
  int runs = restarts + 1;
  for (int r = 0; r < runs; ++r) {
    Rng rng(derive_seed(seed, 0x4EA1, static_cast<uint64_t>(r)));
    Codebook init(d, k);
    if (r < restarts) {
      std::vector<size_t> chosen;
      for (int j = 0; j < k; ++j) {
        size_t i = rng.index(n);
        for (int attempt = 0; attempt < 64; ++attempt) {
          if (std::find(chosen.begin(), chosen.end(), i) == chosen.end()) break;
          i = rng.index(n);
        }
        chosen.push_back(i);
        for (int a = 0; a < d; ++a) init.center(j)[a] = sample.point(i)[a];
      }
    } else {
      // Spread start over the points.
      size_t i0 = rng.index(n);
      for (int a = 0; a < d; ++a) init.center(0)[a] = sample.point(i0)[a];
      std::vector<double> best_d2(n, std::numeric_limits<double>::infinity());
      for (int j = 1; j < k; ++j) {
        const double* prev = init.center(j - 1);
        double running = 0.0;
        std::vector<double> cum(n);
        for (size_t i = 0; i < n; ++i) {
          best_d2[i] = std::min(best_d2[i], squared_distance(prev, sample.point(i), d));
          running += best_d2[i];
          cum[i] = running;
        }
        size_t pick = i0;
        if (running > 0.0) {
          double u = rng.uniform01() * running;
          pick = static_cast<size_t>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
          pick = std::min(pick, n - 1);
        }
        for (int a = 0; a < d; ++a) init.center(j)[a] = sample.point(pick)[a];
      }
    }
    Codebook fit = lloyd_on_points(sample, k, init, opts);
    double risk = sample_risk(sample, fit);
    if (risk < best_risk) {
      best_risk = risk;
      best = fit;
    }
  }
  return best;
}

OptimalCodebook optimal_codebook(const QuadratureGrid& grid, std::span<const double> true_density,
                                 int k, int restarts, uint64_t seed,
                                 const LloydOptions& opts) {
  if (restarts < 1) throw ParameterError("optimal_codebook: restarts must be positive");

  size_t count = grid.node_count();
  std::vector<double> cumulative(count);
  double total = 0.0;
  for (size_t g = 0; g < count; ++g) {
    total += std::max(true_density[g], 0.0);
    cumulative[g] = total;
  }
  if (!(total > 0.0))
    throw ParameterError("optimal_codebook: density has no positive mass");

  struct Outcome {
    Codebook codebook;
    double risk;
  };
  std::vector<Outcome> outcomes;
  int runs = restarts + 1;
  outcomes.reserve(static_cast<size_t>(runs));
  for (int r = 0; r < runs; ++r) {
    Rng rng(derive_seed(seed, 0xC1A5, static_cast<uint64_t>(r)));
    Codebook init = r < restarts
                        ? init_weighted_draw(grid, cumulative, total, k, rng)
                        : init_spread(grid, true_density, cumulative, total, k, rng);
    LloydReport rep = weighted_lloyd(grid, true_density, k, init, opts);
    outcomes.push_back({std::move(rep.codebook), rep.final_risk});
  }

  size_t best_i = 0;
  for (size_t i = 1; i < outcomes.size(); ++i)
    if (outcomes[i].risk < outcomes[best_i].risk) best_i = i;

  // Count distinct codebooks among the near-optimal outcomes; codebooks are
  // already canonically sorted, so a center-wise distance works directly.
  double risk_tol = 1e-6 * (1.0 + std::abs(outcomes[best_i].risk));
  double center_tol = 1e-3;
  std::vector<Codebook> distinct;
  for (const auto& o : outcomes) {
    if (o.risk > outcomes[best_i].risk + risk_tol) continue;
    bool fresh = true;
    for (const auto& seen : distinct) {
      double gap = 0.0;
      for (int j = 0; j < k; ++j)
        gap = std::max(gap, std::sqrt(squared_distance(seen.center(j), o.codebook.center(j),
                                                       grid.dim())));
      if (gap <= center_tol) {
        fresh = false;
        break;
      }
    }
    if (fresh) distinct.push_back(o.codebook);
  }

  OptimalCodebook out;
  out.codebook = outcomes[best_i].codebook;
  out.risk = outcomes[best_i].risk;
  out.distinct_optima = static_cast<int>(distinct.size());
  return out;
}

double excess_risk(const Codebook& codebook, double cstar_risk,
                   const QuadratureGrid& grid, std::span<const double> true_density) {
  double e = risk_against_density(codebook, grid, true_density) - cstar_risk;
  if (e < -1e-6)
    throw OracleError("excess_risk: value " + format_double(e) +
                      " below -1e-6; reference risk is not a minimum");
  return e;
}

namespace {

// Smallest eigenvalue of a small symmetric matrix by cyclic Jacobi rotations.
double min_eigenvalue_symmetric(std::vector<double>& m, int n) {
  auto at = [&m, n](int r, int c) -> double& { return m[static_cast<size_t>(r) * n + c]; };
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (int r = 0; r < n; ++r)
      for (int c = r + 1; c < n; ++c) off += at(r, c) * at(r, c);
    if (off < 1e-24) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        if (std::abs(at(p, q)) < 1e-300) continue;
        double theta = (at(q, q) - at(p, p)) / (2.0 * at(p, q));
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (int r = 0; r < n; ++r) {
          double mrp = at(r, p), mrq = at(r, q);
          at(r, p) = c * mrp - s * mrq;
          at(r, q) = s * mrp + c * mrq;
        }
        for (int r = 0; r < n; ++r) {
          double mpr = at(p, r), mqr = at(q, r);
          at(p, r) = c * mpr - s * mqr;
          at(q, r) = s * mpr + c * mqr;
        }
      }
    }
  }
  double least = m[0];
  for (int r = 1; r < n; ++r) least = std::min(least, m[static_cast<size_t>(r) * n + r]);
  return least;
}

}  // namespace

double pollard_hessian_min_eig(const QuadratureGrid& grid, std::span<const double> true_density,
                               const Codebook& cstar, double step) {
  if (!(step > 0.0)) throw ParameterError("pollard_hessian_min_eig: step must be positive");
  if (cstar.dim != grid.dim())
    throw ParameterError("pollard_hessian_min_eig: codebook dimension mismatch");

  const int n = cstar.dim * cstar.k;
  auto risk_at = [&](const std::vector<double>& flat) {
    Codebook c = Codebook::from_flat(cstar.dim, flat);
    return risk_against_density(c, grid, true_density);
  };
  std::vector<double> base = cstar.centers;
  double r0 = risk_at(base);

  std::vector<double> hess(static_cast<size_t>(n) * n, 0.0);
  for (int a = 0; a < n; ++a) {
    std::vector<double> up = base, down = base;
    up[static_cast<size_t>(a)] += step;
    down[static_cast<size_t>(a)] -= step;
    hess[static_cast<size_t>(a) * n + a] = (risk_at(up) - 2.0 * r0 + risk_at(down)) / (step * step);
    for (int b = a + 1; b < n; ++b) {
      std::vector<double> pp = base, pm = base, mp = base, mm = base;
      pp[static_cast<size_t>(a)] += step;
      pp[static_cast<size_t>(b)] += step;
      pm[static_cast<size_t>(a)] += step;
      pm[static_cast<size_t>(b)] -= step;
      mp[static_cast<size_t>(a)] -= step;
      mp[static_cast<size_t>(b)] += step;
      mm[static_cast<size_t>(a)] -= step;
      mm[static_cast<size_t>(b)] -= step;
      double v = (risk_at(pp) - risk_at(pm) - risk_at(mp) + risk_at(mm)) / (4.0 * step * step);
      hess[static_cast<size_t>(a) * n + b] = v;
      hess[static_cast<size_t>(b) * n + a] = v;
    }
  }
  return min_eigenvalue_symmetric(hess, n);
}

}  // namespace declust

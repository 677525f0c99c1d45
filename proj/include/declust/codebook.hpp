#pragma once

#include <algorithm>
#include <vector>

#include "declust/common.hpp"

namespace declust {

// k centers in R^d, stored flat (k rows of dim doubles). Outputs are kept in
// canonical lexicographic order so codebooks compare independently of label
// permutations.
struct Codebook {
  int dim = 1;
  int k = 0;
  std::vector<double> centers;

  Codebook() = default;
  Codebook(int d, int count) : dim(d), k(count), centers(static_cast<size_t>(d) * count, 0.0) {}

  static Codebook from_flat(int d, std::vector<double> flat) {
    if (d < 1 || flat.empty() || flat.size() % static_cast<size_t>(d) != 0)
      throw ParameterError("Codebook: flat center data does not match dimension");
    Codebook c;
    c.dim = d;
    c.k = static_cast<int>(flat.size() / static_cast<size_t>(d));
    c.centers = std::move(flat);
    return c;
  }

  const double* center(int j) const {
    return centers.data() + static_cast<size_t>(j) * dim;
  }
  double* center(int j) { return centers.data() + static_cast<size_t>(j) * dim; }

  double at(int j, int axis) const { return center(j)[axis]; }

  void sort_canonical() {
    std::vector<std::vector<double>> rows(static_cast<size_t>(k));
    for (int j = 0; j < k; ++j)
      rows[static_cast<size_t>(j)].assign(center(j), center(j) + dim);
    std::sort(rows.begin(), rows.end());
    for (int j = 0; j < k; ++j)
      std::copy(rows[static_cast<size_t>(j)].begin(), rows[static_cast<size_t>(j)].end(), center(j));
  }
};

inline double squared_distance(const double* a, const double* b, int d) {
  double s = 0.0;
  for (int j = 0; j < d; ++j) {
    double t = a[j] - b[j];
    s += t * t;
  }
  return s;
}

}  // namespace declust

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace declust {

inline constexpr double kPi = std::numbers::pi_v<double>;

// Error taxonomy. The CLI maps these onto exit codes: config/parameter
// problems -> 2, numerical failures (ill-posedness, coverage) -> 3,
// oracle inconsistencies -> 4.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};
class ParameterError : public Error {
public:
  using Error::Error;
};
class ConfigError : public Error {
public:
  using Error::Error;
};
class NumericalError : public Error {
public:
  using Error::Error;
};
class CoverageError : public NumericalError {
public:
  using NumericalError::NumericalError;
};
class OracleError : public Error {
public:
  using Error::Error;
};

uint64_t splitmix64(uint64_t x);

/// Deterministic seed derivation: same (master, stream, index) always maps to
/// the same child seed, distinct tuples to unrelated streams.
uint64_t derive_seed(uint64_t master, uint64_t stream, uint64_t index = 0);

// Seeded generator with fully specified transforms (no std::*_distribution,
// whose output is implementation-defined). mt19937_64 itself is pinned by the
// standard, so sequences are identical across platforms.
class Rng {
public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next() { return eng_(); }

  /// Uniform on [0,1), 53-bit resolution.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform on (0,1), strictly inside; safe as argument of log.
  double uniform_open() {
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  /// Unbiased integer in [0, n).
  size_t index(size_t n);

  /// Standard normal via Box-Muller (pair cached).
  double normal();

  /// Centered Laplace with scale sigma, by inverse CDF.
  double laplace(double sigma);

private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
};

/// Unweighted least-squares line y = slope*x + intercept.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

/// One-sided binomial tail P(Bin(m, 1/2) >= s), exact.
double binomial_tail_pvalue(int m, int s);

/// Canonical shortest-round-trip-free formatting used for all CSV output;
/// "%.17g" so reruns are byte-identical.
std::string format_double(double v);

// Axis-aligned box in R^d, d in {1,2} throughout this project.
struct Box {
  std::vector<double> lo, hi;

  int dim() const { return static_cast<int>(lo.size()); }
  void validate() const;
  bool contains(const double* p, int d) const;
  Box expanded(double margin) const;
  double volume() const;
};

// Flat row-major point storage: point(i) is a pointer to dim doubles.
struct PointSet {
  int dim = 1;
  std::vector<double> coords;

  PointSet() = default;
  explicit PointSet(int d) : dim(d) {}

  size_t size() const {
    return dim > 0 ? coords.size() / static_cast<size_t>(dim) : 0;
  }
  const double* point(size_t i) const {
    return coords.data() + i * static_cast<size_t>(dim);
  }
  double at(size_t i, int j) const {
    return coords[i * static_cast<size_t>(dim) + static_cast<size_t>(j)];
  }
  void append(const double* p) { coords.insert(coords.end(), p, p + dim); }
  void reserve(size_t n) { coords.reserve(n * static_cast<size_t>(dim)); }
};

}  // namespace declust

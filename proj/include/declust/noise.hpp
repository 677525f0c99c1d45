#pragma once

#include <complex>
#include <vector>

#include "declust/common.hpp"

namespace declust {

enum class NoiseKind { identity, laplace };

// One independent error coordinate. beta is the stored polynomial decay
// exponent of |cf|: the characteristic function of the component satisfies
// |cf(t)| ~ |t|^(-beta). It is declared, not inferred: 2 for laplace,
// 0 for identity.
struct NoiseComponent {
  NoiseKind kind = NoiseKind::identity;
  double sigma = 0.0;  // scale; unused for identity
  double beta = 0.0;
};

// Product noise law across axes: coordinates are independent, each with its
// own kind and scale. cf values never vanish for the supported kinds.
class NoiseModel {
public:
  static NoiseModel identity(int dim);
  static NoiseModel laplace(int dim, double sigma);
  static NoiseModel laplace(const std::vector<double>& sigmas);

  int dim() const { return static_cast<int>(components_.size()); }
  const NoiseComponent& component(int axis) const;

  /// Characteristic function of axis component at frequency t.
  std::complex<double> cf(int axis, double t) const;

  double beta(int axis) const { return component(axis).beta; }

  /// Sum of per-axis decay exponents.
  double beta_bar() const;

  bool pure_identity() const;

  /// count i.i.d. draws of the noise vector; identical seed, identical draws.
  PointSet sample(size_t count, uint64_t seed) const;

private:
  explicit NoiseModel(std::vector<NoiseComponent> c) : components_(std::move(c)) {}
  std::vector<NoiseComponent> components_;
};

/// Fits the decay exponent of |cf| for one axis over t in [1e2, 1e4]
/// (32 log-spaced points) and returns the log-log slope; approximately
/// -beta for a polynomially decaying tail. Identity noise has no decay to
/// fit and raises ParameterError.
double beta_decay_check(const NoiseModel& noise, int axis);

}  // namespace declust

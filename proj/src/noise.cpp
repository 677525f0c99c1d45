#include "declust/noise.hpp"

#include <cmath>

namespace declust {

NoiseModel NoiseModel::identity(int dim) {
  if (dim < 1 || dim > 2)
    throw ParameterError("NoiseModel: dimension must be 1 or 2");
  std::vector<NoiseComponent> c(static_cast<size_t>(dim));
  for (auto& comp : c) comp = NoiseComponent{NoiseKind::identity, 0.0, 0.0};
  return NoiseModel(std::move(c));
}

NoiseModel NoiseModel::laplace(int dim, double sigma) {
  return laplace(std::vector<double>(static_cast<size_t>(dim), sigma));
}

NoiseModel NoiseModel::laplace(const std::vector<double>& sigmas) {
  if (sigmas.empty() || sigmas.size() > 2)
    throw ParameterError("NoiseModel: dimension must be 1 or 2");
  std::vector<NoiseComponent> c;
  c.reserve(sigmas.size());
  for (double s : sigmas) {
    if (!(s > 0.0))
      throw ParameterError("NoiseModel: laplace sigma must be positive");
    c.push_back(NoiseComponent{NoiseKind::laplace, s, 2.0});
  }
  return NoiseModel(std::move(c));
}

const NoiseComponent& NoiseModel::component(int axis) const {
  if (axis < 0 || axis >= dim())
    throw ParameterError("NoiseModel: axis out of range");
  return components_[static_cast<size_t>(axis)];
}

std::complex<double> NoiseModel::cf(int axis, double t) const {
  const NoiseComponent& c = component(axis);
  switch (c.kind) {
    case NoiseKind::identity:
      return {1.0, 0.0};
    case NoiseKind::laplace:
      // Centered Laplace with scale sigma: 1 / (1 + sigma^2 t^2).
      return {1.0 / (1.0 + c.sigma * c.sigma * t * t), 0.0};
  }
  throw ParameterError("NoiseModel: unknown kind");
}

double NoiseModel::beta_bar() const {
  double b = 0.0;
  for (const auto& c : components_) b += c.beta;
  return b;
}

bool NoiseModel::pure_identity() const {
  for (const auto& c : components_)
    if (c.kind != NoiseKind::identity) return false;
  return true;
}

PointSet NoiseModel::sample(size_t count, uint64_t seed) const {
  Rng rng(seed);
  PointSet out(dim());
  out.reserve(count);
  std::vector<double> p(static_cast<size_t>(dim()));
  for (size_t i = 0; i < count; ++i) {
    for (int j = 0; j < dim(); ++j) {
      const NoiseComponent& c = components_[static_cast<size_t>(j)];
      p[static_cast<size_t>(j)] =
          c.kind == NoiseKind::identity ? 0.0 : rng.laplace(c.sigma);
    }
    out.append(p.data());
  }
  return out;
}

double beta_decay_check(const NoiseModel& noise, int axis) {
  const NoiseComponent& c = noise.component(axis);
  if (c.kind == NoiseKind::identity)
    throw ParameterError(
        "beta_decay_check: identity noise has no polynomial decay to fit");
  const int points = 32;
  const double t_lo = 1e2, t_hi = 1e4;
  std::vector<double> lx(points), ly(points);
  for (int i = 0; i < points; ++i) {
    double f = static_cast<double>(i) / (points - 1);
    double t = t_lo * std::pow(t_hi / t_lo, f);
    double mag = std::abs(noise.cf(axis, t));
    if (!(mag > 0.0))
      throw NumericalError("beta_decay_check: cf vanished on the probe lattice");
    lx[static_cast<size_t>(i)] = std::log(t);
    ly[static_cast<size_t>(i)] = std::log(mag);
  }
  return fit_line(lx, ly).slope;
}

}  // namespace declust

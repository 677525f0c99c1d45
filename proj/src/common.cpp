#include "declust/common.hpp"

#include <algorithm>
#include <cstdio>

namespace declust {

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

uint64_t derive_seed(uint64_t master, uint64_t stream, uint64_t index) {
  uint64_t h = splitmix64(master ^ (0xa0761d6478bd642fULL + stream));
  h = splitmix64(h ^ (0xe7037ed1a0b428dbULL + index));
  return h;
}

size_t Rng::index(size_t n) {
  if (n == 0) throw ParameterError("Rng::index: n must be positive");
  // Rejection sampling to stay unbiased.
  uint64_t limit = UINT64_MAX - (UINT64_MAX % n + 1) % n;
  uint64_t r = next();
  while (r > limit) r = next();
  return static_cast<size_t>(r % n);
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform_open();
  double u2 = uniform01();
  double r = std::sqrt(-2.0 * std::log(u1));
  double a = 2.0 * kPi * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

double Rng::laplace(double sigma) {
  if (!(sigma > 0.0)) throw ParameterError("laplace: sigma must be positive");
  double u = uniform_open();
  return u < 0.5 ? sigma * std::log(2.0 * u) : -sigma * std::log(2.0 * (1.0 - u));
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  size_t n = x.size();
  if (n != y.size() || n < 2)
    throw ParameterError("fit_line: need two equal-length series of size >= 2");
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw ParameterError("fit_line: degenerate abscissae");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (n > 2) {
    double rss = 0.0;
    for (size_t i = 0; i < n; ++i) {
      double r = y[i] - (fit.intercept + fit.slope * x[i]);
      rss += r * r;
    }
    fit.slope_stderr = std::sqrt(rss / (static_cast<double>(n) - 2.0) / sxx);
  }
  return fit;
}

double binomial_tail_pvalue(int m, int s) {
  if (m <= 0) throw ParameterError("binomial_tail_pvalue: m must be positive");
  if (s <= 0) return 1.0;
  if (s > m) return 0.0;
  double tail = 0.0;
  for (int i = s; i <= m; ++i) {
    double logp = std::lgamma(m + 1.0) - std::lgamma(i + 1.0) -
                  std::lgamma(m - i + 1.0) - m * std::log(2.0);
    tail += std::exp(logp);
  }
  return std::min(tail, 1.0);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void Box::validate() const {
  if (lo.size() != hi.size() || lo.empty())
    throw ParameterError("Box: lo/hi must be non-empty and of equal dimension");
  for (size_t j = 0; j < lo.size(); ++j) {
    if (!std::isfinite(lo[j]) || !std::isfinite(hi[j]) || !(lo[j] < hi[j]))
      throw ParameterError("Box: requires finite lo < hi on every axis");
  }
}

bool Box::contains(const double* p, int d) const {
  if (d != dim()) throw ParameterError("Box::contains: dimension mismatch");
  for (int j = 0; j < d; ++j) {
    if (p[j] < lo[j] || p[j] > hi[j]) return false;
  }
  return true;
}

Box Box::expanded(double margin) const {
  Box out = *this;
  for (size_t j = 0; j < lo.size(); ++j) {
    out.lo[j] -= margin;
    out.hi[j] += margin;
  }
  return out;
}

double Box::volume() const {
  double v = 1.0;
  for (size_t j = 0; j < lo.size(); ++j) v *= hi[j] - lo[j];
  return v;
}

}  // namespace declust

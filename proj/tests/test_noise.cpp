#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "declust/noise.hpp"
#include "doctest.h"

using namespace declust;

TEST_CASE("laplace characteristic function closed form") {
  const NoiseModel noise = NoiseModel::laplace(1, 0.2);
  CHECK(noise.cf(0, 0.0).real() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(noise.cf(0, 0.0).imag() == 0.0);
  const NoiseModel unit = NoiseModel::laplace(1, 1.0);
  CHECK(unit.cf(0, 1.0).real() == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(noise.cf(0, 3.0).real() == doctest::Approx(1.0 / (1.0 + 0.04 * 9.0)).epsilon(1e-15));
}

TEST_CASE("identity characteristic function is one everywhere") {
  const NoiseModel noise = NoiseModel::identity(2);
  for (double t : {-100.0, 0.0, 0.5, 4096.0}) {
    CHECK(noise.cf(0, t) == std::complex<double>(1.0, 0.0));
    CHECK(noise.cf(1, t) == std::complex<double>(1.0, 0.0));
  }
}

TEST_CASE("characteristic functions stay positive on a dense lattice") {
  const NoiseModel laplace = NoiseModel::laplace(1, 0.2);
  const NoiseModel wide = NoiseModel::laplace(1, 1.0);
  const int points = 100000;
  for (int i = 0; i < points; ++i) {
    const double t = -1e4 + 2e4 * static_cast<double>(i) / (points - 1);
    for (const NoiseModel* model : {&laplace, &wide}) {
      const std::complex<double> v = model->cf(0, t);
      CHECK(v.imag() == 0.0);
      CHECK(v.real() > 0.0);
      CHECK(std::abs(v) <= 1.0);
    }
  }
}

TEST_CASE("beta bookkeeping") {
  CHECK(NoiseModel::identity(2).beta_bar() == 0.0);
  CHECK(NoiseModel::laplace(1, 0.3).beta_bar() == 2.0);
  CHECK(NoiseModel::laplace(2, 0.3).beta_bar() == 4.0);
  CHECK(NoiseModel::laplace({0.3, 0.5}).beta(1) == 2.0);
  CHECK(NoiseModel::laplace(1, 0.3).pure_identity() == false);
  CHECK(NoiseModel::identity(1).pure_identity() == true);
}

TEST_CASE("noise model parameter validation") {
  CHECK_THROWS_AS(NoiseModel::laplace(1, 0.0), ParameterError);
  CHECK_THROWS_AS(NoiseModel::laplace(1, -0.1), ParameterError);
  CHECK_THROWS_AS(NoiseModel::identity(3), ParameterError);
  CHECK_THROWS_AS(NoiseModel::laplace(0, 0.2), ParameterError);
}

TEST_CASE("identity sampler returns zero vectors") {
  const PointSet eps = NoiseModel::identity(2).sample(3, 99);
  CHECK(eps.size() == 3);
  for (size_t i = 0; i < 3; ++i) {
    CHECK(eps.at(i, 0) == 0.0);
    CHECK(eps.at(i, 1) == 0.0);
  }
}

TEST_CASE("laplace sampler moments") {
  const double sigma = 0.4;
  const size_t n = 100000;
  const PointSet eps = NoiseModel::laplace(1, sigma).sample(n, 7);
  double sum = 0.0, sum2 = 0.0;
  for (size_t i = 0; i < n; ++i) {
    sum += eps.at(i, 0);
    sum2 += eps.at(i, 0) * eps.at(i, 0);
  }
  const double mean = sum / static_cast<double>(n);
  const double var = sum2 / static_cast<double>(n) - mean * mean;
  const double target = 2.0 * sigma * sigma;
  CHECK(std::abs(mean) < 3.0 * std::sqrt(target / static_cast<double>(n)));
  CHECK(var == doctest::Approx(target).epsilon(0.05));
}

TEST_CASE("sampler is bitwise reproducible") {
  const NoiseModel noise = NoiseModel::laplace(2, 0.6);
  const PointSet a = noise.sample(256, 1234);
  const PointSet b = noise.sample(256, 1234);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a.at(i, 0) == b.at(i, 0));
    CHECK(a.at(i, 1) == b.at(i, 1));
  }
}

TEST_CASE("decay diagnostic recovers beta for laplace") {
  CHECK(beta_decay_check(NoiseModel::laplace(1, 0.2), 0) == doctest::Approx(-2.0).epsilon(0.025));
  CHECK(beta_decay_check(NoiseModel::laplace(1, 1.0), 0) == doctest::Approx(-2.0).epsilon(0.025));
}

TEST_CASE("decay diagnostic rejects identity noise") {
  CHECK_THROWS_AS(beta_decay_check(NoiseModel::identity(1), 0), ParameterError);
}

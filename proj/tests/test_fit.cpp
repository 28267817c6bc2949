#include "hbac/fit.hpp"

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

using namespace hbac;
using Catch::Approx;

namespace {

std::vector<std::pair<double, double>> synthetic(double a, double t, int n, double t_max) {
  std::vector<std::pair<double, double>> pts;
  for (int i = 0; i < n; ++i) {
    const double x = t_max * i / (n - 1);
    pts.emplace_back(x, a * std::exp(-x / t));
  }
  return pts;
}

}  // namespace

TEST_CASE("noiseless round trip", "[fit]") {
  const ExponentialFit f = fit_monoexponential(synthetic(1.0, 209.0, 20, 600.0));
  REQUIRE(f.ok());
  CHECK(f.amplitude == Approx(1.0).epsilon(1e-6));
  CHECK(f.time_constant == Approx(209.0).epsilon(1e-6));
  CHECK(f.residual_norm < 1e-10);

  const ExponentialFit neg = fit_monoexponential(synthetic(-0.7, 3.0, 9, 10.0));
  REQUIRE(neg.ok());
  CHECK(neg.amplitude == Approx(-0.7).epsilon(1e-6));
  CHECK(neg.time_constant == Approx(3.0).epsilon(1e-6));
}

TEST_CASE("1% noise, 100 seeds", "[fit]") {
  std::vector<double> rel;
  for (unsigned seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 0.01);
    auto pts = synthetic(1.0, 209.0, 20, 600.0);
    for (auto& p : pts) p.second += noise(rng);
    const ExponentialFit f = fit_monoexponential(pts);
    REQUIRE(f.ok());
    rel.push_back(std::abs(f.time_constant / 209.0 - 1.0));
  }
  std::sort(rel.begin(), rel.end());
  CHECK(rel[94] < 0.05);
}

TEST_CASE("degenerate and invalid input", "[fit]") {
  const std::vector<std::pair<double, double>> flat = {{0, 0.5}, {1, 0.5}, {2, 0.5}, {3, 0.5}};
  CHECK(fit_monoexponential(flat).status == FitStatus::DegenerateInput);
  CHECK_FALSE(fit_monoexponential(flat).ok());

  // Growing data has no positive time constant.
  const ExponentialFit grow = fit_monoexponential({{0, 1.0}, {1, 2.0}, {2, 4.0}, {3, 8.0}});
  CHECK(grow.status == FitStatus::NonPositiveTimeConstant);

  CHECK_THROWS_AS(fit_monoexponential({{0, 1.0}, {1, 0.5}}), std::invalid_argument);
  CHECK_THROWS_AS(fit_monoexponential({{0, 1.0}, {-1, 0.5}, {2, 0.2}}), std::invalid_argument);
}

// Independent reference computations used by the unit tests. Nothing here
// calls into the code path it is used to check.
#pragma once

#include "hbac/core.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

namespace hbac::testing {

/// Maximum of the observable over all 24 reorderings of the populations.
inline double brute_force_unitary_max(const PopulationVector& p, Order obs) {
  std::array<int, 4> perm{0, 1, 2, 3};
  const Vector4 e = order_eigenvalues(obs);
  double best = -1e300;
  do {
    std::array<double, 4> terms{};
    for (int i = 0; i < 4; ++i) terms[i] = e(i) * p[perm[i]];
    std::sort(terms.begin(), terms.end());
    const double v = ((terms[0] + terms[1]) + terms[2]) + terms[3];
    best = std::max(best, v);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

/// Uniformly distributed point on the probability simplex.
inline PopulationVector random_populations(std::mt19937_64& rng) {
  std::exponential_distribution<double> expo(1.0);
  Vector4 v;
  for (int i = 0; i < 4; ++i) v(i) = expo(rng);
  v /= v.sum();
  v(3) = 1.0 - v(0) - v(1) - v(2);
  if (v(3) < 0.0) v(3) = 0.0;
  return PopulationVector(v);
}

using Extended = boost::multiprecision::cpp_bin_float_50;

/// sum_i c_i x^i as an explicit power sum in 50-digit arithmetic.
template <typename Coeffs>
Extended power_sum_extended(const Coeffs& c, const Extended& x) {
  Extended acc = 0;
  Extended xp = 1;
  for (double ci : c) {
    acc += Extended(ci) * xp;
    xp *= x;
  }
  return acc;
}

}  // namespace hbac::testing

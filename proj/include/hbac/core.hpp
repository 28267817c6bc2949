// State space of a spin-1/2 pair in the singlet/triplet basis, thermal
// equilibrium, the Zeeman and singlet order observables, and the unitary
// (Sorensen) bound on an observable.
//
// State order is fixed everywhere in this library:
//   0: singlet |S0>   1: |aa>   2: central triplet |T0>   3: |bb>
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <iostream>
#include <numbers>
#include <stdexcept>
#include <string>

namespace hbac {

inline constexpr int kNumStates = 4;

enum class State : int { Singlet = 0, AlphaAlpha = 1, Central = 2, BetaBeta = 3 };

/// Tolerance used for population conservation and non-negativity checks.
inline constexpr double kPopulationTolerance = 1e-12;

namespace constants {
// CODATA 2018 (exact SI values for k_B, h).
inline constexpr double kHbar = 1.054571817e-34;      // J s
inline constexpr double kBoltzmann = 1.380649e-23;    // J / K
inline constexpr double kGamma13C = 6.728284e7;       // rad s^-1 T^-1
}  // namespace constants

using Vector4 = Eigen::Matrix<double, 4, 1>;
using Matrix4 = Eigen::Matrix<double, 4, 4>;

/// Physical description of one near-equivalent spin pair.
struct SpinSystemParams {
  double j_coupling_hz = 54.141;
  double delta_shift_ppm = 0.057;
  double b0_tesla = 16.4;
  double gamma = constants::kGamma13C;
  double temperature_k = 298.0;
  double t1_s = 7.36;
  double ts_s = 214.0;

  /// Throws std::domain_error unless J != 0, B0 > 0, T > 0 and 0 < T1 < TS.
  void validate() const {
    if (j_coupling_hz == 0.0 || !std::isfinite(j_coupling_hz))
      throw std::domain_error("spin system: J coupling must be nonzero and finite");
    if (!(b0_tesla > 0.0)) throw std::domain_error("spin system: B0 must be positive");
    if (!(temperature_k > 0.0)) throw std::domain_error("spin system: temperature must be positive");
    if (!(t1_s > 0.0)) throw std::domain_error("spin system: T1 must be positive");
    if (!(ts_s > t1_s)) throw std::domain_error("spin system: TS must exceed T1");
  }

  /// Chemical-shift frequency difference in rad/s.
  double omega_delta() const { return gamma * b0_tesla * delta_shift_ppm * 1e-6; }
};

/// Four state populations with unit sum. Entries within kPopulationTolerance
/// below zero are clamped to exactly zero; anything further out is rejected.
class PopulationVector {
 public:
  PopulationVector() : p_(Vector4::Constant(0.25)) {}

  explicit PopulationVector(const Vector4& p) : p_(p) {
    for (int i = 0; i < kNumStates; ++i) {
      if (!std::isfinite(p_(i))) throw std::domain_error("population vector: non-finite entry");
      if (p_(i) < 0.0) {
        if (p_(i) < -kPopulationTolerance)
          throw std::domain_error("population vector: negative population " + std::to_string(p_(i)));
        p_(i) = 0.0;
      }
    }
    if (std::abs(p_.sum() - 1.0) > kPopulationTolerance)
      throw std::domain_error("population vector: populations do not sum to 1");
  }

  PopulationVector(double p1, double p2, double p3, double p4)
      : PopulationVector(Vector4(p1, p2, p3, p4)) {}

  double operator[](int i) const { return p_(i); }
  double operator[](State s) const { return p_(static_cast<int>(s)); }
  const Vector4& values() const { return p_; }

 private:
  Vector4 p_;
};

enum class Order { Zeeman, Singlet };

inline const double kZeemanNorm = 1.0 / std::numbers::sqrt2;
inline const double kSingletNorm = std::numbers::sqrt3 / 2.0;

/// Per-state eigenvalues of the order observable (diagonal in the ST basis).
inline Vector4 order_eigenvalues(Order obs) {
  switch (obs) {
    case Order::Zeeman:
      return kZeemanNorm * Vector4(0.0, 1.0, 0.0, -1.0);
    case Order::Singlet:
      return kSingletNorm * Vector4(1.0, -1.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0);
  }
  throw std::invalid_argument("unknown order observable");
}

inline const char* to_string(Order obs) { return obs == Order::Zeeman ? "ZO" : "SO"; }

/// Thermal polarization hbar*gamma*B0/(kB*T). Prints a warning to std::clog
/// when the value leaves the high-temperature regime (eps > 0.01).
inline double epsilon(const SpinSystemParams& params) {
  if (!(params.temperature_k > 0.0)) throw std::domain_error("epsilon: temperature must be positive");
  if (!(params.b0_tesla > 0.0)) throw std::domain_error("epsilon: B0 must be positive");
  const double eps = constants::kHbar * params.gamma * params.b0_tesla /
                     (constants::kBoltzmann * params.temperature_k);
  if (std::abs(eps) > 0.01)
    std::clog << "warning: epsilon = " << eps << " is outside the high-temperature regime\n";
  return eps;
}

inline void check_epsilon(double eps) {
  if (!(std::abs(eps) < 1.0)) throw std::domain_error("epsilon must satisfy |eps| < 1");
}

/// (1, 1+eps, 1, 1-eps) / 4.
inline PopulationVector thermal_populations(double eps) {
  check_epsilon(eps);
  return PopulationVector(Vector4(1.0, 1.0 + eps, 1.0, 1.0 - eps) / 4.0);
}

inline double measure_order(const PopulationVector& p, Order obs) {
  return order_eigenvalues(obs).dot(p.values());
}

/// Zeeman order of the thermal state, eps / (2 sqrt 2).
inline double equilibrium_zeeman_order(double eps) { return eps / (2.0 * std::numbers::sqrt2); }

/// Sum in ascending order, so the result does not depend on the order in
/// which equal-valued terms were produced.
inline double canonical_sum(std::array<double, kNumStates> terms) {
  std::sort(terms.begin(), terms.end());
  double acc = 0.0;
  for (double t : terms) acc += t;
  return acc;
}

/// Largest value of the observable reachable from p by any unitary: sorted
/// populations paired with sorted eigenvalues.
inline double unitary_max_order(const PopulationVector& p, Order obs) {
  std::array<double, kNumStates> pops{};
  std::array<double, kNumStates> eig{};
  const Vector4 e = order_eigenvalues(obs);
  for (int i = 0; i < kNumStates; ++i) {
    pops[i] = p[i];
    eig[i] = e(i);
  }
  std::sort(pops.begin(), pops.end(), std::greater<>());
  std::sort(eig.begin(), eig.end(), std::greater<>());
  std::array<double, kNumStates> terms{};
  for (int i = 0; i < kNumStates; ++i) terms[i] = pops[i] * eig[i];
  return canonical_sum(terms);
}

}  // namespace hbac

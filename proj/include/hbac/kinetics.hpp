// Finite-time relaxation: a phenomenological population generator calibrated
// to (T1, TS), finite-duration resets, the pumped protocol with detection,
// and reset-delay / evolution-delay sweeps.
#pragma once

#include "hbac/core.hpp"
#include "hbac/detail/linalg.hpp"
#include "hbac/protocol.hpp"

#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace hbac {

/// Generator of population kinetics, R = kT (Theta - I) + kS (Peq - I).
/// Columns sum to zero and the thermal vector spans its null space.
struct RateMatrix {
  Matrix4 r = Matrix4::Zero();
  double k_t = 0.0;  // triplet equilibration rate, 1/s
  double k_s = 0.0;  // singlet exchange rate, 1/s
  double eps = 0.0;
};

/// Builds R from the two rates without calibration checks.
inline RateMatrix make_rate_matrix(double k_t, double k_s, double eps) {
  if (k_t < 0.0 || k_s < 0.0) throw std::domain_error("rate matrix: rates must be non-negative");
  const PopulationVector peq = thermal_populations(eps);
  const Matrix4 p_eq = peq.values() * Vector4::Ones().transpose();
  const Matrix4 id = Matrix4::Identity();
  RateMatrix out;
  out.r = k_t * (ideal_reset(eps).matrix() - id) + k_s * (p_eq - id);
  out.k_t = k_t;
  out.k_s = k_s;
  out.eps = eps;
  return out;
}

struct ModeRates {
  double zeeman = 0.0;   // decay rate of the ZO mode, 1/s
  double singlet = 0.0;  // decay rate of the SO mode, 1/s
};

/// Decay rates of the eigenmodes of R that best overlap the ZO and SO
/// population patterns.
inline ModeRates mode_decay_rates(const RateMatrix& rate) {
  Eigen::EigenSolver<Matrix4> es(rate.r, true);
  if (es.info() != Eigen::Success) throw std::runtime_error("rate matrix: eigen decomposition failed");
  auto best_rate = [&](const Vector4& pattern) {
    double best_overlap = -1.0;
    double rate_out = 0.0;
    for (int i = 0; i < kNumStates; ++i) {
      const Eigen::Vector4cd v = es.eigenvectors().col(i);
      const double overlap = std::abs(v.dot(pattern.cast<std::complex<double>>())) /
                             (v.norm() * pattern.norm());
      if (overlap > best_overlap) {
        best_overlap = overlap;
        rate_out = -es.eigenvalues()(i).real();
      }
    }
    return rate_out;
  };
  return {best_rate(order_eigenvalues(Order::Zeeman)),
          best_rate(Vector4(3.0, -1.0, -1.0, -1.0))};
}

/// kS = 1/TS, kT = 1/T1 - 1/TS. The construction is checked against an
/// eigen-analysis of the eps = 0 generator.
inline RateMatrix calibrate_rates(double t1, double ts, double eps) {
  if (!(t1 > 0.0)) throw std::domain_error("calibrate_rates: T1 must be positive");
  if (!(ts > t1)) throw std::domain_error("calibrate_rates: TS must exceed T1");
  const double k_s = 1.0 / ts;
  const double k_t = 1.0 / t1 - 1.0 / ts;

  const ModeRates modes = mode_decay_rates(make_rate_matrix(k_t, k_s, 0.0));
  if (std::abs(modes.zeeman * t1 - 1.0) > 1e-9 || std::abs(modes.singlet * ts - 1.0) > 1e-9)
    throw std::logic_error("calibrate_rates: eigenmode rates do not reproduce T1/TS");
  return make_rate_matrix(k_t, k_s, eps);
}

/// exp(R tau). Identity at tau = 0, tends to the thermal projector as
/// tau -> infinity.
inline TransferMatrix finite_reset(const RateMatrix& rate, double tau) {
  if (!(tau >= 0.0)) throw std::domain_error("finite_reset: negative duration");
  Matrix4 e = detail::expm_generator<4>(rate.r, tau);
  // Re-impose exact column normalization lost to roundoff in the eigen route.
  for (int c = 0; c < kNumStates; ++c) {
    for (int r = 0; r < kNumStates; ++r)
      if (e(r, c) < 0.0 && e(r, c) > -kPopulationTolerance) e(r, c) = 0.0;
    e.col(c) /= e.col(c).sum();
  }
  return TransferMatrix(e, TransferMatrix::Label::FiniteReset);
}

/// Relaxation over tau in the high-temperature limit: the infinite-temperature
/// propagator exp(R0 tau) acting on the deviation from thermal equilibrium.
/// Same rates as `rate`; exactly linear in eps.
inline PopulationMap relaxation_map(const RateMatrix& rate, double tau) {
  const RateMatrix r0 = make_rate_matrix(rate.k_t, rate.k_s, 0.0);
  return PopulationMap::relaxation(finite_reset(r0, tau), thermal_populations(rate.eps));
}

/// Normalized singlet-filtered signal: sqrt(2/3) SO / ZO_eq. Equals 1 for
/// the ideal pumped steady state and 2/3 at the unitary bound.
inline double detected_signal(double so, double eps) {
  return std::sqrt(2.0 / 3.0) * so / equilibrium_zeeman_order(eps);
}

struct KineticProtocolResult {
  PopulationVector populations_after_pump;
  PopulationVector populations_detected;  // after the evolution interval
  std::vector<std::pair<int, double>> so_trace;  // (permutation count, SO)
  double so = 0.0;
  double signal = 0.0;
  std::optional<double> zo_final;
};

/// Pumped protocol with every reset replaced by relaxation over tau,
/// followed by an evolution interval tau_ev and the rank-0 detection model.
inline KineticProtocolResult run_kinetic(int n_p, double tau, double tau_ev,
                                         const SpinSystemParams& params) {
  if (n_p < 0) throw std::domain_error("run_kinetic: negative permutation count");
  if (!(tau >= 0.0) || !(tau_ev >= 0.0)) throw std::domain_error("run_kinetic: negative duration");
  params.validate();
  const double eps = epsilon(params);
  const RateMatrix rate = calibrate_rates(params.t1_s, params.ts_s, eps);
  const PopulationMap reset = relaxation_map(rate, tau);

  KineticProtocolResult out;
  out.populations_after_pump = apply_sequence(
      ProtocolSequence::pumping(n_p), thermal_populations(eps), [&] { return reset; },
      [&](double d) { return relaxation_map(rate, d); },
      [&](int k, const PopulationVector& p) {
        out.so_trace.emplace_back(k, measure_order(p, Order::Singlet));
      });
  out.populations_detected = relaxation_map(rate, tau_ev).apply(out.populations_after_pump);
  out.so = measure_order(out.populations_detected, Order::Singlet);
  out.signal = detected_signal(out.so, eps);
  return out;
}

/// Magnetization protocol for even n_p: pump, final reset of duration
/// tau_prime, then the singlet <-> |aa> swap. Fills zo_final.
inline KineticProtocolResult run_kinetic_enhance(int n_p, double tau, double tau_prime,
                                                 const SpinSystemParams& params) {
  if (n_p % 2 != 0) throw std::domain_error("run_kinetic_enhance: n_p must be even");
  if (!(tau_prime >= 0.0)) throw std::domain_error("run_kinetic_enhance: negative duration");
  KineticProtocolResult out = run_kinetic(n_p, tau, 0.0, params);
  const double eps = epsilon(params);
  const RateMatrix rate = calibrate_rates(params.t1_s, params.ts_s, eps);
  const PopulationVector final_p = permutation_matrix(Permutation::Pi12)
                                        .apply(relaxation_map(rate, tau_prime).apply(out.populations_after_pump));
  out.zo_final = measure_order(final_p, Order::Zeeman);
  return out;
}

struct TauSweep {
  std::vector<std::pair<double, double>> points;  // (tau, signal)
  double tau_star = 0.0;
  double signal_star = 0.0;
};

inline void check_grid(const std::vector<double>& grid, const char* what) {
  if (grid.empty()) throw std::invalid_argument(std::string(what) + ": empty grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0)) throw std::invalid_argument(std::string(what) + ": negative grid value");
    if (i > 0 && !(grid[i] > grid[i - 1]))
      throw std::invalid_argument(std::string(what) + ": grid must be strictly increasing");
  }
}

inline TauSweep sweep_tau(int n_p, const std::vector<double>& tau_grid,
                          const SpinSystemParams& params) {
  check_grid(tau_grid, "sweep_tau");
  TauSweep out;
  out.points.reserve(tau_grid.size());
  for (double tau : tau_grid) out.points.emplace_back(tau, run_kinetic(n_p, tau, 0.0, params).signal);
  std::size_t best = 0;
  for (std::size_t i = 1; i < out.points.size(); ++i)
    if (out.points[i].second > out.points[best].second) best = i;
  out.tau_star = out.points[best].first;
  out.signal_star = out.points[best].second;
  return out;
}

inline std::vector<std::pair<double, double>> decay_curve(int n_p, double tau,
                                                          const std::vector<double>& tau_ev_grid,
                                                          const SpinSystemParams& params) {
  check_grid(tau_ev_grid, "decay_curve");
  std::vector<std::pair<double, double>> out;
  out.reserve(tau_ev_grid.size());
  for (double t : tau_ev_grid) out.emplace_back(t, run_kinetic(n_p, tau, t, params).signal);
  return out;
}

}  // namespace hbac

// Pulse-level dynamics of the two-spin system: rotating-frame Hamiltonians,
// the AB spectrum, the polynomial APSOC pulse, hard and composite pulses,
// piecewise-constant propagation, and the population transfer that a
// pulse sequence realizes.
//
// Product basis order is {|aa>, |ab>, |ba>, |bb>}; the singlet/triplet basis
// follows the state order of core.hpp.
#pragma once

#include "hbac/core.hpp"
#include "hbac/detail/linalg.hpp"
#include "hbac/protocol.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <complex>
#include <fstream>
#include <istream>
#include <numbers>
#include <stdexcept>
#include <string>
#include <system_error>

namespace hbac {

using Complex = std::complex<double>;
using CMatrix4 = Eigen::Matrix<Complex, 4, 4>;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct SpinOperatorSet {
  CMatrix4 i1x, i1y, i1z, i2x, i2y, i2z;
  CMatrix4 fx, fy, fz;  // collective I1 + I2
  /// Columns are the singlet/triplet states expressed in the product basis.
  CMatrix4 st_basis;
};

inline const SpinOperatorSet& spin_operators() {
  static const SpinOperatorSet ops = [] {
    using M2 = Eigen::Matrix2cd;
    M2 sx, sy, sz;
    const Complex i(0.0, 1.0);
    sx << 0.0, 0.5, 0.5, 0.0;
    sy << 0.0, -0.5 * i, 0.5 * i, 0.0;
    sz << 0.5, 0.0, 0.0, -0.5;
    const M2 e = M2::Identity();
    auto kron = [](const M2& a, const M2& b) {
      CMatrix4 out;
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) out.block<2, 2>(2 * r, 2 * c) = a(r, c) * b;
      return out;
    };
    SpinOperatorSet s;
    s.i1x = kron(sx, e);
    s.i1y = kron(sy, e);
    s.i1z = kron(sz, e);
    s.i2x = kron(e, sx);
    s.i2y = kron(e, sy);
    s.i2z = kron(e, sz);
    s.fx = s.i1x + s.i2x;
    s.fy = s.i1y + s.i2y;
    s.fz = s.i1z + s.i2z;
    const double h = 1.0 / std::numbers::sqrt2;
    s.st_basis = CMatrix4::Zero();
    s.st_basis(1, 0) = h;  // |S0> = (|ab> - |ba>)/sqrt2
    s.st_basis(2, 0) = -h;
    s.st_basis(0, 1) = 1.0;  // |aa>
    s.st_basis(1, 2) = h;    // |T0> = (|ab> + |ba>)/sqrt2
    s.st_basis(2, 2) = h;
    s.st_basis(3, 3) = 1.0;  // |bb>
    return s;
  }();
  return ops;
}

/// How a carrier ("APSOC(+/-)") offset maps onto the resonance offset that
/// enters the rotating-frame Hamiltonian.
///   CarrierShift:    Omega = -2 pi offset (moving the carrier up lowers the
///                    spins' offset from it); the default.
///   ResonanceOffset: Omega = +2 pi offset.
enum class FrameConvention { CarrierShift, ResonanceOffset };

inline double resonance_offset_hz(double carrier_offset_hz, FrameConvention conv) {
  return conv == FrameConvention::CarrierShift ? -carrier_offset_hz : carrier_offset_hz;
}

/// Rotating-frame Hamiltonian in rad/s:
/// Omega (I1z + I2z) + (omega_delta / 2)(I1z - I2z) + 2 pi J I1.I2.
inline CMatrix4 free_hamiltonian(const SpinSystemParams& params, double offset_hz) {
  const auto& s = spin_operators();
  const double omega_off = kTwoPi * offset_hz;
  const double omega_delta = params.omega_delta();
  const double coupling = kTwoPi * params.j_coupling_hz;
  return omega_off * s.fz + 0.5 * omega_delta * (s.i1z - s.i2z) +
         coupling * (s.i1x * s.i2x + s.i1y * s.i2y + s.i1z * s.i2z);
}

/// RF term w (Fx cos(phase) + Fy sin(phase)) in rad/s.
inline CMatrix4 rf_hamiltonian(double nutation_rad_s, double phase) {
  const auto& s = spin_operators();
  return nutation_rad_s * (std::cos(phase) * s.fx + std::sin(phase) * s.fy);
}

struct AbLine {
  double frequency_hz = 0.0;
  double intensity = 0.0;  // 1 +/- sin(2 theta) normalization, sum 4
};

/// The four single-quantum lines of the AB system at zero offset, sorted by
/// frequency. Intensities are 4 |<a|Fx|b>|^2.
inline std::array<AbLine, 4> ab_spectrum(const SpinSystemParams& params) {
  if (params.j_coupling_hz == 0.0) throw std::domain_error("ab_spectrum: J must be nonzero");
  const auto& s = spin_operators();
  Eigen::SelfAdjointEigenSolver<CMatrix4> es(free_hamiltonian(params, 0.0));
  const CMatrix4& v = es.eigenvectors();
  const CMatrix4 fx = v.adjoint() * s.fx * v;
  const CMatrix4 fz = v.adjoint() * s.fz * v;

  std::array<AbLine, 4> lines{};
  int n = 0;
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      // Fz commutes with H at zero offset, so eigenstates carry definite M.
      if (std::abs(fz(a, a).real() - fz(b, b).real() - 1.0) > 1e-6) continue;
      if (n == 4) throw std::logic_error("ab_spectrum: more than four transitions");
      lines[n].frequency_hz = (es.eigenvalues()(a) - es.eigenvalues()(b)) / kTwoPi;
      lines[n].intensity = 4.0 * std::norm(fx(a, b));
      ++n;
    }
  }
  if (n != 4) throw std::logic_error("ab_spectrum: expected four transitions");
  std::sort(lines.begin(), lines.end(),
            [](const AbLine& x, const AbLine& y) { return x.frequency_hz < y.frequency_hz; });
  return lines;
}

// ---------------------------------------------------------------------------
// APSOC pulse

inline constexpr int kApsocCoefficientCount = 21;
using ApsocCoefficients = std::array<double, kApsocCoefficientCount>;

/// Default polynomial coefficients C0..C20 of the APSOC amplitude.
inline constexpr ApsocCoefficients kApsocCoefficients = {
    -3.58531e-3, 2.91521,     -160.639,    6.58521e3,   145.473e3,   2.01387e6,  -18.9512e6,
    126.672e6,   -617.009e6,  2.22025e9,   -5.9162e9,   11.5203e9,   -15.6681e9, 12.7611e9,
    -1.0036e9,   -12.8512e9,  18.9193e9,   -14.8478e9,  7.07406e9,   -1.93568e9, 235.046e6};

struct PulseShape {
  double max_amplitude = kTwoPi * 181.0;  // rad/s
  double duration = 0.36;                 // s
  ApsocCoefficients coefficients = kApsocCoefficients;
  double offset_hz = 35.0;  // carrier offset magnitude; the sign is set per permutation
  double phase = 0.0;       // rad

  void validate() const {
    if (!(duration > 0.0)) throw std::domain_error("pulse shape: duration must be positive");
    for (double c : coefficients)
      if (!std::isfinite(c)) throw std::domain_error("pulse shape: non-finite coefficient");
  }
};

inline PulseShape default_apsoc_shape() { return PulseShape{}; }

/// Reads exactly 21 coefficients, one per line (decimal or scientific).
/// Surrounding whitespace is ignored; a trailing empty line is allowed.
inline ApsocCoefficients parse_pulse_coefficients(std::istream& in) {
  ApsocCoefficients out{};
  std::string line;
  int n = 0;
  int line_no = 0;
  bool saw_blank = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) {
      saw_blank = true;
      continue;
    }
    if (saw_blank) throw std::invalid_argument("coefficients: blank line before line " + std::to_string(line_no));
    const auto last = line.find_last_not_of(" \t\r");
    const char* begin = line.data() + first;
    const char* end = line.data() + last + 1;
    if (*begin == '+') ++begin;
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end)
      throw std::invalid_argument("coefficients: cannot parse line " + std::to_string(line_no));
    if (n == kApsocCoefficientCount)
      throw std::invalid_argument("coefficients: more than 21 values");
    out[n++] = value;
  }
  if (n != kApsocCoefficientCount)
    throw std::invalid_argument("coefficients: expected 21 values, got " + std::to_string(n));
  return out;
}

inline ApsocCoefficients load_pulse_coefficients(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::system_error(errno, std::generic_category(), "cannot open " + path);
  return parse_pulse_coefficients(in);
}

/// Horner evaluation of max_amplitude * sum_i C_i (t/T)^i.
inline double apsoc_amplitude(const PulseShape& shape, double t) {
  if (!(t >= 0.0 && t <= shape.duration))
    throw std::domain_error("apsoc_amplitude: t outside [0, T]");
  const double x = t / shape.duration;
  double acc = 0.0;
  for (int i = kApsocCoefficientCount - 1; i >= 0; --i) acc = acc * x + shape.coefficients[i];
  return shape.max_amplitude * acc;
}

struct AmplitudeRange {
  double min = 0.0;
  double max = 0.0;
};

/// Min and max of the amplitude on a uniform grid of `samples` points.
inline AmplitudeRange apsoc_amplitude_range(const PulseShape& shape, int samples = 10001) {
  AmplitudeRange r{apsoc_amplitude(shape, 0.0), apsoc_amplitude(shape, 0.0)};
  for (int k = 1; k < samples; ++k) {
    const double w = apsoc_amplitude(shape, std::min(shape.duration, shape.duration * k / (samples - 1)));
    r.min = std::min(r.min, w);
    r.max = std::max(r.max, w);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Propagation

inline constexpr double kUnitarityTolerance = 1e-9;
inline constexpr int kDefaultPulseSteps = 20000;

class Propagator {
 public:
  Propagator() : u_(CMatrix4::Identity()) {}

  explicit Propagator(const CMatrix4& u) : u_(u) {
    if (unitarity_error() > kUnitarityTolerance)
      throw std::domain_error("propagator: matrix is not unitary");
  }

  const CMatrix4& matrix() const { return u_; }

  double unitarity_error() const { return (u_ * u_.adjoint() - CMatrix4::Identity()).norm(); }

  /// `*this` acts after `rhs`.
  Propagator operator*(const Propagator& rhs) const { return Propagator(CMatrix4(u_ * rhs.u_)); }

 private:
  CMatrix4 u_;
};

/// Piecewise-constant midpoint propagation of H(t) over [t_begin, t_end].
template <typename HamiltonianFn>
Propagator propagate(HamiltonianFn&& hamiltonian_of_t, double t_begin, double t_end, int n_steps) {
  if (n_steps < 1) throw std::invalid_argument("propagate: n_steps must be >= 1");
  const double dt = (t_end - t_begin) / n_steps;
  CMatrix4 u = CMatrix4::Identity();
  for (int k = 0; k < n_steps; ++k) {
    const double t_mid = t_begin + (k + 0.5) * dt;
    const CMatrix4 h = hamiltonian_of_t(t_mid);
    u = detail::expm_hermitian<4>(h, dt) * u;
  }
  // Nearest unitary (polar factor) removes the roundoff drift of long products.
  Eigen::JacobiSVD<CMatrix4> svd(u, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return Propagator(CMatrix4(svd.matrixU() * svd.matrixV().adjoint()));
}

/// Ideal hard pulse: flip angle `beta` about the axis at `phase` in the
/// transverse plane, on the collective spin.
inline Propagator hard_pulse(double beta, double phase) {
  return Propagator(detail::expm_hermitian<4>(rf_hamiltonian(1.0, phase), beta));
}

inline double deg(double degrees) { return degrees * std::numbers::pi / 180.0; }

/// 180_{+-30} 90_{+-150} with flip angles scaled by `amplitude_scale`.
/// At unit scale x magnetization goes to -z for sign = +1 and +z for -1.
inline Propagator composite_pulse_propagator(int sign, double amplitude_scale) {
  if (sign != 1 && sign != -1) throw std::invalid_argument("composite pulse: sign must be +1 or -1");
  if (!(amplitude_scale > 0.0)) throw std::domain_error("composite pulse: amplitude scale must be positive");
  const Propagator first = hard_pulse(std::numbers::pi * amplitude_scale, sign * deg(30.0));
  const Propagator second = hard_pulse(0.5 * std::numbers::pi * amplitude_scale, sign * deg(150.0));
  return second * first;
}

/// Single 90 degree pulse with the same nominal x -> -/+z action.
inline Propagator simple_pulse_propagator(int sign, double amplitude_scale) {
  if (sign != 1 && sign != -1) throw std::invalid_argument("simple pulse: sign must be +1 or -1");
  if (!(amplitude_scale > 0.0)) throw std::domain_error("simple pulse: amplitude scale must be positive");
  return hard_pulse(0.5 * std::numbers::pi * amplitude_scale, sign * deg(90.0));
}

/// Overlap of U Fx U^dagger with the target -sign * Fz, normalized so that a
/// perfect rotation gives 1.
inline double x_to_z_overlap(const Propagator& u, int sign) {
  const auto& s = spin_operators();
  const CMatrix4 rotated = u.matrix() * s.fx * u.matrix().adjoint();
  const double proj = (rotated * s.fz).trace().real() / (s.fz * s.fz).trace().real();
  return -sign * proj;
}

/// T(s, t) = |<s|U|t>|^2 in the singlet/triplet basis.
inline TransferMatrix population_transfer(const Propagator& u) {
  const auto& b = spin_operators().st_basis;
  const CMatrix4 m = b.adjoint() * u.matrix() * b;
  return TransferMatrix(Matrix4(m.cwiseAbs2()), TransferMatrix::Label::Composite);
}

/// (1/4) trace(P^T T).
inline double permutation_fidelity(const TransferMatrix& t, const TransferMatrix& target) {
  return (target.matrix().transpose() * t.matrix()).trace() / 4.0;
}

struct PermutationSimulation {
  Propagator propagator;
  TransferMatrix transfer;
  double fidelity = 0.0;
};

/// Carrier offset and composite-pulse phase sign that implement `kind`:
/// pi124 uses APSOC(-) with 180_30 90_150, pi142 the opposite signs.
inline int permutation_sign(Permutation kind) {
  switch (kind) {
    case Permutation::Pi124: return -1;
    case Permutation::Pi142: return +1;
    case Permutation::Pi12: break;
  }
  throw std::invalid_argument("simulate_permutation: only pi124 and pi142 are pulse sequences");
}

/// APSOC pulse then composite 90 degree pulse, scored against the target
/// cyclic permutation.
inline PermutationSimulation simulate_permutation(Permutation kind, const SpinSystemParams& params,
                                                  const PulseShape& shape,
                                                  int n_steps = kDefaultPulseSteps,
                                                  FrameConvention conv = FrameConvention::CarrierShift) {
  shape.validate();
  const double carrier = permutation_sign(kind) * std::abs(shape.offset_hz);
  const double resonance = resonance_offset_hz(carrier, conv);
  // The composite-pulse phase sense follows the frame as well, so a flipped
  // convention mirrors the whole sequence.
  const int composite_sign = resonance >= 0.0 ? 1 : -1;
  const CMatrix4 h0 = free_hamiltonian(params, resonance);
  const auto& s = spin_operators();
  const CMatrix4 rf_axis = std::cos(shape.phase) * s.fx + std::sin(shape.phase) * s.fy;

  const Propagator apsoc = propagate(
      [&](double t) -> CMatrix4 { return h0 + apsoc_amplitude(shape, t) * rf_axis; }, 0.0,
      shape.duration, n_steps);
  const Propagator total = composite_pulse_propagator(composite_sign, 1.0) * apsoc;

  PermutationSimulation out{total, population_transfer(total), 0.0};
  out.fidelity = permutation_fidelity(out.transfer, permutation_matrix(kind));
  return out;
}

// ---------------------------------------------------------------------------
// Density operators and the rank-0 filter

class DensityOperator {
 public:
  DensityOperator() : rho_(CMatrix4::Identity() / 4.0) {}

  explicit DensityOperator(const CMatrix4& rho) : rho_(rho) {
    if ((rho_ - rho_.adjoint()).norm() > 1e-12) throw std::domain_error("density operator: not Hermitian");
    if (std::abs(rho_.trace() - Complex(1.0)) > 1e-12)
      throw std::domain_error("density operator: trace is not 1");
  }

  /// Diagonal state in the singlet/triplet basis.
  static DensityOperator from_populations(const PopulationVector& p) {
    const auto& b = spin_operators().st_basis;
    const CMatrix4 d = p.values().cast<Complex>().asDiagonal();
    return DensityOperator(CMatrix4(b * d * b.adjoint()));
  }

  const CMatrix4& matrix() const { return rho_; }

  /// Diagonal of rho in the singlet/triplet basis.
  PopulationVector populations() const {
    const auto& b = spin_operators().st_basis;
    const CMatrix4 m = b.adjoint() * rho_ * b;
    return PopulationVector(Vector4(m.diagonal().real()));
  }

  DensityOperator evolved(const Propagator& u) const {
    const CMatrix4 r = u.matrix() * rho_ * u.matrix().adjoint();
    return DensityOperator(CMatrix4(0.5 * (r + r.adjoint())));
  }

 private:
  CMatrix4 rho_;
};

/// Traceless singlet-order operator |S0><S0| - (1/3)(1 - |S0><S0|).
inline CMatrix4 singlet_order_operator() {
  const auto& b = spin_operators().st_basis;
  const CMatrix4 ps = b.col(0) * b.col(0).adjoint();
  return ps - (CMatrix4::Identity() - ps) / 3.0;
}

/// Projection onto span{1/4, singlet-order operator}: the part of rho that
/// passes a rank-0 filter.
inline DensityOperator t00_project(const DensityOperator& rho) {
  const CMatrix4 q = singlet_order_operator();
  const Complex weight = (rho.matrix() * q).trace() / (q * q).trace();
  CMatrix4 out = rho.matrix().trace() * CMatrix4::Identity() / 4.0 + weight.real() * q;
  return DensityOperator(out);
}

}  // namespace hbac

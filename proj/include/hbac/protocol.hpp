// Ideal protocol algebra: population permutations, the triplet thermal reset,
// the pumping cycle and its closed-form build-up, and Zeeman enhancement.
#pragma once

#include "hbac/core.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace hbac {

enum class Permutation { Pi124, Pi142, Pi12 };

inline const char* to_string(Permutation p) {
  switch (p) {
    case Permutation::Pi124: return "pi124";
    case Permutation::Pi142: return "pi142";
    case Permutation::Pi12: return "pi12";
  }
  return "?";
}

/// Column-stochastic 4x4 map acting on population column vectors.
class TransferMatrix {
 public:
  enum class Label { Pi124, Pi142, Pi12, IdealReset, Cycle, FiniteReset, Composite };

  TransferMatrix() : m_(Matrix4::Identity()), label_(Label::Composite) {}

  /// Validates column sums and non-negativity; entries in (-tol, 0) are
  /// clamped to zero.
  TransferMatrix(const Matrix4& m, Label label) : m_(m), label_(label) {
    for (int c = 0; c < kNumStates; ++c) {
      for (int r = 0; r < kNumStates; ++r) {
        double& v = m_(r, c);
        if (!std::isfinite(v)) throw std::domain_error("transfer matrix: non-finite entry");
        if (v < 0.0) {
          if (v < -kPopulationTolerance)
            throw std::domain_error("transfer matrix: negative entry " + std::to_string(v));
          v = 0.0;
        }
      }
      if (std::abs(m_.col(c).sum() - 1.0) > kPopulationTolerance)
        throw std::domain_error("transfer matrix: column " + std::to_string(c) + " does not sum to 1");
    }
  }

  const Matrix4& matrix() const { return m_; }
  Label label() const { return label_; }
  double operator()(int r, int c) const { return m_(r, c); }

  PopulationVector apply(const PopulationVector& p) const {
    return PopulationVector(Vector4(m_ * p.values()));
  }

  /// Matrix product; `*this` acts after `rhs`.
  TransferMatrix operator*(const TransferMatrix& rhs) const {
    return TransferMatrix(Matrix4(m_ * rhs.m_), Label::Composite);
  }

  TransferMatrix pow(int k) const {
    if (k < 0) throw std::domain_error("transfer matrix: negative power");
    if (k == 1) return *this;
    Matrix4 out = Matrix4::Identity();
    Matrix4 base = m_;
    while (k > 0) {
      if (k & 1) out = base * out;
      base = base * base;
      k >>= 1;
    }
    return TransferMatrix(out, Label::Composite);
  }

 private:
  Matrix4 m_;
  Label label_;
};

inline TransferMatrix permutation_matrix(Permutation which) {
  Matrix4 m = Matrix4::Zero();
  switch (which) {
    case Permutation::Pi124:
      // |1> -> |2> -> |4> -> |1>
      m(1, 0) = 1.0;
      m(3, 1) = 1.0;
      m(2, 2) = 1.0;
      m(0, 3) = 1.0;
      return TransferMatrix(m, TransferMatrix::Label::Pi124);
    case Permutation::Pi142:
      m(3, 0) = 1.0;
      m(0, 1) = 1.0;
      m(2, 2) = 1.0;
      m(1, 3) = 1.0;
      return TransferMatrix(m, TransferMatrix::Label::Pi142);
    case Permutation::Pi12:
      m(1, 0) = 1.0;
      m(0, 1) = 1.0;
      m(2, 2) = 1.0;
      m(3, 3) = 1.0;
      return TransferMatrix(m, TransferMatrix::Label::Pi12);
  }
  throw std::invalid_argument("permutation_matrix: unknown label");
}

/// Triplet thermal reset to first order in eps. The singlet population is
/// untouched; every triplet column becomes (1+eps, 1, 1-eps)/3.
inline TransferMatrix ideal_reset(double eps) {
  check_epsilon(eps);
  Matrix4 m = Matrix4::Zero();
  m(0, 0) = 1.0;
  for (int c = 1; c < kNumStates; ++c) {
    m(1, c) = (1.0 + eps) / 3.0;
    m(2, c) = 1.0 / 3.0;
    m(3, c) = (1.0 - eps) / 3.0;
  }
  return TransferMatrix(m, TransferMatrix::Label::IdealReset);
}

/// One pumping cycle (reset, pi124, reset, pi142) in chronological order.
inline TransferMatrix cycle_matrix(double eps) {
  const TransferMatrix reset = ideal_reset(eps);
  const TransferMatrix m = permutation_matrix(Permutation::Pi142) * reset *
                           permutation_matrix(Permutation::Pi124) * reset;
  return TransferMatrix(m.matrix(), TransferMatrix::Label::Cycle);
}

// ---------------------------------------------------------------------------
// High-temperature (first order in eps) maps
//
// Applying the reset matrix above literally mixes orders: its entries are
// first order in eps, so products of it pick up O(eps^2) terms that the
// model does not contain. The engines instead relax the deviation from
// equilibrium, p -> p_eq + A (p - p_eq), with eps-independent A. Results are
// then exactly linear in eps and the closed forms hold to roundoff.

/// Affine population map p -> A p + b. Columns of A sum to 1 and b sums to 0,
/// so total population is conserved.
class PopulationMap {
 public:
  PopulationMap() : linear_(Matrix4::Identity()), offset_(Vector4::Zero()) {}

  explicit PopulationMap(const TransferMatrix& t) : linear_(t.matrix()), offset_(Vector4::Zero()) {}

  PopulationMap(const Matrix4& linear, const Vector4& offset) : linear_(linear), offset_(offset) {
    for (int c = 0; c < kNumStates; ++c)
      if (std::abs(linear_.col(c).sum() - 1.0) > kPopulationTolerance)
        throw std::domain_error("population map: linear part does not conserve population");
    if (std::abs(offset_.sum()) > kPopulationTolerance)
      throw std::domain_error("population map: offset does not sum to zero");
  }

  /// Relaxation toward `fixed_point`: p -> fixed_point + A (p - fixed_point).
  static PopulationMap relaxation(const TransferMatrix& a, const PopulationVector& fixed_point) {
    const Vector4 pe = fixed_point.values();
    return PopulationMap(a.matrix(), Vector4(pe - a.matrix() * pe));
  }

  const Matrix4& linear() const { return linear_; }
  const Vector4& offset() const { return offset_; }

  PopulationVector apply(const PopulationVector& p) const {
    return PopulationVector(Vector4(linear_ * p.values() + offset_));
  }

  /// `*this` acts after `rhs`.
  PopulationMap operator*(const PopulationMap& rhs) const {
    return PopulationMap(Matrix4(linear_ * rhs.linear_), Vector4(linear_ * rhs.offset_ + offset_));
  }

  PopulationMap pow(int k) const {
    if (k < 0) throw std::domain_error("population map: negative power");
    PopulationMap out;
    for (int i = 0; i < k; ++i) out = *this * out;
    return out;
  }

 private:
  Matrix4 linear_;
  Vector4 offset_;
};

/// Triplet thermal reset in the high-temperature limit: the eps = 0 reset
/// acting on the deviation from thermal equilibrium. Agrees with
/// ideal_reset(eps) whenever the triplet populations sum to 3/4.
inline PopulationMap high_temperature_reset(double eps) {
  return PopulationMap::relaxation(ideal_reset(0.0), thermal_populations(eps));
}

/// The pumping cycle built from high-temperature resets.
inline PopulationMap high_temperature_cycle(double eps) {
  const PopulationMap reset = high_temperature_reset(eps);
  return PopulationMap(permutation_matrix(Permutation::Pi142)) * reset *
         PopulationMap(permutation_matrix(Permutation::Pi124)) * reset;
}

// ---------------------------------------------------------------------------
// Protocol sequences

struct PermuteStep {
  Permutation which;
};
struct ResetStep {};
struct EvolveStep {
  double duration_s;
};

using ProtocolStep = std::variant<PermuteStep, ResetStep, EvolveStep>;

/// Ordered list of protocol steps, chronological.
class ProtocolSequence {
 public:
  ProtocolSequence() = default;
  explicit ProtocolSequence(std::vector<ProtocolStep> steps) : steps_(std::move(steps)) {}

  /// Pumping sequence for n_p permutations: C^(n_p/2) for even n_p and
  /// C^((n_p-1)/2), reset, pi124 for odd n_p, with
  /// C = (reset, pi124, reset, pi142).
  static ProtocolSequence pumping(int n_p) {
    if (n_p < 0) throw std::domain_error("pumping sequence: negative permutation count");
    std::vector<ProtocolStep> steps;
    steps.reserve(2 * static_cast<std::size_t>(n_p));
    for (int k = 0; k < n_p; ++k) {
      steps.emplace_back(ResetStep{});
      steps.emplace_back(PermuteStep{k % 2 == 0 ? Permutation::Pi124 : Permutation::Pi142});
    }
    return ProtocolSequence(std::move(steps));
  }

  ProtocolSequence& then(ProtocolStep step) {
    steps_.push_back(step);
    return *this;
  }

  const std::vector<ProtocolStep>& steps() const { return steps_; }
  std::size_t size() const { return steps_.size(); }

  int permutation_count() const {
    int n = 0;
    for (const auto& s : steps_) n += std::holds_alternative<PermuteStep>(s) ? 1 : 0;
    return n;
  }

 private:
  std::vector<ProtocolStep> steps_;
};

/// Runs `seq` on `p`. `reset` maps a ResetStep to its transfer matrix and
/// `evolve` maps a duration to one; `on_permute(count, populations)` is
/// called after every permutation.
template <typename ResetFn, typename EvolveFn, typename OnPermute>
PopulationVector apply_sequence(const ProtocolSequence& seq, PopulationVector p, ResetFn&& reset,
                                EvolveFn&& evolve, OnPermute&& on_permute) {
  int permutations = 0;
  for (const auto& step : seq.steps()) {
    if (const auto* perm = std::get_if<PermuteStep>(&step)) {
      p = permutation_matrix(perm->which).apply(p);
      on_permute(++permutations, p);
    } else if (std::holds_alternative<ResetStep>(step)) {
      p = reset().apply(p);
    } else {
      p = evolve(std::get<EvolveStep>(step).duration_s).apply(p);
    }
  }
  return p;
}

template <typename ResetFn, typename EvolveFn>
PopulationVector apply_sequence(const ProtocolSequence& seq, PopulationVector p, ResetFn&& reset,
                                EvolveFn&& evolve) {
  return apply_sequence(seq, std::move(p), std::forward<ResetFn>(reset),
                        std::forward<EvolveFn>(evolve), [](int, const PopulationVector&) {});
}

/// Ideal engine: every reset is the instantaneous high-temperature triplet
/// reset; evolution steps are not meaningful here and are rejected.
inline PopulationVector run_ideal(const ProtocolSequence& seq, double eps) {
  const PopulationMap reset = high_temperature_reset(eps);
  return apply_sequence(
      seq, thermal_populations(eps), [&] { return reset; },
      [](double) -> PopulationMap {
        throw std::invalid_argument("ideal engine: evolution steps are not supported");
      });
}

/// Populations after n_p permutations of the pumping protocol, starting from
/// thermal equilibrium.
inline PopulationVector run_ideal(int n_p, double eps) {
  if (n_p < 0) throw std::domain_error("run_ideal: negative permutation count");
  return run_ideal(ProtocolSequence::pumping(n_p), eps);
}

/// (-1)^n_p (eps sqrt3 / 4) (1 - 3^-n_p).
inline double closed_form_so(int n_p, double eps) {
  if (n_p < 0) throw std::domain_error("closed_form_so: negative permutation count");
  const double sign = (n_p % 2 == 0) ? 1.0 : -1.0;
  return sign * eps * std::numbers::sqrt3 / 4.0 * (1.0 - std::pow(3.0, -n_p));
}

/// Limit of |SO| for n_p -> infinity.
inline double steady_state_so_magnitude(double eps) { return std::abs(eps) * std::numbers::sqrt3 / 4.0; }

/// Permutation count at which |SO(n_p) - SO(inf)| < 1e-9 eps.
inline constexpr int kSteadyStatePermutations = 20;

/// Final triplet reset then singlet <-> |aa> swap. Meant for even-n_p
/// steady states.
inline PopulationVector enhance_zeeman(const PopulationVector& p_ss, double eps) {
  return permutation_matrix(Permutation::Pi12).apply(high_temperature_reset(eps).apply(p_ss));
}

}  // namespace hbac

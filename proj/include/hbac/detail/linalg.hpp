// Small dense exponentials used by the kinetic and coherent layers.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>

namespace hbac::detail {

/// Eigenvector-matrix condition number above which the eigen route of
/// expm_generator is abandoned for scaling-and-squaring.
inline constexpr double kMaxEigenvectorCondition = 1e8;

/// exp(A) by scaling and squaring with a truncated Taylor series.
template <typename Derived>
typename Derived::PlainObject expm_scaling_squaring(const Eigen::MatrixBase<Derived>& a) {
  using Mat = typename Derived::PlainObject;
  const double norm = a.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const Mat scaled = a / std::ldexp(1.0, squarings);

  // ||scaled|| <= 1/2, so 20 terms reach double precision.
  Mat term = Mat::Identity(a.rows(), a.cols());
  Mat sum = term;
  for (int k = 1; k <= 20; ++k) {
    term = (term * scaled) / static_cast<double>(k);
    sum += term;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

/// exp(R t) for a real square generator. Uses the eigen decomposition when
/// it is well conditioned, otherwise scaling and squaring.
template <int N>
Eigen::Matrix<double, N, N> expm_generator(const Eigen::Matrix<double, N, N>& r, double t,
                                           bool* used_fallback = nullptr) {
  using Real = Eigen::Matrix<double, N, N>;
  using Complex = Eigen::Matrix<std::complex<double>, N, N>;
  if (used_fallback) *used_fallback = false;
  if (t == 0.0) return Real::Identity();

  Eigen::EigenSolver<Real> es(r, true);
  if (es.info() == Eigen::Success) {
    const Complex v = es.eigenvectors();
    Eigen::JacobiSVD<Complex> svd(v);
    const auto& s = svd.singularValues();
    const double cond = s(0) / s(s.size() - 1);
    if (std::isfinite(cond) && cond < kMaxEigenvectorCondition) {
      Complex d = Complex::Zero();
      for (int i = 0; i < N; ++i) d(i, i) = std::exp(es.eigenvalues()(i) * t);
      const Complex e = v * d * v.inverse();
      return e.real();
    }
  }
  if (used_fallback) *used_fallback = true;
  return expm_scaling_squaring(Real(r * t));
}

/// exp(-i H t) for Hermitian H, via its eigen decomposition.
template <int N>
Eigen::Matrix<std::complex<double>, N, N> expm_hermitian(
    const Eigen::Matrix<std::complex<double>, N, N>& h, double t) {
  using Complex = Eigen::Matrix<std::complex<double>, N, N>;
  Eigen::SelfAdjointEigenSolver<Complex> es(h);
  const auto& v = es.eigenvectors();
  Eigen::Matrix<std::complex<double>, N, 1> phases;
  for (int i = 0; i < N; ++i) phases(i) = std::polar(1.0, -es.eigenvalues()(i) * t);
  return v * phases.asDiagonal() * v.adjoint();
}

}  // namespace hbac::detail

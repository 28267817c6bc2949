// Least-squares fit of y = A exp(-t / T) (no offset).
#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/LevenbergMarquardt>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace hbac {

enum class FitStatus { Ok, DegenerateInput, NonPositiveTimeConstant, NotConverged };

inline const char* to_string(FitStatus s) {
  switch (s) {
    case FitStatus::Ok: return "ok";
    case FitStatus::DegenerateInput: return "degenerate_input";
    case FitStatus::NonPositiveTimeConstant: return "non_positive_time_constant";
    case FitStatus::NotConverged: return "not_converged";
  }
  return "?";
}

struct ExponentialFit {
  double amplitude = 0.0;
  double time_constant = 0.0;
  double residual_norm = 0.0;
  FitStatus status = FitStatus::Ok;

  bool ok() const { return status == FitStatus::Ok; }
};

namespace detail {

// Residuals r_i = A exp(-k u_i) - y_i in scaled time u = t / t_scale.
struct ExpDecayFunctor : Eigen::DenseFunctor<double> {
  const std::vector<double>& u;
  const std::vector<double>& y;

  ExpDecayFunctor(const std::vector<double>& u_, const std::vector<double>& y_)
      : Eigen::DenseFunctor<double>(2, static_cast<int>(u_.size())), u(u_), y(y_) {}

  int operator()(const InputType& x, ValueType& fvec) const {
    for (std::size_t i = 0; i < u.size(); ++i) fvec(i) = x(0) * std::exp(-x(1) * u[i]) - y[i];
    return 0;
  }

  int df(const InputType& x, JacobianType& fjac) const {
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double e = std::exp(-x(1) * u[i]);
      fjac(i, 0) = e;
      fjac(i, 1) = -x(0) * u[i] * e;
    }
    return 0;
  }
};

}  // namespace detail

/// Seeds from a log-linear regression on |y|, then refines with
/// Levenberg-Marquardt. Throws for fewer than 3 points or negative t;
/// degenerate data and non-physical fits come back as a status.
inline ExponentialFit fit_monoexponential(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3) throw std::invalid_argument("fit_monoexponential: need at least 3 points");
  double t_scale = 0.0;
  for (const auto& [t, y] : points) {
    if (!(t >= 0.0) || !std::isfinite(y)) throw std::invalid_argument("fit_monoexponential: bad point");
    t_scale = std::max(t_scale, t);
  }

  ExponentialFit out;
  const double y0 = points.front().second;
  const bool constant = std::all_of(points.begin(), points.end(),
                                    [&](const auto& p) { return p.second == y0; });
  if (constant || t_scale == 0.0) {
    out.status = FitStatus::DegenerateInput;
    return out;
  }

  std::vector<double> u, y;
  u.reserve(points.size());
  y.reserve(points.size());
  for (const auto& [t, v] : points) {
    u.push_back(t / t_scale);
    y.push_back(v);
  }

  // Log-linear seed on the nonzero points.
  double sum_y = 0.0;
  double su = 0.0, sl = 0.0, suu = 0.0, sul = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    sum_y += y[i];
    if (y[i] == 0.0) continue;
    const double l = std::log(std::abs(y[i]));
    su += u[i];
    sl += l;
    suu += u[i] * u[i];
    sul += u[i] * l;
    ++n;
  }
  const double sign = sum_y < 0.0 ? -1.0 : 1.0;
  Eigen::VectorXd x(2);
  const double denom = n * suu - su * su;
  if (n >= 2 && denom > 0.0) {
    const double slope = (n * sul - su * sl) / denom;
    const double intercept = (sl - slope * su) / n;
    x << sign * std::exp(intercept), std::max(-slope, 1e-3);
  } else {
    x << y0, 1.0;
  }

  detail::ExpDecayFunctor functor(u, y);
  Eigen::LevenbergMarquardt<detail::ExpDecayFunctor> lm(functor);
  lm.setXtol(1e-14);
  lm.setFtol(1e-14);
  lm.setMaxfev(2000);
  const auto info = lm.minimize(x);

  Eigen::VectorXd r(u.size());
  functor(x, r);
  out.amplitude = x(0);
  out.residual_norm = r.norm();
  const double rate = x(1) / t_scale;
  out.time_constant = 1.0 / rate;
  if (!std::isfinite(out.time_constant) || !(rate > 0.0)) {
    out.status = FitStatus::NonPositiveTimeConstant;
  } else if (info == Eigen::LevenbergMarquardtSpace::ImproperInputParameters ||
             info == Eigen::LevenbergMarquardtSpace::TooManyFunctionEvaluation) {
    out.status = FitStatus::NotConverged;
  }
  return out;
}

}  // namespace hbac

#include "hbac/kinetics.hpp"
#include "oracles.hpp"

#include <catch_amalgamated.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

using namespace hbac;
using Catch::Approx;

namespace {

const SpinSystemParams kDefaults{};

// Reference exponential from Eigen's Pade-based matrix function module.
Matrix4 reference_expm(const Matrix4& r, double t) { return Matrix4(r * t).exp(); }

}  // namespace

TEST_CASE("rate calibration", "[kinetics]") {
  const RateMatrix rate = calibrate_rates(7.36, 214.0, 0.0);
  CHECK(rate.k_s == Approx(4.6729e-3).epsilon(1e-4));
  CHECK(rate.k_t == Approx(0.1311967).epsilon(1e-6));
  CHECK(rate.k_t == 1.0 / 7.36 - 1.0 / 214.0);
  CHECK(rate.k_s == 1.0 / 214.0);

  for (int c = 0; c < 4; ++c) CHECK(std::abs(rate.r.col(c).sum()) < 1e-12);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) {
      if (r == c) CHECK(rate.r(r, c) <= 0.0);
      else CHECK(rate.r(r, c) >= 0.0);
    }

  // Eigenvalues {0, -kS, -(kT+kS), -(kT+kS)}.
  Eigen::SelfAdjointEigenSolver<Matrix4> es(rate.r);  // symmetric at eps = 0
  REQUIRE((rate.r - rate.r.transpose()).norm() < 1e-15);
  Vector4 ev = es.eigenvalues();
  std::sort(ev.data(), ev.data() + 4);
  const double fast = -(rate.k_t + rate.k_s);
  CHECK(ev(0) == Approx(fast).epsilon(1e-12));
  CHECK(ev(1) == Approx(fast).epsilon(1e-12));
  CHECK(ev(2) == Approx(-rate.k_s).epsilon(1e-12));
  CHECK(ev(3) == Approx(0.0).margin(1e-15));

  const ModeRates modes = mode_decay_rates(rate);
  CHECK(modes.zeeman * 7.36 == Approx(1.0).epsilon(1e-9));
  CHECK(modes.singlet * 214.0 == Approx(1.0).epsilon(1e-9));

  const RateMatrix warm = calibrate_rates(7.36, 214.0, 1e-3);
  CHECK((warm.r * thermal_populations(1e-3).values()).norm() < 1e-10);

  CHECK_THROWS_AS(calibrate_rates(10.0, 10.0, 0.0), std::domain_error);
  CHECK_THROWS_AS(calibrate_rates(10.0, 5.0, 0.0), std::domain_error);
  CHECK_THROWS_AS(calibrate_rates(0.0, 5.0, 0.0), std::domain_error);
}

TEST_CASE("finite reset", "[kinetics]") {
  const double eps = 1e-3;
  const RateMatrix rate = calibrate_rates(7.36, 214.0, eps);

  CHECK(finite_reset(rate, 0.0).matrix().isIdentity());
  CHECK_THROWS_AS(finite_reset(rate, -1.0), std::domain_error);

  SECTION("agrees with an independent exponential") {
    for (double t : {1e-3, 0.7, 28.0, 500.0, 5000.0})
      CHECK((finite_reset(rate, t).matrix() - reference_expm(rate.r, t)).cwiseAbs().maxCoeff() < 1e-12);
  }

  SECTION("converges to the thermal projector") {
    const Matrix4 e = finite_reset(rate, 1e5).matrix();
    const Vector4 peq = thermal_populations(eps).values();
    for (int c = 0; c < 4; ++c) CHECK((e.col(c) - peq).cwiseAbs().maxCoeff() < 1e-12);
  }

  SECTION("singlet order decays at 1/TS") {
    const RateMatrix r0 = calibrate_rates(7.36, 214.0, 0.0);
    const PopulationVector p(0.4, 0.2, 0.2, 0.2);
    const double so0 = measure_order(p, Order::Singlet);
    const double so = measure_order(finite_reset(r0, 28.0).apply(p), Order::Singlet);
    CHECK(so / so0 == Approx(0.87735715651).epsilon(1e-10));
    CHECK(so / so0 == Approx(std::exp(-28.0 / 214.0)).epsilon(1e-12));
  }

  SECTION("scaling-and-squaring fallback matches the eigen route") {
    bool fallback = true;
    const Matrix4 a = detail::expm_generator<4>(rate.r, 28.0, &fallback);
    CHECK_FALSE(fallback);
    const Matrix4 b = detail::expm_scaling_squaring(Matrix4(rate.r * 28.0));
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-13);

    // A defective generator forces the fallback.
    Matrix4 jordan = Matrix4::Zero();
    jordan(0, 0) = jordan(1, 1) = -1.0;
    jordan(0, 1) = 1.0;
    const Matrix4 j = detail::expm_generator<4>(jordan, 2.0, &fallback);
    CHECK(fallback);
    CHECK((j - reference_expm(jordan, 2.0)).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("finite reset is stochastic on a log grid", "[kinetics][property]") {
  for (double eps : {0.0, 2.8e-5, 1e-2}) {
    const RateMatrix rate = calibrate_rates(7.36, 214.0, eps);
    for (int k = 0; k <= 70; ++k) {
      const double tau = std::pow(10.0, -3.0 + 7.0 * k / 70.0);
      const TransferMatrix t = finite_reset(rate, tau);
      for (int c = 0; c < 4; ++c) {
        CHECK(t.matrix().col(c).sum() == Approx(1.0).margin(1e-12));
        for (int r = 0; r < 4; ++r) {
          CHECK(t(r, c) >= 0.0);
          CHECK(t(r, c) <= 1.0);
        }
      }
    }
  }
}

TEST_CASE("finite reset semigroup law", "[kinetics][property]") {
  std::mt19937_64 rng(314);
  std::uniform_real_distribution<double> log_tau(-3.0, 3.5);
  std::uniform_real_distribution<double> log_t(0.0, 2.0);
  for (int k = 0; k < 200; ++k) {
    const double t1 = std::pow(10.0, log_t(rng));
    const double ts = t1 * std::pow(10.0, 0.1 + log_t(rng));
    const RateMatrix rate = calibrate_rates(t1, ts, 1e-4);
    const double a = std::pow(10.0, log_tau(rng));
    const double b = std::pow(10.0, log_tau(rng));
    const Matrix4 lhs = (finite_reset(rate, a) * finite_reset(rate, b)).matrix();
    const Matrix4 rhs = finite_reset(rate, a + b).matrix();
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("high-temperature relaxation map", "[kinetics]") {
  const double eps = 1e-4;
  const RateMatrix rate = calibrate_rates(7.36, 214.0, eps);
  const PopulationVector peq = thermal_populations(eps);

  const PopulationVector fixed = relaxation_map(rate, 40.0).apply(peq);
  for (int i = 0; i < 4; ++i) CHECK(fixed[i] == Approx(peq[i]).margin(1e-17));

  // Infinite-time limit is the thermal state.
  const PopulationVector far = relaxation_map(rate, 1e5).apply(PopulationVector(0.2502, 0.25, 0.2499, 0.2499));
  for (int i = 0; i < 4; ++i) CHECK(far[i] == Approx(peq[i]).margin(1e-16));

  // Agrees with exp(R tau) to first order in eps.
  const PopulationVector p = run_ideal(6, eps);
  const PopulationVector a = relaxation_map(rate, 28.0).apply(p);
  const PopulationVector b = finite_reset(rate, 28.0).apply(p);
  for (int i = 0; i < 4; ++i) CHECK(std::abs(a[i] - b[i]) < eps * eps);

  // Composition is the map of the summed duration.
  const PopulationMap ab = relaxation_map(rate, 5.0) * relaxation_map(rate, 23.0);
  CHECK((ab.linear() - relaxation_map(rate, 28.0).linear()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((ab.offset() - relaxation_map(rate, 28.0).offset()).cwiseAbs().maxCoeff() < 1e-16);
}

TEST_CASE("kinetic pump with defaults parameters", "[kinetics]") {
  const KineticProtocolResult r = run_kinetic(6, 28.0, 0.0, kDefaults);
  // Frozen from the oracle run (first-order relaxation, T1 = 7.36 s, TS = 214 s).
  CHECK(r.signal == Approx(0.9359843666534496).epsilon(1e-10));
  CHECK(r.signal >= 0.85);
  CHECK(r.signal <= 1.0);
  const double eps = epsilon(kDefaults);
  CHECK(r.so / unitary_max_order(thermal_populations(eps), Order::Singlet) >= 1.27);

  REQUIRE(r.so_trace.size() == 6);
  for (int k = 0; k < 6; ++k) {
    CHECK(r.so_trace[k].first == k + 1);
    CHECK(std::signbit(r.so_trace[k].second) == (k % 2 == 0));
  }
  CHECK(r.so_trace.back().second == r.so);

  const double signals[] = {0.0, -0.6666666666666667, 0.8418360625415868, -0.904792216654762,
                            0.9261596330341019, -0.9334802305621185, 0.9359843666534496,
                            -0.9368411742509096, 0.9371343240901497};
  for (int n = 0; n <= 8; ++n)
    CHECK(run_kinetic(n, 28.0, 0.0, kDefaults).signal == Approx(signals[n]).epsilon(1e-9).margin(1e-15));

  CHECK_THROWS_AS(run_kinetic(-1, 28.0, 0.0, kDefaults), std::domain_error);
  CHECK_THROWS_AS(run_kinetic(2, -1.0, 0.0, kDefaults), std::domain_error);
  CHECK_THROWS_AS(run_kinetic(2, 1.0, -1.0, kDefaults), std::domain_error);
}

TEST_CASE("kinetic limits", "[kinetics]") {
  SECTION("very long delays") {
    // Each reset fully re-thermalizes, so the last permutation acts on the
    // thermal state and lands on the unitary bound: signal 2/3.
    const double s = run_kinetic(6, 10 * 214.0, 0.0, kDefaults).signal;
    CHECK(s == Approx(2.0 / 3.0).epsilon(1e-4));
    CHECK(run_kinetic(6, 0.0, 0.0, kDefaults).signal == Approx(0.0).margin(1e-12));
  }

  SECTION("TS / T1 -> infinity approaches the ideal steady state") {
    SpinSystemParams p = kDefaults;
    p.ts_s = 1e6 * p.t1_s;
    const KineticProtocolResult r = run_kinetic(40, 30 * p.t1_s, 0.0, p);
    CHECK(r.so / steady_state_so_magnitude(epsilon(p)) == Approx(1.0).epsilon(1e-3));
  }

  SECTION("steady state lies strictly between 0 and the ideal value") {
    for (double tau : {0.5, 5.0, 28.0, 200.0, 2000.0}) {
      const double so = std::abs(run_kinetic(40, tau, 0.0, kDefaults).so);
      CHECK(so > 0.0);
      CHECK(so < steady_state_so_magnitude(epsilon(kDefaults)));
    }
  }

  SECTION("instant resets reproduce the ideal engine") {
    const double eps = epsilon(kDefaults);
    const PopulationMap reset = high_temperature_reset(eps);
    for (int n : {1, 4, 7}) {
      const PopulationVector p = apply_sequence(ProtocolSequence::pumping(n), thermal_populations(eps),
                                                [&] { return reset; }, [](double) { return PopulationMap(); });
      const PopulationVector q = run_ideal(n, eps);
      for (int i = 0; i < 4; ++i) CHECK(p[i] == q[i]);
    }
  }
}

TEST_CASE("detection model", "[kinetics]") {
  const double eps = 3e-5;
  CHECK(detected_signal(steady_state_so_magnitude(eps), eps) == Approx(1.0).epsilon(1e-14));
  CHECK(detected_signal(unitary_max_order(thermal_populations(eps), Order::Singlet), eps) ==
        Approx(2.0 / 3.0).epsilon(1e-10));
  CHECK(detected_signal(measure_order(run_ideal(40, eps), Order::Singlet), eps) == Approx(1.0).epsilon(1e-10));
}

TEST_CASE("tau sweep", "[kinetics]") {
  std::vector<double> grid;
  for (int k = 0; k < 40; ++k) grid.push_back(0.5 * std::pow(240.0 / 0.5, k / 39.0));
  const TauSweep sweep = sweep_tau(6, grid, kDefaults);
  REQUIRE(sweep.points.size() == 40);
  CHECK(sweep.tau_star == Approx(19.064035437489295).epsilon(1e-12));
  CHECK(sweep.signal_star == Approx(0.9415528579580624).epsilon(1e-10));
  CHECK(sweep.tau_star >= 10.0);
  CHECK(sweep.tau_star <= 60.0);
  CHECK(sweep.points.front().second < sweep.signal_star);
  CHECK(sweep.points.back().second < sweep.signal_star);

  int changes = 0;
  for (std::size_t i = 2; i < sweep.points.size(); ++i) {
    const bool up_prev = sweep.points[i - 1].second > sweep.points[i - 2].second;
    const bool up = sweep.points[i].second > sweep.points[i - 1].second;
    changes += up != up_prev;
  }
  CHECK(changes == 1);

  CHECK(run_kinetic(6, 0.0, 0.0, kDefaults).signal < sweep.signal_star);

  CHECK_THROWS_AS(sweep_tau(6, {}, kDefaults), std::invalid_argument);
  CHECK_THROWS_AS(sweep_tau(6, {1.0, 1.0}, kDefaults), std::invalid_argument);
  CHECK_THROWS_AS(sweep_tau(6, {-1.0, 1.0}, kDefaults), std::invalid_argument);
}

TEST_CASE("decay curve", "[kinetics]") {
  std::vector<double> grid;
  for (int k = 0; k <= 30; ++k) grid.push_back(3 * 214.0 * k / 30.0);
  const auto curve = decay_curve(6, 28.0, grid, kDefaults);
  REQUIRE(curve.size() == grid.size());
  CHECK(curve.front().second == run_kinetic(6, 28.0, 0.0, kDefaults).signal);
  for (const auto& [t, s] : curve)
    CHECK(s / curve.front().second == Approx(std::exp(-t / 214.0)).epsilon(0.02));
  // tau_ev = TS: exactly one e-fold of the SO mode.
  CHECK(curve[10].second == Approx(0.9359843666534496 * std::exp(-1.0)).epsilon(1e-9));
  CHECK_THROWS_AS(decay_curve(6, 28.0, {}, kDefaults), std::invalid_argument);
}

TEST_CASE("kinetic Zeeman enhancement", "[kinetics]") {
  const KineticProtocolResult r = run_kinetic_enhance(6, 28.0, 18.0, kDefaults);
  REQUIRE(r.zo_final.has_value());
  const double ratio = *r.zo_final / equilibrium_zeeman_order(epsilon(kDefaults));
  CHECK(ratio == Approx(1.3500981408705253).epsilon(1e-10));
  CHECK(ratio >= 1.21);
  CHECK(ratio <= 1.5);
  CHECK_THROWS_AS(run_kinetic_enhance(5, 28.0, 18.0, kDefaults), std::domain_error);
}

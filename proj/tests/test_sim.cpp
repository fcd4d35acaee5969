#include <doctest.h>

#include <cmath>

#include "mpabc/errors.hpp"
#include "mpabc/linalg.hpp"
#include "mpabc/sim.hpp"
#include "mpabc/summaries.hpp"
#include "oracles.hpp"

using namespace mpabc;

namespace {

HamiltonianModel mp2() { return make_model("mp2", {}); }

HamiltonianModel silent(HamiltonianModel m) {
  m.sigma.setZero();
  return m;
}

double analytic_iae(const Trajectory& path, double variance) {
  const DensityEstimate f = kde(path);
  return oracle::iae_against(f.grid, f.values, [&](double x) { return oracle::normal_pdf(x, variance); });
}

} // namespace

TEST_CASE("grid construction") {
  const SimGrid g = SimGrid::make(1e-2, 1e3);
  CHECK(g.n_steps == 100000);
  CHECK_THROWS_AS(SimGrid::make(0.3, 1.0), ConfigError);
  CHECK_THROWS_AS(SimGrid::make(0.5, 0.5), ConfigError);
  CHECK_THROWS_AS(SimGrid::make(-1.0, 1.0), ConfigError);
}

TEST_CASE("scheme tags") {
  CHECK(parse_scheme("strang_sde_outer") == Scheme::strang_sde_outer);
  CHECK(to_string(Scheme::euler) == "euler");
  CHECK_THROWS_AS(parse_scheme("rk4"), ConfigError);
}

TEST_CASE("exact scheme needs a linear model") {
  CHECK_THROWS_AS(simulate(make_model("mp4", {}), SimGrid::make(0.01, 1.0), Scheme::exact, RngStream(1, 0)),
                  UnsupportedScheme);
}

TEST_CASE("noise-free model started at zero stays at zero") {
  for (const Scheme s : {Scheme::exact, Scheme::euler, Scheme::strang_ode_outer, Scheme::strang_sde_outer}) {
    const Trajectory y = simulate(silent(mp2()), SimGrid::make(0.01, 10.0), s, RngStream(1, 0));
    CHECK(y.values.size() == 1000);
    CHECK(y.values.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("one deterministic Euler step") {
  const HamiltonianModel m = silent(mp2());
  const double dt = 1e-3;
  const StepCoefficients c = step_coefficients(m, dt, Scheme::euler);
  Vector x{{1.0, 0.0}};
  RngStream rng(1, 0);
  step(m, c, Scheme::euler, x, rng);
  CHECK(x(0) == 1.0);
  CHECK(x(1) == doctest::Approx(-400.0 * dt));
}

TEST_CASE("exact simulation reproduces the invariant variance") {
  const SimGrid g = SimGrid::make(1e-2, 1e3);
  const Trajectory y2 = simulate_exact(mp2(), g, RngStream(1, 0));
  CHECK(y2.values.size() == 100000);
  const double v2 = oracle::sample_variance(y2.values);
  CHECK(v2 >= 0.00225);
  CHECK(v2 <= 0.00275);
  const Trajectory y1 = simulate_exact(make_model("mp1", {}), g, RngStream(1, 1));
  const double v1 = oracle::sample_variance(y1.values);
  CHECK(v1 >= 0.9);
  CHECK(v1 <= 1.1);
}

TEST_CASE("Euler overflows for the oscillator above its stability bound") {
  const Trajectory bad = simulate_euler(mp2(), SimGrid::make(1e-2, 1e3), RngStream(1, 0));
  CHECK(bad.overflowed);
  CHECK(bad.values.size() < 100000);
  const Trajectory good = simulate_euler(mp2(), SimGrid::make(1e-3, 100.0), RngStream(1, 0));
  CHECK_FALSE(good.overflowed);
  CHECK(good.values.allFinite());
}

TEST_CASE("Strang ODE-outer equals exact simulation when G vanishes") {
  const SimGrid g = SimGrid::make(1e-2, 50.0);
  const Trajectory a = simulate_exact(mp2(), g, RngStream(3, 9));
  const Trajectory b = simulate_strang_ode_outer(mp2(), g, RngStream(3, 9));
  CHECK(a.values == b.values);
}

TEST_CASE("Strang SDE-outer without noise or displacement follows the linear flow") {
  const HamiltonianModel m = silent(mp2());
  const SimGrid g = SimGrid::make(1e-2, 5.0);
  SimOptions o;
  o.initial_state = Vector{{1.0, 0.0}};
  o.burn_in = 0.0;
  const Trajectory s = simulate_strang_sde_outer(m, g, RngStream(1, 0), o);
  const Trajectory e = simulate_exact(m, g, RngStream(1, 0), o);
  CHECK((s.values - e.values).cwiseAbs().maxCoeff() < 1e-12);
  const Matrix prop = matrix_exp(linear_part_coefficients(m).first, 5.0);
  CHECK(s.values(s.values.size() - 1) == doctest::Approx(prop(0, 0)).epsilon(1e-10));
}

TEST_CASE("nonlinear and neural mass models stay finite under splitting") {
  const Trajectory mp4 = simulate_strang_ode_outer(make_model("mp4", {}), SimGrid::make(1e-2, 1e3), RngStream(1, 0));
  CHECK_FALSE(mp4.overflowed);
  CHECK(mp4.values.allFinite());
  const Trajectory strang = simulate_strang_sde_outer(mp2(), SimGrid::make(1e-2, 1e3), RngStream(1, 0));
  CHECK_FALSE(strang.overflowed);
  const Trajectory jr = simulate_strang_ode_outer(make_model("jrnmm", {}), SimGrid::make(2e-3, 20.0), RngStream(1, 0));
  CHECK_FALSE(jr.overflowed);
  CHECK(jr.values.allFinite());
}

TEST_CASE("simulation is deterministic for a fixed stream") {
  const SimGrid g = SimGrid::make(1e-2, 100.0);
  for (const Scheme s : {Scheme::exact, Scheme::euler, Scheme::strang_ode_outer, Scheme::strang_sde_outer}) {
    const Trajectory a = simulate(mp2(), g, s, RngStream(8, 4));
    const Trajectory b = simulate(mp2(), g, s, RngStream(8, 4));
    CHECK(a.values == b.values);
    CHECK(a.seed == 8);
    CHECK(a.stream == 4);
    CHECK(a.scheme == s);
  }
}

TEST_CASE("measure preservation of the splitting and exact schemes") {
  const double variance = 0.0025;
  for (const double dt : {1e-3, 2.5e-3, 5e-3, 1e-2}) {
    for (const Scheme s : {Scheme::exact, Scheme::strang_sde_outer}) {
      CAPTURE(dt);
      CAPTURE(to_string(s));
      const Trajectory y = simulate(mp2(), SimGrid::make(dt, 1e3), s, RngStream(2, 0));
      const double v = oracle::sample_variance(y.values);
      CHECK(std::abs(y.values.mean()) < 3.0 * std::sqrt(v / 1e3));
      CHECK(std::abs(v - variance) < 0.1 * variance);
    }
  }
}

namespace {

// Stationary covariance of the linear Strang SDE-outer recursion
// X' = H (H X + (0, sqrt(dt) sigma z)), by doubling on V = E V E' + Q.
Matrix scheme_stationary_covariance(const HamiltonianModel& m, double dt) {
  const StepCoefficients c = step_coefficients(m, dt, Scheme::strang_sde_outer);
  const Matrix& h = c.half_propagator;
  Matrix noise = Matrix::Zero(2, 1);
  noise(1, 0) = c.sqrt_dt_sigma(0);
  Matrix v = h * noise * noise.transpose() * h.transpose();
  Matrix e = h * h;
  for (int k = 0; k < 40; ++k) {
    v += e * v * e.transpose();
    e = e * e;
  }
  return v;
}

} // namespace

TEST_CASE("splitting invariant variance error does not grow as the step shrinks") {
  const double analytic = mp2().analytics->variance;
  const double coarse = std::abs(scheme_stationary_covariance(mp2(), 1e-2)(0, 0) - analytic);
  const double fine = std::abs(scheme_stationary_covariance(mp2(), 1e-3)(0, 0) - analytic);
  CHECK(fine <= coarse);
  CHECK(coarse <= 1e-5 * analytic);
}

TEST_CASE("empirical splitting variance at coarse and fine steps agree within sampling error") {
  double err[2];
  int k = 0;
  for (const double dt : {1e-2, 1e-3}) {
    const Trajectory y = simulate_strang_sde_outer(mp2(), SimGrid::make(dt, 1e3), RngStream(30, 0));
    err[k++] = std::abs(oracle::sample_variance(y.values) - 0.0025);
  }
  // sd of a variance estimate over T = 1000 is about 0.0025 / sqrt(1000)
  const double sampling_sd = 0.0025 / std::sqrt(1e3);
  CHECK(err[0] < 3 * sampling_sd);
  CHECK(err[1] < 3 * sampling_sd);
}

TEST_CASE("Euler density degrades where the splitting density does not") {
  const SimGrid g = SimGrid::fit(4.5e-3, 1e3);
  const double strang = analytic_iae(simulate_strang_sde_outer(mp2(), g, RngStream(4, 0)), 0.0025);
  const double euler = analytic_iae(simulate_euler(mp2(), g, RngStream(4, 0)), 0.0025);
  CHECK(strang < 0.1);
  CHECK(euler > strang);
}

TEST_CASE("exact path autocovariance matches the closed form") {
  const HamiltonianModel m = mp2();
  const double dt = 1e-2;
  const Trajectory y = simulate_exact(m, SimGrid::make(dt, 1e3), RngStream(1, 0));
  const auto r = [&](double lag) { return m.analytics->autocovariance(lag); };
  for (const int lag : {0, 1, 10}) {
    CAPTURE(lag);
    const double want = r(lag * dt);
    CHECK(std::abs(oracle::autocovariance(y.values, lag) - want) <= 0.1 * std::abs(want));
  }
  // At lag 100 dt the target is small against the estimator's noise, so the
  // tolerance is four Bartlett standard errors.
  const int lag = 100;
  double bartlett = 0.0;
  for (int k = -5000; k <= 5000; ++k)
    bartlett += r(k * dt) * r(k * dt) + r((k + lag) * dt) * r((k - lag) * dt);
  const double se = std::sqrt(bartlett / static_cast<double>(y.values.size()));
  CHECK(std::abs(oracle::autocovariance(y.values, lag) - r(lag * dt)) <= 4 * se);
}

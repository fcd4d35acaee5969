#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "mpabc/errors.hpp"
#include "mpabc/sim.hpp"
#include "mpabc/summaries.hpp"
#include "oracles.hpp"

using namespace mpabc;

namespace {

Vector normals(std::size_t n, std::uint64_t stream, double sd = 1.0) {
  RngStream rng(77, stream);
  Vector y(static_cast<Eigen::Index>(n));
  for (auto& v : y) v = sd * rng.normal();
  return y;
}

double trapezoid(const Vector& x, const Vector& y) {
  double s = 0.0;
  for (Eigen::Index i = 1; i < x.size(); ++i) s += 0.5 * (x(i) - x(i - 1)) * (y(i) + y(i - 1));
  return s;
}

Eigen::Index argmax(const Vector& v) {
  Eigen::Index i;
  v.maxCoeff(&i);
  return i;
}

Trajectory mp2_path(std::uint64_t stream, double lambda = 20.0) {
  return simulate_exact(make_model("mp2", {{"lambda", lambda}}), SimGrid::make(1e-2, 1e3), RngStream(5, stream));
}

} // namespace

TEST_CASE("bandwidth follows the rule of thumb") {
  Vector y(10);
  for (int i = 0; i < 10; ++i) y(i) = i + 1;
  // sd = 3.0276503540974917, IQR = 7.75 - 3.25 = 4.5, 4.5 / 1.34 > sd
  CHECK(silverman_bandwidth(y) == doctest::Approx(0.9 * 3.0276503540974917 * std::pow(10.0, -0.2)).epsilon(1e-12));
  Vector skewed{{0, 0, 0, 0, 0, 0, 0, 1, 2, 50}};
  // IQR = 0.75 - 0 -> 0.75 / 1.34 is the smaller spread
  CHECK(silverman_bandwidth(skewed) == doctest::Approx(0.9 * 0.75 / 1.34 * std::pow(10.0, -0.2)).epsilon(1e-12));
}

TEST_CASE("kde of standard normal samples is close to the normal pdf") {
  const DensityEstimate f = kde(normals(100000, 0));
  CHECK(f.grid.size() == 1000);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < f.grid.size(); ++i) worst = std::max(worst, std::abs(f.values(i) - oracle::normal_pdf(f.grid(i), 1.0)));
  CHECK(worst < 0.02);
}

TEST_CASE("binned kde agrees with direct summation") {
  const Vector y = normals(3000, 1, 2.0);
  const DensityEstimate f = kde(y);
  const std::vector<double> samples(y.begin(), y.end());
  double worst = 0.0;
  for (Eigen::Index i = 0; i < f.grid.size(); i += 7)
    worst = std::max(worst, std::abs(f.values(i) - oracle::direct_kde(samples, f.bandwidth, f.grid(i))));
  CHECK(worst < 1e-3 * f.values.maxCoeff());
  CHECK(f.grid(0) == doctest::Approx(y.minCoeff() - 3 * f.bandwidth));
  CHECK(f.grid(999) == doctest::Approx(y.maxCoeff() + 3 * f.bandwidth));
}

TEST_CASE("kde integrates to one and is nonnegative") {
  RngStream rng(3, 3);
  for (int trial = 0; trial < 30; ++trial) {
    const auto n = static_cast<std::size_t>(10 + trial * 97);
    Vector y(static_cast<Eigen::Index>(n));
    const int shape = trial % 3;
    for (auto& v : y) {
      const double z = rng.normal();
      v = shape == 0 ? z : shape == 1 ? std::exp(z) : (rng.uniform() < 0.3 ? z - 5 : 3 * z + 4);
    }
    const DensityEstimate f = kde(y);
    const double mass = trapezoid(f.grid, f.values);
    CAPTURE(trial);
    CHECK(mass >= 0.98);
    CHECK(mass <= 1.0 + 1e-9);
    CHECK(f.values.minCoeff() >= 0.0);
  }
}

TEST_CASE("summaries reject degenerate input") {
  CHECK_THROWS_AS(kde(Vector::Constant(100, 3.0)), SummaryError);
  CHECK_THROWS_AS(kde(Vector::LinSpaced(9, 0, 1)), SummaryError);
  CHECK_THROWS_AS(smoothed_periodogram(Vector::Constant(100, 3.0), 1.0), SummaryError);
  Trajectory overflowed = mp2_path(0);
  overflowed.overflowed = true;
  CHECK_THROWS_AS(summarize(overflowed), SummaryError);
  Vector with_nan = normals(100, 2);
  with_nan(5) = std::nan("");
  CHECK_THROWS_AS(summarize(with_nan, 1.0), SummaryError);
}

TEST_CASE("kde of an exact oscillator path matches the invariant density") {
  const DensityEstimate f = kde(mp2_path(0));
  CHECK(oracle::iae_against(f.grid, f.values, [](double x) { return oracle::normal_pdf(x, 0.0025); }) < 0.1);
}

TEST_CASE("periodogram frequency grid and smoother width") {
  const SpectralEstimate s = smoothed_periodogram(mp2_path(0));
  CHECK(s.frequencies.size() == 50000);
  CHECK(s.frequencies(0) == doctest::Approx(1.0 / 1e3));
  CHECK(s.frequencies(s.frequencies.size() - 1) == doctest::Approx(50.0));
  CHECK((s.frequencies.tail(49999) - s.frequencies.head(49999)).minCoeff() > 0.0);
  CHECK(s.smoother_halfwidths == std::vector<int>{2500});
  CHECK(s.values.minCoeff() >= 0.0);
}

TEST_CASE("white noise has a flat spectrum at its variance times dt") {
  const double v = 4.0;
  const SpectralEstimate s = smoothed_periodogram(normals(20000, 3, 2.0), 1.0);
  const Eigen::Index n = s.values.size();
  for (Eigen::Index j = n / 4; j < 3 * n / 4; ++j) {
    CAPTURE(j);
    CHECK(std::abs(s.values(j) - v) <= 0.2 * v);
  }
}

TEST_CASE("spectral estimate integrates to half the variance") {
  const Trajectory y = mp2_path(1);
  const SpectralEstimate s = smoothed_periodogram(y);
  const double var = oracle::sample_variance(y.values);
  CHECK(trapezoid(s.frequencies, s.values) == doctest::Approx(var / 2).epsilon(0.1));
}

TEST_CASE("a sinusoid peaks at its own frequency") {
  const double dt = 0.01;
  const int m = 20000;
  const double nu0 = 600.0 / (m * dt);  // on the Fourier grid
  Vector y(m);
  for (int i = 0; i < m; ++i) y(i) = std::sin(2 * std::numbers::pi * nu0 * (i + 1) * dt);
  const SpectralEstimate s = smoothed_periodogram(y, dt);
  const double bandwidth = s.smoother_halfwidths[0] / (m * dt);
  CHECK(std::abs(s.frequencies(argmax(s.values)) - nu0) <= bandwidth);
}

TEST_CASE("oscillator spectrum peaks at its damped frequency") {
  const double peak = std::sqrt(399.0) / (2 * std::numbers::pi);
  const Trajectory y = mp2_path(2);

  // the closed-form spectral density peaks there as well
  const auto r = make_model("mp2", {}).analytics->autocovariance;
  double best_nu = 0.0, best = 0.0;
  for (double nu = 2.0; nu <= 4.5; nu += 0.001) {
    const double s = oracle::spectral_density(r, nu, 40.0, 40000);
    if (s > best) best = s, best_nu = nu;
  }
  CHECK(std::abs(best_nu - peak) < 0.01);

  // narrow smoothing resolves the peak
  SpectrumSettings narrow;
  narrow.span_per_time = 0.2;
  const SpectralEstimate fine = smoothed_periodogram(y, narrow);
  CHECK(std::abs(fine.frequencies(argmax(fine.values)) - peak) <= 0.5);
  CHECK(fine.values.maxCoeff() == doctest::Approx(oracle::spectral_density(r, peak, 40.0, 40000)).epsilon(0.25));

  // the default smoother spreads the line over +-2.5 cycles per time unit
  const SpectralEstimate wide = smoothed_periodogram(y);
  const double half = wide.smoother_halfwidths[0] / y.grid.t_end;
  CHECK(std::abs(wide.frequencies(argmax(wide.values)) - peak) <= half);
}

TEST_CASE("spectral estimate ignores constant offsets") {
  const Trajectory y = mp2_path(3);
  const Vector shifted = (y.values.array() + 17.0).matrix();
  const SpectralEstimate a = smoothed_periodogram(y.values, y.grid.dt);
  const SpectralEstimate b = smoothed_periodogram(shifted, y.grid.dt);
  CHECK((a.values - b.values).cwiseAbs().maxCoeff() <= 1e-10 * a.values.cwiseAbs().maxCoeff());
}

TEST_CASE("iae examples") {
  const Vector x = Vector::LinSpaced(101, 0.0, 1.0);
  CHECK(iae(x, Vector::Ones(101), x, Vector::Zero(101), Extension::zero) == 1.0);
  CHECK(iae(x, x, x, x, Extension::zero) == 0.0);

  const Vector g1 = Vector::LinSpaced(1000, -6.0, 6.0);
  const Vector g2 = (g1.array() + 10.0).matrix();
  Vector f(1000);
  for (Eigen::Index i = 0; i < 1000; ++i) f(i) = oracle::normal_pdf(g1(i), 1.0);
  CHECK(iae(g1, f, g2, f, Extension::zero) == doctest::Approx(2.0).epsilon(1e-3));
  CHECK(iae(g2, f, g1, f, Extension::zero) == doctest::Approx(2.0).epsilon(1e-3));

  CHECK_THROWS_AS(iae(Vector(), Vector(), x, x, Extension::zero), DomainError);
}

TEST_CASE("iae with mismatched grids interpolates") {
  const Vector x1 = Vector::LinSpaced(11, 0.0, 1.0);
  const Vector x2 = Vector::LinSpaced(21, 0.0, 2.0);
  // f1 = 1 on [0, 1]; f2 = 0.5 on [0, 2]; overlap integrates over [0, 1] only
  CHECK(iae(x1, Vector::Ones(11), x2, Vector::Constant(21, 0.5), Extension::overlap) == doctest::Approx(0.5));
  // with zero extension the tail of f2 on (1, 2] counts too
  CHECK(iae(x1, Vector::Ones(11), x2, Vector::Constant(21, 0.5), Extension::zero) == doctest::Approx(1.0).epsilon(0.06));
}

TEST_CASE("iae is a metric on a fixed grid") {
  RngStream rng(9, 9);
  const Vector x = Vector::LinSpaced(200, -1.0, 3.0);
  for (int trial = 0; trial < 100; ++trial) {
    Vector a(200), b(200), c(200);
    for (Eigen::Index i = 0; i < 200; ++i) {
      a(i) = rng.uniform();
      b(i) = rng.uniform();
      c(i) = rng.uniform();
    }
    const double ab = iae(x, a, x, b, Extension::zero);
    CHECK(ab == iae(x, b, x, a, Extension::zero));
    CHECK(ab >= 0.0);
    CHECK(ab <= iae(x, a, x, c, Extension::zero) + iae(x, c, x, b, Extension::zero) + 1e-12);
  }
}

TEST_CASE("interpolate") {
  const Vector x{{0.0, 1.0, 3.0}};
  const Vector y{{0.0, 2.0, 6.0}};
  CHECK(interpolate(x, y, 0.5) == 1.0);
  CHECK(interpolate(x, y, 2.0) == 4.0);
  CHECK(interpolate(x, y, 3.0) == 6.0);
  CHECK(interpolate(x, y, -0.1) == 0.0);
  CHECK(interpolate(x, y, 3.1, -1.0) == -1.0);
}

TEST_CASE("summaries separate parameters better than seeds") {
  // A single seed pair is noisy (the density ratio is above 0.2 for most pairs
  // at T = 1000), so compare medians over several independent triples.
  std::vector<double> spec_ratio, dens_ratio;
  for (std::uint64_t k = 0; k < 9; ++k) {
    const SummaryPair a = summarize(mp2_path(100 + 3 * k));
    const SummaryPair b = summarize(mp2_path(101 + 3 * k));
    const SummaryPair c = summarize(mp2_path(102 + 3 * k, 22.0));
    spec_ratio.push_back(iae(a.spec, b.spec) / iae(a.spec, c.spec));
    dens_ratio.push_back(iae(a.dens, b.dens) / iae(a.dens, c.dens));
  }
  std::nth_element(spec_ratio.begin(), spec_ratio.begin() + 4, spec_ratio.end());
  std::nth_element(dens_ratio.begin(), dens_ratio.begin() + 4, dens_ratio.end());
  CHECK(spec_ratio[4] < 0.2);
  CHECK(dens_ratio[4] < 0.5);
}

TEST_CASE("summarize composes both estimators") {
  const Trajectory y = mp2_path(4);
  const SummaryPair s = summarize(y);
  CHECK(s.spec.values == smoothed_periodogram(y).values);
  CHECK(s.dens.values == kde(y).values);
  SummarySettings only_spec;
  only_spec.with_density = false;
  CHECK(summarize(y, only_spec).dens.empty());
}

#include "mpabc/sim.hpp"

#include <cmath>
#include <sstream>

#include "mpabc/errors.hpp"
#include "mpabc/linalg.hpp"

namespace mpabc {

std::string_view to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::exact: return "exact";
    case Scheme::euler: return "euler";
    case Scheme::strang_ode_outer: return "strang_ode_outer";
    case Scheme::strang_sde_outer: return "strang_sde_outer";
  }
  return "unknown";
}

Scheme parse_scheme(std::string_view tag) {
  for (Scheme s : {Scheme::exact, Scheme::euler, Scheme::strang_ode_outer, Scheme::strang_sde_outer})
    if (tag == to_string(s)) return s;
  throw ConfigError("unknown scheme '" + std::string(tag) +
                    "' (expected exact, euler, strang_ode_outer or strang_sde_outer)");
}

SimGrid SimGrid::make(double dt, double t_end) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("time step must be positive");
  if (!(t_end > 0.0) || !std::isfinite(t_end)) throw ConfigError("time horizon must be positive");
  const double ratio = t_end / dt;
  const double steps = std::round(ratio);
  if (std::abs(steps * dt - t_end) > 1e-9 * t_end) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "time horizon " << t_end << " is not a whole number of steps of " << dt;
    throw ConfigError(msg.str());
  }
  if (steps < 2) throw ConfigError("grid needs at least two steps");
  return SimGrid{dt, t_end, static_cast<std::size_t>(steps)};
}

SimGrid SimGrid::fit(double dt, double t_end) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("time step must be positive");
  const double steps = std::floor(t_end / dt * (1.0 + 1e-12));
  return make(dt, steps * dt);
}

StepCoefficients step_coefficients(const HamiltonianModel& model, double dt, Scheme scheme) {
  auto [a, b] = linear_part_coefficients(model);
  const Eigen::Index n = a.rows();
  StepCoefficients c;
  c.dt = dt;
  c.drift = a;
  c.propagator = Matrix::Zero(n, n);
  c.half_propagator = Matrix::Zero(n, n);
  c.noise_factor = Matrix::Zero(n, n);
  c.sqrt_dt_sigma = std::sqrt(dt) * model.sigma;
  if (scheme == Scheme::exact || scheme == Scheme::strang_ode_outer) {
    c.propagator = matrix_exp(a, dt);
    c.noise_factor = cholesky_psd(increment_covariance(a, b, dt));
  }
  if (scheme == Scheme::strang_sde_outer) c.half_propagator = matrix_exp(a, 0.5 * dt);
  return c;
}

namespace {

template <int N>
struct Kernel {
  static constexpr int H = N == Eigen::Dynamic ? Eigen::Dynamic : N / 2;
  using Mat = Eigen::Matrix<double, N, N>;
  using Vec = Eigen::Matrix<double, N, 1>;
  using Half = Eigen::Matrix<double, H, 1>;

  Mat drift, propagator, half_propagator, noise_factor;
  Half sqrt_dt_sigma;
  Vec noise;
  Half kick;
  double dt;
  int d;
  const Displacement* g;
  Scheme scheme;

  Kernel(const HamiltonianModel& model, const StepCoefficients& c, Scheme s)
      : drift(c.drift),
        propagator(c.propagator),
        half_propagator(c.half_propagator),
        noise_factor(c.noise_factor),
        sqrt_dt_sigma(c.sqrt_dt_sigma),
        noise(Vec::Zero(2 * model.dim)),
        kick(Half::Zero(model.dim)),
        dt(c.dt),
        d(model.dim),
        g(model.displacement ? &model.displacement : nullptr),
        scheme(s) {}

  void displacement(const Vec& x) { (*g)(x.data(), kick.data()); }

  void exact_step(Vec& x, RngStream& rng) {
    for (int i = 0; i < 2 * d; ++i) noise(i) = rng.normal();
    x = (propagator * x + noise_factor * noise).eval();
  }

  // Returns false once the state is no longer finite.
  bool advance(Vec& x, RngStream& rng) {
    switch (scheme) {
      case Scheme::exact:
        exact_step(x, rng);
        break;
      case Scheme::strang_ode_outer:
        if (g) {
          displacement(x);
          x.tail(d) += (0.5 * dt) * kick;
        }
        exact_step(x, rng);
        if (g) {
          displacement(x);
          x.tail(d) += (0.5 * dt) * kick;
        }
        break;
      case Scheme::strang_sde_outer:
        x = (half_propagator * x).eval();
        if (g) displacement(x);
        for (int j = 0; j < d; ++j) x(d + j) += (g ? dt * kick(j) : 0.0) + sqrt_dt_sigma(j) * rng.normal();
        x = (half_propagator * x).eval();
        break;
      case Scheme::euler: {
        if (g) displacement(x);
        Vec next = x + dt * (drift * x);
        for (int j = 0; j < d; ++j) next(d + j) += (g ? dt * kick(j) : 0.0) + sqrt_dt_sigma(j) * rng.normal();
        x = next;
        break;
      }
    }
    return x.allFinite();
  }
};

template <int N>
Trajectory run(const HamiltonianModel& model, const SimGrid& grid, Scheme scheme, RngStream& rng,
               const SimOptions& options) {
  using K = Kernel<N>;
  const StepCoefficients coeffs = step_coefficients(model, grid.dt, scheme);
  K kernel(model, coeffs, scheme);
  typename K::Vec x = K::Vec::Zero(model.state_size());
  if (options.initial_state) {
    if (options.initial_state->size() != model.state_size())
      throw DimensionError("initial state has the wrong size for model " + model.id);
    x = *options.initial_state;
  }
  const typename K::Vec weights = model.output_weights;

  Trajectory out;
  out.grid = grid;
  out.scheme = scheme;
  out.seed = rng.master_seed();
  out.stream = rng.stream_index();
  out.values.resize(static_cast<Eigen::Index>(grid.n_steps));

  const double burn_in = options.burn_in.value_or(model.default_burn_in());
  const auto burn_steps = static_cast<std::size_t>(std::llround(std::max(0.0, burn_in) / grid.dt));
  for (std::size_t k = 0; k < burn_steps; ++k) {
    if (!kernel.advance(x, rng)) {
      out.values.resize(0);
      out.overflowed = true;
      return out;
    }
  }
  for (std::size_t i = 0; i < grid.n_steps; ++i) {
    if (!kernel.advance(x, rng)) {
      out.values.conservativeResize(static_cast<Eigen::Index>(i));
      out.overflowed = true;
      return out;
    }
    out.values(static_cast<Eigen::Index>(i)) = weights.dot(x);
  }
  return out;
}

} // namespace

void step(const HamiltonianModel& model, const StepCoefficients& coeffs, Scheme scheme, Vector& state,
          RngStream& rng) {
  if (scheme == Scheme::exact && !model.is_linear())
    throw UnsupportedScheme("exact simulation needs a linear model; " + model.id + " has a displacement term");
  Kernel<Eigen::Dynamic> kernel(model, coeffs, scheme);
  kernel.advance(state, rng);
}

Trajectory simulate(const HamiltonianModel& model, const SimGrid& grid, Scheme scheme, RngStream rng,
                    const SimOptions& options) {
  if (scheme == Scheme::exact && !model.is_linear())
    throw UnsupportedScheme("exact simulation needs a linear model; " + model.id + " has a displacement term");
  switch (model.dim) {
    case 1: return run<2>(model, grid, scheme, rng, options);
    case 3: return run<6>(model, grid, scheme, rng, options);
    default: return run<Eigen::Dynamic>(model, grid, scheme, rng, options);
  }
}

Trajectory simulate_exact(const HamiltonianModel& model, const SimGrid& grid, RngStream rng,
                          const SimOptions& options) {
  return simulate(model, grid, Scheme::exact, rng, options);
}

Trajectory simulate_euler(const HamiltonianModel& model, const SimGrid& grid, RngStream rng,
                          const SimOptions& options) {
  return simulate(model, grid, Scheme::euler, rng, options);
}

Trajectory simulate_strang_ode_outer(const HamiltonianModel& model, const SimGrid& grid, RngStream rng,
                                     const SimOptions& options) {
  return simulate(model, grid, Scheme::strang_ode_outer, rng, options);
}

Trajectory simulate_strang_sde_outer(const HamiltonianModel& model, const SimGrid& grid, RngStream rng,
                                     const SimOptions& options) {
  return simulate(model, grid, Scheme::strang_sde_outer, rng, options);
}

} // namespace mpabc

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "mpabc/models.hpp"
#include "mpabc/rng.hpp"
#include "mpabc/types.hpp"

namespace mpabc {

enum class Scheme {
  exact,             // Gaussian transition of the linear SDE (G == 0 only)
  euler,             // Euler-Maruyama
  strang_ode_outer,  // half kick by G, exact linear SDE step, half kick
  strang_sde_outer,  // half linear ODE flow, kick by G plus noise, half linear ODE flow
};

std::string_view to_string(Scheme scheme);
/// Throws ConfigError for unknown tags.
Scheme parse_scheme(std::string_view tag);

/// Uniform time grid t_i = i dt, i = 1..n_steps.
struct SimGrid {
  double dt = 0.0;
  double t_end = 0.0;
  std::size_t n_steps = 0;

  /// Throws ConfigError unless dt > 0, t_end > 0, t_end / dt is an integer to
  /// within 1e-9 relative and n_steps >= 2.
  static SimGrid make(double dt, double t_end);
  /// Largest whole number of steps of `dt` not exceeding `t_end`; the
  /// horizon becomes n_steps * dt.
  static SimGrid fit(double dt, double t_end);
};

struct SimOptions {
  std::optional<Vector> initial_state;  // default: zero vector
  std::optional<double> burn_in;        // default: model.default_burn_in()
};

struct Trajectory {
  SimGrid grid;
  Vector values;  // y(t_1), ..., y(t_m); shorter when overflowed
  Scheme scheme = Scheme::exact;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  bool overflowed = false;
};

/// Precomputed per-parameter coefficients shared by all steps of a path.
struct StepCoefficients {
  Matrix drift;           // A
  Matrix propagator;      // e^{A dt}
  Matrix half_propagator; // e^{A dt/2}
  Matrix noise_factor;    // L with L L' = C(dt)
  Vector sqrt_dt_sigma;   // sqrt(dt) * diag(Sigma)
  double dt = 0.0;
};

StepCoefficients step_coefficients(const HamiltonianModel& model, double dt, Scheme scheme);

/// Advances `state` by one step of `scheme`; the reference implementation
/// for the fixed-size kernels used by `simulate`.
void step(const HamiltonianModel& model, const StepCoefficients& coeffs, Scheme scheme, Vector& state,
          RngStream& rng);

Trajectory simulate_exact(const HamiltonianModel& model, const SimGrid& grid, RngStream rng,
                          const SimOptions& options = {});
Trajectory simulate_euler(const HamiltonianModel& model, const SimGrid& grid, RngStream rng,
                          const SimOptions& options = {});
Trajectory simulate_strang_ode_outer(const HamiltonianModel& model, const SimGrid& grid, RngStream rng,
                                     const SimOptions& options = {});
Trajectory simulate_strang_sde_outer(const HamiltonianModel& model, const SimGrid& grid, RngStream rng,
                                     const SimOptions& options = {});

Trajectory simulate(const HamiltonianModel& model, const SimGrid& grid, Scheme scheme, RngStream rng,
                    const SimOptions& options = {});

} // namespace mpabc

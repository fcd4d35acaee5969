#pragma once

// Second-order SDEs of Hamiltonian type in X = (Q, P), Q, P in R^d:
//
//   dQ = P dt
//   dP = (-Lambda^2 Q - 2 Gamma P + G(Q)) dt + Sigma dW
//
// with diagonal Lambda, Gamma, Sigma and a displacement term G that depends
// on Q only. The observed process is a linear functional of X.

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mpabc/parameters.hpp"
#include "mpabc/types.hpp"

namespace mpabc {

/// G(Q): reads d entries from `q`, writes d entries to `out`.
using Displacement = std::function<void(const double* q, double* out)>;

/// Closed-form stationary moments of the output process.
struct StationaryAnalytics {
  double mean = 0.0;
  double variance = 0.0;
  std::function<double(double lag)> autocovariance;
};

struct HamiltonianModel {
  std::string id;
  int dim = 0;  // d; the state has 2d entries
  Vector lambda;
  Vector gamma;
  Vector sigma;
  Displacement displacement;  // empty when G == 0
  Vector output_weights;      // Y = output_weights . X
  ParameterVector params;     // full parameter set the model was built from
  std::vector<std::string> free_param_names;
  std::optional<StationaryAnalytics> analytics;

  bool is_linear() const { return !displacement; }
  int state_size() const { return 2 * dim; }
  double output(const Eigen::Ref<const Vector>& x) const { return output_weights.dot(x); }
  Vector displacement_at(const Eigen::Ref<const Vector>& q) const;

  /// Default transient discarded before recording: 10 / min(gamma).
  double default_burn_in() const { return 10.0 / gamma.minCoeff(); }
};

/// Identifiers accepted by `make_model`: mp1, mp2, mp4, jrnmm.
const std::vector<std::string>& model_ids();

/// Parameter values used when a parameter is not given explicitly.
ParameterVector default_parameters(std::string_view model_id);

/// Builds a model from `theta` layered over `default_parameters(model_id)`.
/// `A` and `B` are accepted as aliases of `gain_A` and `gain_B`.
HamiltonianModel make_model(std::string_view model_id, const ParameterVector& theta);

/// MP2: d = 1, output Q, requires lambda^2 - gamma^2 > 0.
HamiltonianModel make_weakly_damped_oscillator(const ParameterVector& theta);
/// MP1: lambda = gamma, output P.
HamiltonianModel make_critically_damped_oscillator(const ParameterVector& theta);
/// MP4: weakly damped oscillator with G(Q) = -1000 sin(Q).
HamiltonianModel make_nonlinear_oscillator(const ParameterVector& theta);
/// Stochastic Jansen-Rit neural mass model, d = 3, output X2 - X3.
HamiltonianModel make_jansen_rit(const ParameterVector& theta);

/// Sigm(x) = vmax / (1 + exp(r (v0 - x))).
double jansen_rit_sigmoid(double x, double vmax, double v0, double r);

/// Drift A = [[0, I], [-Lambda^2, -2 Gamma]] and noise B = [[0], [Sigma]] of
/// the linear part of the model.
std::pair<Matrix, Matrix> linear_part_coefficients(const HamiltonianModel& model);

/// Parameter names as printed in reports (gain_A -> A).
std::string display_name(std::string_view name);

} // namespace mpabc

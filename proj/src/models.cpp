#include "mpabc/models.hpp"

#include <cmath>
#include <sstream>

#include "mpabc/errors.hpp"

namespace mpabc {

namespace {

void require_positive(const ParameterVector& theta, std::string_view model, std::initializer_list<const char*> names) {
  for (const char* name : names) {
    const double v = theta.at(name);
    if (!(v > 0.0)) {
      std::ostringstream msg;
      msg << model << ": parameter " << name << " = " << v << " must be > 0";
      throw ModelError(msg.str());
    }
  }
}

HamiltonianModel scalar_oscillator(std::string id, const ParameterVector& theta, double lambda, double gamma,
                                   double sigma, int observed_coordinate) {
  HamiltonianModel m;
  m.id = std::move(id);
  m.dim = 1;
  m.lambda = Vector::Constant(1, lambda);
  m.gamma = Vector::Constant(1, gamma);
  m.sigma = Vector::Constant(1, sigma);
  m.output_weights = Vector::Zero(2);
  m.output_weights(observed_coordinate) = 1.0;
  m.params = theta;
  return m;
}

ParameterVector canonical(const ParameterVector& theta) {
  ParameterVector out;
  for (const auto& [name, value] : theta) {
    if (name == "A")
      out.set("gain_A", value);
    else if (name == "B")
      out.set("gain_B", value);
    else
      out.set(name, value);
  }
  return out;
}

void require_known(const ParameterVector& theta, const ParameterVector& defaults, std::string_view model) {
  for (const auto& [name, value] : theta) {
    if (!defaults.contains(name))
      throw ModelError(std::string(model) + ": unknown parameter '" + name + "'");
  }
}

} // namespace

Vector HamiltonianModel::displacement_at(const Eigen::Ref<const Vector>& q) const {
  Vector out = Vector::Zero(dim);
  if (displacement) {
    const Vector qc = q;
    displacement(qc.data(), out.data());
  }
  return out;
}

const std::vector<std::string>& model_ids() {
  static const std::vector<std::string> ids = {"mp1", "mp2", "mp4", "jrnmm"};
  return ids;
}

ParameterVector default_parameters(std::string_view model_id) {
  if (model_id == "mp1") return {{"gamma", 1.0}, {"sigma", 2.0}};
  if (model_id == "mp2" || model_id == "mp4") return {{"lambda", 20.0}, {"gamma", 1.0}, {"sigma", 2.0}};
  if (model_id == "jrnmm")
    return {{"sigma", 2000.0}, {"mu", 220.0}, {"C", 135.0}, {"gain_A", 3.25}, {"gain_B", 22.0},
            {"a", 100.0},      {"b", 50.0},   {"v0", 6.0},  {"vmax", 5.0},    {"r", 0.56},
            {"sigma4", 0.01},  {"sigma6", 1.0}};
  throw ModelError("unknown model id '" + std::string(model_id) + "' (expected mp1, mp2, mp4 or jrnmm)");
}

HamiltonianModel make_model(std::string_view model_id, const ParameterVector& theta) {
  const ParameterVector defaults = default_parameters(model_id);
  const ParameterVector given = canonical(theta);
  if (model_id == "mp1" && given.contains("lambda")) {
    if (given.at("lambda") != given.find("gamma").value_or(defaults.at("gamma")))
      throw ModelError("mp1: lambda is tied to gamma (critical damping)");
    ParameterVector without_lambda;
    for (const auto& [name, value] : given)
      if (name != "lambda") without_lambda.set(name, value);
    require_known(without_lambda, defaults, model_id);
    return make_critically_damped_oscillator(defaults.merged(without_lambda));
  }
  require_known(given, defaults, model_id);
  const ParameterVector full = defaults.merged(given);
  if (model_id == "mp1") return make_critically_damped_oscillator(full);
  if (model_id == "mp2") return make_weakly_damped_oscillator(full);
  if (model_id == "mp4") return make_nonlinear_oscillator(full);
  return make_jansen_rit(full);
}

HamiltonianModel make_weakly_damped_oscillator(const ParameterVector& theta) {
  require_positive(theta, "mp2", {"lambda", "gamma", "sigma"});
  const double lambda = theta.at("lambda");
  const double gamma = theta.at("gamma");
  const double sigma = theta.at("sigma");
  if (!(lambda * lambda - gamma * gamma > 0.0)) {
    std::ostringstream msg;
    msg << "weak damping requires lambda^2 - gamma^2 > 0, got lambda = " << lambda << ", gamma = " << gamma;
    throw ModelError(msg.str());
  }
  HamiltonianModel m = scalar_oscillator("mp2", theta, lambda, gamma, sigma, 0);
  m.free_param_names = {"lambda", "gamma", "sigma"};

  const double kappa = std::sqrt(lambda * lambda - gamma * gamma);
  const double scale = sigma * sigma / (4.0 * lambda * lambda);
  StationaryAnalytics a;
  a.variance = scale / gamma;
  a.autocovariance = [=](double lag) {
    const double tau = std::abs(lag);
    return scale * std::exp(-gamma * tau) * (std::cos(kappa * tau) / gamma + std::sin(kappa * tau) / kappa);
  };
  m.analytics = std::move(a);
  return m;
}

HamiltonianModel make_critically_damped_oscillator(const ParameterVector& theta) {
  require_positive(theta, "mp1", {"gamma", "sigma"});
  const double gamma = theta.at("gamma");
  const double sigma = theta.at("sigma");
  HamiltonianModel m = scalar_oscillator("mp1", theta, gamma, gamma, sigma, 1);
  m.free_param_names = {"gamma", "sigma"};

  StationaryAnalytics a;
  a.variance = sigma * sigma / (4.0 * gamma);
  a.autocovariance = [=](double lag) {
    const double tau = std::abs(lag);
    return sigma * sigma / 4.0 * std::exp(-gamma * tau) * (1.0 / gamma - tau);
  };
  m.analytics = std::move(a);
  return m;
}

HamiltonianModel make_nonlinear_oscillator(const ParameterVector& theta) {
  HamiltonianModel m = make_weakly_damped_oscillator(theta);
  m.id = "mp4";
  m.analytics.reset();
  m.displacement = [](const double* q, double* out) { out[0] = -1.0e3 * std::sin(q[0]); };
  return m;
}

double jansen_rit_sigmoid(double x, double vmax, double v0, double r) {
  return vmax / (1.0 + std::exp(r * (v0 - x)));
}

HamiltonianModel make_jansen_rit(const ParameterVector& theta) {
  require_positive(theta, "jrnmm", {"sigma", "mu", "C", "gain_A", "gain_B", "a", "b", "vmax", "r", "sigma4", "sigma6"});
  const double a = theta.at("a");
  const double b = theta.at("b");
  const double gain_a = theta.at("gain_A");
  const double gain_b = theta.at("gain_B");
  const double mu = theta.at("mu");
  const double c = theta.at("C");
  const double vmax = theta.at("vmax");
  const double v0 = theta.at("v0");
  const double r = theta.at("r");
  const double c1 = c, c2 = 0.8 * c, c3 = 0.25 * c, c4 = 0.25 * c;

  HamiltonianModel m;
  m.id = "jrnmm";
  m.dim = 3;
  m.gamma = Vector{{a, a, b}};
  m.lambda = m.gamma;
  m.sigma = Vector{{theta.at("sigma4"), theta.at("sigma"), theta.at("sigma6")}};
  m.output_weights = Vector{{0.0, 1.0, -1.0, 0.0, 0.0, 0.0}};
  m.params = theta;
  m.free_param_names = {"sigma", "mu", "C"};
  m.displacement = [=](const double* q, double* out) {
    out[0] = gain_a * a * jansen_rit_sigmoid(q[1] - q[2], vmax, v0, r);
    out[1] = gain_a * a * (mu + c2 * jansen_rit_sigmoid(c1 * q[0], vmax, v0, r));
    out[2] = gain_b * b * c4 * jansen_rit_sigmoid(c3 * q[0], vmax, v0, r);
  };
  return m;
}

std::pair<Matrix, Matrix> linear_part_coefficients(const HamiltonianModel& model) {
  const int d = model.dim;
  Matrix a = Matrix::Zero(2 * d, 2 * d);
  a.topRightCorner(d, d).setIdentity();
  a.bottomLeftCorner(d, d).diagonal() = -model.lambda.array().square();
  a.bottomRightCorner(d, d).diagonal() = -2.0 * model.gamma;
  Matrix b = Matrix::Zero(2 * d, d);
  b.bottomRows(d).diagonal() = model.sigma;
  return {a, b};
}

std::string display_name(std::string_view name) {
  if (name == "gain_A") return "A";
  if (name == "gain_B") return "B";
  return std::string(name);
}

} // namespace mpabc

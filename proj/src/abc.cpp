#include "mpabc/abc.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "mpabc/errors.hpp"

namespace mpabc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

} // namespace

UniformPrior::UniformPrior(std::vector<PriorBound> bounds) : bounds_(std::move(bounds)) {
  if (bounds_.empty()) throw ConfigError("prior has no parameters");
  std::set<std::string> seen;
  for (const auto& b : bounds_) {
    if (!seen.insert(b.name).second) throw ConfigError("prior lists '" + b.name + "' twice");
    if (!std::isfinite(b.lower) || !std::isfinite(b.upper) || !(b.lower < b.upper)) {
      std::ostringstream msg;
      msg << "prior box for '" << b.name << "' is empty: [" << b.lower << ", " << b.upper << "]";
      throw ConfigError(msg.str());
    }
  }
}

ParameterVector UniformPrior::sample(RngStream& rng) const {
  ParameterVector theta;
  for (const auto& b : bounds_) theta.set(b.name, rng.uniform(b.lower, b.upper));
  return theta;
}

bool UniformPrior::contains(const ParameterVector& theta) const {
  for (const auto& b : bounds_) {
    const auto v = theta.find(b.name);
    if (!v || *v < b.lower || *v > b.upper) return false;
  }
  return true;
}

std::vector<std::string> UniformPrior::names() const {
  std::vector<std::string> out;
  for (const auto& b : bounds_) out.push_back(b.name);
  return out;
}

double UniformPrior::sd(std::size_t i) const {
  return (bounds_[i].upper - bounds_[i].lower) / std::sqrt(12.0);
}

std::string_view to_string(Aggregator aggregator) {
  return aggregator == Aggregator::median ? "median" : "mean";
}

Aggregator parse_aggregator(std::string_view tag) {
  if (tag == "median") return Aggregator::median;
  if (tag == "mean") return Aggregator::mean;
  throw ConfigError("unknown aggregator '" + std::string(tag) + "' (expected median or mean)");
}

HamiltonianModel SimulationSetup::model_for(const ParameterVector& free) const {
  return make_model(model_id, fixed.merged(free));
}

Trajectory SimulationSetup::simulate_path(const ParameterVector& free, const RngStream& rng) const {
  SimOptions options;
  options.burn_in = burn_in;
  return simulate(model_for(free), grid, scheme, rng, options);
}

ReferenceSet simulate_reference(const SimulationSetup& setup, const ParameterVector& theta, std::size_t m,
                                std::uint64_t seed) {
  if (m == 0) throw ConfigError("reference set needs at least one path");
  ReferenceSet out;
  out.summaries.reserve(m);
  for (std::size_t k = 0; k < m; ++k) {
    const Trajectory path = setup.simulate_path(theta, RngStream(seed, stream_id(StreamDomain::reference, k)));
    if (path.overflowed) throw RunError("reference path " + std::to_string(k) + " overflowed");
    out.summaries.push_back(summarize(path, setup.summary));
  }
  std::ostringstream prov;
  prov << "simulated seed=" << seed << " m=" << m;
  out.provenance = prov.str();
  return out;
}

double aggregate(std::vector<double> values, Aggregator aggregator) {
  if (values.empty()) throw DomainError("aggregate: no values");
  if (aggregator == Aggregator::mean)
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  const std::size_t n = values.size();
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(values.begin(), mid, values.end());
  if (n % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(values.begin(), mid);
  return 0.5 * (lower + upper);
}

double weighted_iae(const SummaryPair& reference, const SummaryPair& candidate, double weight) {
  double d = iae(reference.spec, candidate.spec);
  if (weight != 0.0) d += weight * iae(reference.dens, candidate.dens);
  return d;
}

double distance(const ReferenceSet& reference, const SummaryPair& candidate, const DistanceConfig& config) {
  std::vector<double> per_reference;
  per_reference.reserve(reference.size());
  for (const auto& r : reference.summaries) per_reference.push_back(weighted_iae(r, candidate, config.weight));
  return aggregate(std::move(per_reference), config.aggregator);
}

Matrix AbcRun::kept_thetas() const {
  Matrix out(static_cast<Eigen::Index>(kept.size()), thetas.cols());
  for (std::size_t r = 0; r < kept.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = thetas.row(static_cast<Eigen::Index>(kept[r]));
  return out;
}

Vector AbcRun::kept_distances() const {
  Vector out(static_cast<Eigen::Index>(kept.size()));
  for (std::size_t r = 0; r < kept.size(); ++r) out(static_cast<Eigen::Index>(r)) = distances(static_cast<Eigen::Index>(kept[r]));
  return out;
}

std::size_t kept_count(std::size_t n_total, double percentile) {
  const double raw = std::ceil(static_cast<double>(n_total) * percentile / 100.0 - 1e-9);
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(raw, 1.0)), 1, std::max<std::size_t>(n_total, 1));
}

namespace {

void threshold(AbcRun& run) {
  std::vector<std::size_t> order(run.n_total);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t k = kept_count(run.n_total, run.percentile);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      const double da = run.distances(static_cast<Eigen::Index>(a));
                      const double db = run.distances(static_cast<Eigen::Index>(b));
                      return da < db || (da == db && a < b);
                    });
  run.epsilon = run.distances(static_cast<Eigen::Index>(order[k - 1]));
  run.kept.clear();
  for (std::size_t r = 0; r < k; ++r)
    if (std::isfinite(run.distances(static_cast<Eigen::Index>(order[r])))) run.kept.push_back(order[r]);
}

void validate(const AbcSettings& settings) {
  if (settings.n_total == 0) throw ConfigError("n_total must be at least 1");
  if (!(settings.percentile > 0.0) || !(settings.percentile <= 100.0)) {
    std::ostringstream msg;
    msg << "percentile must lie in (0, 100], got " << settings.percentile;
    throw ConfigError(msg.str());
  }
  if (settings.workers < 1) throw ConfigError("workers must be at least 1");
}

} // namespace

AbcRun run_abc(const SimulationSetup& setup, const UniformPrior& prior, const ReferenceSet& reference,
               const DistanceConfig& config, const AbcSettings& settings) {
  validate(settings);
  if (reference.size() == 0) throw ConfigError("reference set is empty");
  if (!std::isfinite(config.weight) || config.weight < 0.0) throw ConfigError("weight must be finite and >= 0");
  const auto started = std::chrono::steady_clock::now();

  AbcRun run;
  run.names = prior.names();
  run.n_total = settings.n_total;
  run.percentile = settings.percentile;
  run.seed = settings.seed;
  run.distance_config = config;
  run.thetas.resize(static_cast<Eigen::Index>(settings.n_total), static_cast<Eigen::Index>(prior.size()));
  run.distances.resize(static_cast<Eigen::Index>(settings.n_total));

  SummarySettings summary = setup.summary;
  summary.with_density = config.weight != 0.0;

  parallel_for(settings.n_total, settings.workers, [&](std::size_t i) {
    RngStream rng(settings.seed, stream_id(StreamDomain::trial, i));
    const ParameterVector theta = prior.sample(rng);
    const auto row = static_cast<Eigen::Index>(i);
    Eigen::Index col = 0;
    for (const auto& [name, value] : theta) run.thetas(row, col++) = value;
    double d = kInf;
    try {
      const Trajectory path = setup.simulate_path(theta, rng);
      if (!path.overflowed) d = distance(reference, summarize(path, summary), config);
    } catch (const ModelError&) {
    } catch (const SummaryError&) {
    } catch (const NumericError&) {
    }
    run.distances(row) = std::isnan(d) ? kInf : d;
  });

  run.n_failed = static_cast<std::size_t>((run.distances.array() == kInf).count());
  if (run.n_failed == run.n_total) throw RunError("no candidate produced valid summaries");
  threshold(run);
  run.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return run;
}

AbcRun rethreshold(const AbcRun& run, double percentile) {
  validate(AbcSettings{run.n_total, percentile, run.seed, 1});
  AbcRun out = run;
  out.percentile = percentile;
  threshold(out);
  return out;
}

PilotResult pilot_weight(const SimulationSetup& setup, const UniformPrior& prior, const PilotOptions& options) {
  if (options.iterations == 0) throw ConfigError("pilot needs at least one iteration");
  if (options.workers < 1) throw ConfigError("workers must be at least 1");
  SummarySettings summary = setup.summary;
  summary.with_density = true;
  summary.with_spectrum = true;

  std::vector<double> ratios(options.iterations, kInf);
  std::vector<std::size_t> redraws(options.iterations, 0);
  parallel_for(options.iterations, options.workers, [&](std::size_t l) {
    for (std::size_t a = 0; a < options.max_attempts; ++a) {
      const std::uint64_t base = (static_cast<std::uint64_t>(l) * options.max_attempts + a) << 1;
      RngStream first(options.seed, stream_id(StreamDomain::pilot, base));
      const ParameterVector theta = prior.sample(first);
      const RngStream second = options.share_stream ? first : RngStream(options.seed, stream_id(StreamDomain::pilot, base | 1));
      try {
        const Trajectory p1 = setup.simulate_path(theta, first);
        const Trajectory p2 = setup.simulate_path(theta, second);
        const SummaryPair s1 = summarize(p1, summary);
        const SummaryPair s2 = summarize(p2, summary);
        const double num = iae(s1.spec, s2.spec);
        const double den = iae(s1.dens, s2.dens);
        const double ratio = num / den;
        if (den > 0.0 && std::isfinite(ratio)) {
          ratios[l] = ratio;
          redraws[l] = a;
          return;
        }
      } catch (const ModelError&) {
      } catch (const SummaryError&) {
      } catch (const NumericError&) {
      }
    }
    throw RunError("pilot iteration " + std::to_string(l) + " produced no valid ratio in " +
                   std::to_string(options.max_attempts) + " attempts");
  });

  PilotResult out;
  out.ratios = ratios;
  out.redraws = std::accumulate(redraws.begin(), redraws.end(), std::size_t{0});
  out.weight = aggregate(std::move(ratios), Aggregator::median);
  return out;
}

double quantile7(std::vector<double> values, double p) {
  if (values.empty()) throw DomainError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
}

PosteriorStats posterior_stats(const std::vector<std::string>& names, const Eigen::Ref<const Matrix>& samples) {
  if (samples.rows() < 2) throw RunError("posterior statistics need at least two kept samples");
  if (static_cast<Eigen::Index>(names.size()) != samples.cols())
    throw DimensionError("posterior_stats: one name per column expected");
  const Eigen::Index n = samples.rows();
  const Eigen::Index k = samples.cols();
  PosteriorStats s;
  s.names = names;
  s.count = static_cast<std::size_t>(n);
  s.mean = samples.colwise().mean().transpose();
  const Matrix centred = samples.rowwise() - s.mean.transpose();
  const Matrix cov = centred.transpose() * centred / static_cast<double>(n - 1);
  s.sd = cov.diagonal().cwiseSqrt();
  s.q025.resize(k);
  s.q50.resize(k);
  s.q975.resize(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    std::vector<double> column(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) column[static_cast<std::size_t>(i)] = samples(i, j);
    s.q025(j) = quantile7(column, 0.025);
    s.q50(j) = quantile7(column, 0.5);
    s.q975(j) = quantile7(column, 0.975);
  }
  s.correlation = Matrix::Zero(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    if (!(s.sd(i) > 0.0)) s.degenerate = true;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (s.sd(i) > 0.0 && s.sd(j) > 0.0)
        s.correlation(i, j) = i == j ? 1.0 : cov(i, j) / (s.sd(i) * s.sd(j));
    }
  }
  return s;
}

PosteriorStats posterior_stats(const AbcRun& run) { return posterior_stats(run.names, run.kept_thetas()); }

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& body) {
  const auto threads = static_cast<std::size_t>(std::max(1, workers));
  if (threads == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n && !failed; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed = true;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::min(threads, n); ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

} // namespace mpabc

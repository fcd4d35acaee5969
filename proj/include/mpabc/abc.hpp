#pragma once

// Rejection ABC with invariant-measure summaries. Each trial draws a
// parameter from a uniform prior, simulates one output path, summarizes it
// and scores it against M reference summaries; the tolerance is an order
// statistic of all N scores.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mpabc/models.hpp"
#include "mpabc/parameters.hpp"
#include "mpabc/rng.hpp"
#include "mpabc/sim.hpp"
#include "mpabc/summaries.hpp"
#include "mpabc/types.hpp"

namespace mpabc {

struct PriorBound {
  std::string name;
  double lower = 0.0;
  double upper = 0.0;
};

/// Independent uniform priors, one per free parameter.
class UniformPrior {
 public:
  UniformPrior() = default;
  /// Throws ConfigError on an empty box, duplicate names or non-finite bounds.
  explicit UniformPrior(std::vector<PriorBound> bounds);

  /// One uniform per parameter, in declaration order.
  ParameterVector sample(RngStream& rng) const;
  bool contains(const ParameterVector& theta) const;

  const std::vector<PriorBound>& bounds() const { return bounds_; }
  std::vector<std::string> names() const;
  std::size_t size() const { return bounds_.size(); }
  double mean(std::size_t i) const { return 0.5 * (bounds_[i].lower + bounds_[i].upper); }
  double sd(std::size_t i) const;

 private:
  std::vector<PriorBound> bounds_;
};

enum class Aggregator { median, mean };

std::string_view to_string(Aggregator aggregator);
/// Throws ConfigError for anything but "median" or "mean".
Aggregator parse_aggregator(std::string_view tag);

struct DistanceConfig {
  double weight = 0.0;  // w in IAE(S) + w IAE(f)
  Aggregator aggregator = Aggregator::median;
};

struct ReferenceSet {
  std::vector<SummaryPair> summaries;
  std::string provenance;

  std::size_t size() const { return summaries.size(); }
};

/// Everything needed to turn a parameter draw into an output path.
struct SimulationSetup {
  std::string model_id;
  ParameterVector fixed;  // non-inferred parameters layered over the model defaults
  SimGrid grid;
  Scheme scheme = Scheme::exact;
  std::optional<double> burn_in;
  SummarySettings summary;

  HamiltonianModel model_for(const ParameterVector& free) const;
  Trajectory simulate_path(const ParameterVector& free, const RngStream& rng) const;
};

/// M paths at `theta`, path k on stream stream_id(reference, k).
ReferenceSet simulate_reference(const SimulationSetup& setup, const ParameterVector& theta, std::size_t m,
                                std::uint64_t seed);

/// Median (mean of the two middle values for an even count) or arithmetic mean.
double aggregate(std::vector<double> values, Aggregator aggregator);

/// IAE(S_ref, S) + w IAE(f_ref, f); the density term is skipped when w == 0.
double weighted_iae(const SummaryPair& reference, const SummaryPair& candidate, double weight);

/// Aggregated weighted IAE over all references.
double distance(const ReferenceSet& reference, const SummaryPair& candidate, const DistanceConfig& config);

struct AbcSettings {
  std::size_t n_total = 0;
  double percentile = 1.0;  // in (0, 100]
  std::uint64_t seed = 0;
  int workers = 1;
};

struct AbcRun {
  std::vector<std::string> names;
  Matrix thetas;        // n_total x k, every draw
  Vector distances;     // n_total, +inf for failed trials
  std::vector<std::size_t> kept;  // trial indices sorted by (distance, index)
  double epsilon = 0.0;
  double percentile = 0.0;
  std::size_t n_total = 0;
  std::size_t n_failed = 0;
  std::uint64_t seed = 0;
  DistanceConfig distance_config;
  double elapsed_seconds = 0.0;

  Matrix kept_thetas() const;
  Vector kept_distances() const;
};

/// Nearest-rank count: ceil(N p / 100), at least 1.
std::size_t kept_count(std::size_t n_total, double percentile);

/// Score N trials then keep the nearest-rank order statistic. Failed trials
/// (model, overflow or summary errors) score +inf and are never kept. The
/// result does not depend on `settings.workers`.
AbcRun run_abc(const SimulationSetup& setup, const UniformPrior& prior, const ReferenceSet& reference,
               const DistanceConfig& config, const AbcSettings& settings);

/// Re-thresholds an existing run at another percentile without simulating.
AbcRun rethreshold(const AbcRun& run, double percentile);

struct PilotOptions {
  std::size_t iterations = 10000;  // L
  std::uint64_t seed = 0;
  int workers = 1;
  std::size_t max_attempts = 256;  // redraws per iteration before giving up
  bool share_stream = false;       // both paths from one stream; test hook
};

struct PilotResult {
  double weight = 0.0;         // median of the ratios
  std::vector<double> ratios;  // one per iteration
  std::size_t redraws = 0;
};

/// w = median over L draws of IAE(S1, S2) / IAE(f1, f2) for two independent
/// paths at the same prior draw. Non-finite and 0/0 ratios are redrawn.
PilotResult pilot_weight(const SimulationSetup& setup, const UniformPrior& prior, const PilotOptions& options);

struct PosteriorStats {
  std::vector<std::string> names;
  Vector mean, sd, q025, q50, q975;
  Matrix correlation;
  bool degenerate = false;  // some sd was 0; its correlations are reported as 0
  std::size_t count = 0;
};

/// Sample statistics over the rows of `samples`; needs at least two rows.
PosteriorStats posterior_stats(const std::vector<std::string>& names, const Eigen::Ref<const Matrix>& samples);
PosteriorStats posterior_stats(const AbcRun& run);

/// Quantile with linear interpolation between order statistics (R type 7).
double quantile7(std::vector<double> values, double p);

/// Runs body(i) for i in [0, n) on `workers` threads; rethrows the first exception.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& body);

} // namespace mpabc

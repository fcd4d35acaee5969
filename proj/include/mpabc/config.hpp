#pragma once

// JSON run configuration. Sections:
//
//   model     {id, fixed: {name: value}}
//   scheme    "exact" | "euler" | "strang_ode_outer" | "strang_sde_outer"
//   grid      {dt, t_end}
//   burn_in   optional time discarded before recording
//   prior     {name: [lower, upper], ...}   (order is kept)
//   abc       {n_total, percentile, aggregator}
//   weight    {mode: zero | fixed | pilot, value, pilot_l}
//   reference {source: simulate | files, m, theta, seed, scheme, dt, t_end,
//              paths, sample_rate, rescale: {offset, scale}, cut}
//   summaries {kde_points, kde_cut, taper, span_per_time, halfwidth}
//   seed, workers, output_dir
//
// Environment variables MPABC_<SECTION>__<KEY>=<json or text> override the
// file, e.g. MPABC_ABC__N_TOTAL=1000.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mpabc/abc.hpp"
#include "mpabc/io.hpp"
#include "mpabc/sim.hpp"

namespace mpabc {

using Json = nlohmann::ordered_json;

enum class WeightMode { zero, fixed, pilot };

struct ReferenceConfig {
  enum class Source { simulate, files } source = Source::simulate;
  std::size_t m = 1;
  ParameterVector theta;
  std::optional<std::uint64_t> seed;  // default: run seed
  std::optional<Scheme> scheme;       // default: run scheme
  std::optional<double> dt;
  std::optional<double> t_end;
  std::vector<std::filesystem::path> paths;
  double sample_rate = 0.0;
  Rescale rescale;
  std::size_t cut = 1;
};

struct RunConfig {
  std::string model_id;
  ParameterVector fixed;
  Scheme scheme = Scheme::exact;
  double dt = 0.0;
  double t_end = 0.0;
  std::optional<double> burn_in;
  std::vector<PriorBound> prior;
  std::size_t n_total = 1000;
  double percentile = 1.0;
  Aggregator aggregator = Aggregator::median;
  WeightMode weight_mode = WeightMode::zero;
  double weight_value = 0.0;
  std::size_t pilot_l = 10000;
  ReferenceConfig reference;
  SummarySettings summary;
  std::uint64_t seed = 1;
  int workers = 1;
  std::filesystem::path output_dir = "out";

  SimulationSetup setup() const;
  /// Setup used for simulated reference paths (scheme/grid overrides applied).
  SimulationSetup reference_setup() const;
  UniformPrior make_prior() const { return UniformPrior(prior); }
};

/// Throws ConfigError with the offending key on any invalid entry.
RunConfig parse_config(const Json& doc);
Json to_json(const RunConfig& config);

/// Reads a config file, or the embedded `config` of a run manifest, then
/// applies `environment` overrides (name -> value).
RunConfig load_config(const std::filesystem::path& path, const std::map<std::string, std::string>& environment = {});

/// Applies MPABC_* overrides in place.
void apply_overrides(Json& doc, const std::map<std::string, std::string>& environment);

/// Collects MPABC_* variables from the process environment.
std::map<std::string, std::string> process_environment();

} // namespace mpabc

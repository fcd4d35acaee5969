#pragma once

// The operations behind each CLI subcommand. All artifacts go under
// config.output_dir; each command also writes a JSON manifest there.

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "mpabc/abc.hpp"
#include "mpabc/config.hpp"

namespace mpabc {

/// Writes reference.m trajectory CSVs (reference/path_<k>.csv) at
/// reference.theta and returns their paths.
std::vector<std::filesystem::path> cmd_simulate(const RunConfig& config, std::ostream& log);

/// Reference summaries from simulation or from files, as configured.
ReferenceSet build_reference(const RunConfig& config);

/// Ingests files and writes their summary curves (reference_spectra.csv,
/// reference_densities.csv).
ReferenceSet cmd_ingest(const RunConfig& config, std::ostream& log);

/// Runs the weight pilot; writes pilot.json and pilot_ratios.csv.
PilotResult cmd_pilot(const RunConfig& config, std::ostream& log);

/// Resolves w from the weight mode (running the pilot when asked).
double resolve_weight(const RunConfig& config, std::ostream& log);

struct RunArtifacts {
  AbcRun run;
  PosteriorStats stats;
  bool resumed = false;
};

/// Runs ABC and writes accepted.csv, posterior.csv, histograms.csv and
/// manifest.json. With `resume`, an output directory whose manifest embeds
/// the same config is reused instead of re-running.
RunArtifacts cmd_run(const RunConfig& config, bool resume, std::ostream& log);

/// Plot data. `kind` is one of:
///   summaries  spectra and densities of two reference seeds and of a
///              perturbed parameter (`perturb` = "name=value")
///   posterior  KDE of each kept parameter against its prior, and pair
///              scatter data, read from `run_dir`
///   schemes    strang_sde_outer vs euler vs analytic density at `dts`
std::vector<std::filesystem::path> cmd_plot_data(const RunConfig& config, const std::string& kind,
                                                 const std::filesystem::path& run_dir, const std::string& perturb,
                                                 const std::vector<double>& dts, std::ostream& log);

/// Posterior statistics of an existing accepted.csv, printed as a table and
/// written to posterior.csv next to it.
PosteriorStats cmd_stats(const std::filesystem::path& run_dir, std::ostream& log);

} // namespace mpabc

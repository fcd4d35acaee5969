#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mpabc/abc.hpp"
#include "mpabc/sim.hpp"
#include "mpabc/summaries.hpp"
#include "mpabc/types.hpp"

namespace mpabc {

/// `t,y` with t_i = i dt, i = 1..m, 17 significant digits.
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& y);

/// Affine map applied to every ingested sample: y = scale * x + offset.
struct Rescale {
  double offset = 0.0;
  double scale = 1.0;
};

struct IngestedSeries {
  Vector samples;
  double sample_rate = 0.0;  // samples per time unit
  std::string source;

  double dt() const { return 1.0 / sample_rate; }
};

/// Reads one value per line, a single-column CSV, or a `t,y` file written by
/// write_trajectory_csv. A header line is skipped. A non-positive
/// `sample_rate` is inferred from the t column and is an error for files
/// without one. Throws IngestError naming the file and line.
IngestedSeries read_series(const std::filesystem::path& path, double sample_rate, const Rescale& rescale = {});

/// Splits into `pieces` consecutive segments of equal length, dropping the
/// remainder at the end.
std::vector<Vector> cut_series(const Eigen::Ref<const Vector>& samples, std::size_t pieces);

/// Summarizes each file (or each of `cut` segments of a single file).
ReferenceSet ingest(const std::vector<std::filesystem::path>& paths, double sample_rate, const Rescale& rescale,
                    std::size_t cut, const SummarySettings& settings);

struct Curve {
  std::string series;
  Vector x;
  Vector value;
};

/// `x,value,series`, one row per point of every curve.
void write_curves_csv(const std::filesystem::path& path, const std::vector<Curve>& curves);

/// Kept draws in threshold order: parameter columns then `distance`.
void write_samples_csv(const std::filesystem::path& path, const AbcRun& run);

struct SampleTable {
  std::vector<std::string> names;  // parameter columns, without `distance`
  Matrix values;
  Vector distances;
};

SampleTable read_samples_csv(const std::filesystem::path& path);

/// `parameter,mean,sd,q025,q50,q975` plus one `corr_<name>` column per parameter.
void write_posterior_csv(const std::filesystem::path& path, const PosteriorStats& stats);

/// Equal-width histogram counts over [lower, upper]: `parameter,bin_lower,bin_upper,count`.
void write_histogram_csv(const std::filesystem::path& path, const std::vector<std::string>& names,
                         const Eigen::Ref<const Matrix>& samples, const std::vector<PriorBound>& ranges, int bins);

/// printf-style "%.17g".
std::string format_double(double v);

} // namespace mpabc

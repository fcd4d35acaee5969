#pragma once

// Invariant-measure summaries of an output path: a kernel density estimate of
// the stationary marginal and a smoothed periodogram of the stationary
// spectral density, compared by their integrated absolute error.

#include <vector>

#include "mpabc/sim.hpp"
#include "mpabc/types.hpp"

namespace mpabc {

struct DensityEstimate {
  Vector grid;
  Vector values;
  double bandwidth = 0.0;

  bool empty() const { return grid.size() == 0; }
};

struct SpectralEstimate {
  Vector frequencies;  // cycles per unit time, j / (m dt), j = 1..floor(m/2)
  Vector values;
  std::vector<int> smoother_halfwidths;

  bool empty() const { return frequencies.size() == 0; }
};

struct SummaryPair {
  SpectralEstimate spec;
  DensityEstimate dens;
};

struct KdeSettings {
  int grid_points = 1000;
  double cut = 3.0;  // grid spans [min - cut h, max + cut h]
};

struct SpectrumSettings {
  double taper = 0.1;           // fraction of the series under the split cosine bell, half at each end
  bool demean = true;
  bool detrend = false;
  double span_per_time = 5.0;   // Daniell span = span_per_time * T
  int halfwidth_override = -1;  // >= 0 replaces floor(span / 2)
  bool taper_correction = true; // divide by the mean squared taper weight
};

struct SummarySettings {
  KdeSettings kde;
  SpectrumSettings spectrum;
  bool with_density = true;
  bool with_spectrum = true;
};

/// 0.9 min(sd, IQR / 1.34) m^(-1/5).
double silverman_bandwidth(const Eigen::Ref<const Vector>& y);

/// Gaussian KDE on an equispaced grid, evaluated by linear binning and FFT
/// convolution. Throws SummaryError on fewer than 10 samples, non-finite
/// samples or zero variance.
DensityEstimate kde(const Eigen::Ref<const Vector>& y, const KdeSettings& settings = {});
DensityEstimate kde(const Trajectory& y, const KdeSettings& settings = {});

/// Demeaned, tapered periodogram at the positive Fourier frequencies,
/// smoothed once by a modified Daniell kernel with circular wrap.
SpectralEstimate smoothed_periodogram(const Eigen::Ref<const Vector>& y, double dt,
                                      const SpectrumSettings& settings = {});
SpectralEstimate smoothed_periodogram(const Trajectory& y, const SpectrumSettings& settings = {});

/// How the second curve is extended when the two grids differ.
enum class Extension {
  zero,     // densities: both curves are zero off their grids; integrate over the union
  overlap,  // spectra: integrate over the common range only
};

/// Trapezoidal integral of |f1 - f2|, with f2 linearly interpolated onto
/// f1's nodes (and, for Extension::zero, f1 onto f2's nodes outside f1's range).
double iae(const Eigen::Ref<const Vector>& x1, const Eigen::Ref<const Vector>& y1,
           const Eigen::Ref<const Vector>& x2, const Eigen::Ref<const Vector>& y2, Extension extension);
double iae(const DensityEstimate& f1, const DensityEstimate& f2);
double iae(const SpectralEstimate& s1, const SpectralEstimate& s2);

/// Linear interpolation with `outside` returned off [x.front(), x.back()].
double interpolate(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y, double at,
                   double outside = 0.0);

SummaryPair summarize(const Trajectory& y, const SummarySettings& settings = {});
SummaryPair summarize(const Eigen::Ref<const Vector>& y, double dt, const SummarySettings& settings = {});

} // namespace mpabc

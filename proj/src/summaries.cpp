#include "mpabc/summaries.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <map>
#include <mutex>
#include <sstream>

#include <fftw3.h>

#include "mpabc/errors.hpp"

namespace mpabc {

namespace {

// FFTW plans are created once per length under a lock (planning is not
// thread-safe) and executed on caller-owned arrays through the new-array
// interface, which is.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan forward(int n) { return get(forward_, n, true); }
  fftw_plan backward(int n) { return get(backward_, n, false); }

 private:
  fftw_plan get(std::map<int, fftw_plan>& plans, int n, bool forward) {
    std::lock_guard lock(mutex_);
    if (auto it = plans.find(n); it != plans.end()) return it->second;
    double* real = fftw_alloc_real(static_cast<std::size_t>(n));
    fftw_complex* spectrum = fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1));
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fftw_plan plan = forward ? fftw_plan_dft_r2c_1d(n, real, spectrum, flags) : fftw_plan_dft_c2r_1d(n, spectrum, real, flags);
    fftw_free(real);
    fftw_free(spectrum);
    if (!plan) throw NumericError("FFT planning failed for length " + std::to_string(n));
    return plans[n] = plan;
  }

  std::mutex mutex_;
  std::map<int, fftw_plan> forward_, backward_;
};

using Complex = std::complex<double>;

// Bins 0..n/2 of the DFT of a real sequence.
std::vector<Complex> real_dft(std::vector<double>& x) {
  const int n = static_cast<int>(x.size());
  std::vector<Complex> out(x.size() / 2 + 1);
  fftw_execute_dft_r2c(PlanCache::instance().forward(n), x.data(), reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

// Unnormalized inverse of real_dft; destroys `half`.
std::vector<double> inverse_real_dft(std::vector<Complex>& half, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  fftw_execute_dft_c2r(PlanCache::instance().backward(n), reinterpret_cast<fftw_complex*>(half.data()), out.data());
  return out;
}

void require_summarizable(const Eigen::Ref<const Vector>& y) {
  if (y.size() < 10) {
    std::ostringstream msg;
    msg << "need at least 10 samples, got " << y.size();
    throw SummaryError(msg.str());
  }
  if (!y.allFinite()) throw SummaryError("series has non-finite samples");
  if (y.maxCoeff() == y.minCoeff()) throw SummaryError("series has zero variance");
}

void require_usable(const Trajectory& y) {
  if (y.overflowed) throw SummaryError("trajectory overflowed");
}

// Quantile with linear interpolation between order statistics (type 7).
double quantile(std::vector<double>& work, double p) {
  const double h = (static_cast<double>(work.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  std::nth_element(work.begin(), work.begin() + static_cast<std::ptrdiff_t>(lo), work.end());
  const double x_lo = work[lo];
  if (lo + 1 >= work.size()) return x_lo;
  const double x_hi = *std::min_element(work.begin() + static_cast<std::ptrdiff_t>(lo) + 1, work.end());
  return x_lo + (h - static_cast<double>(lo)) * (x_hi - x_lo);
}

double sample_sd(const Eigen::Ref<const Vector>& y) {
  const double mean = y.mean();
  return std::sqrt((y.array() - mean).square().sum() / static_cast<double>(y.size() - 1));
}

} // namespace

double silverman_bandwidth(const Eigen::Ref<const Vector>& y) {
  if (y.size() < 2) throw SummaryError("bandwidth needs at least two samples");
  const double sd = sample_sd(y);
  std::vector<double> work(y.data(), y.data() + y.size());
  const double iqr = quantile(work, 0.75) - quantile(work, 0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) spread = sd;
  return 0.9 * spread * std::pow(static_cast<double>(y.size()), -0.2);
}

DensityEstimate kde(const Eigen::Ref<const Vector>& y, const KdeSettings& settings) {
  require_summarizable(y);
  if (settings.grid_points < 2) throw DomainError("kde: grid needs at least two points");
  const double h = silverman_bandwidth(y);
  const double from = y.minCoeff() - settings.cut * h;
  const double to = y.maxCoeff() + settings.cut * h;

  // Bin on a power-of-two grid padded by 4h beyond the output range, then
  // convolve with the Gaussian kernel by FFT on twice that length. Long-tailed
  // samples get extra bins so the bin width stays below h / 16.
  const double lo = from - 4.0 * h;
  const double up = to + 4.0 * h;
  const double resolution = std::min(std::ceil(16.0 * (up - lo) / h) + 1.0, double{1 << 22});
  int bins = std::max({settings.grid_points, 512, static_cast<int>(resolution)});
  if (bins > 512) bins = 1 << static_cast<int>(std::ceil(std::log2(bins)));
  const double delta = (up - lo) / (bins - 1);

  std::vector<double> binned(2 * static_cast<std::size_t>(bins), 0.0);
  const double weight = 1.0 / static_cast<double>(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double pos = (y(i) - lo) / delta;
    const auto ix = static_cast<long>(std::floor(pos));
    const double frac = pos - static_cast<double>(ix);
    if (ix >= 0 && ix <= bins - 2) {
      binned[ix] += weight * (1.0 - frac);
      binned[ix + 1] += weight * frac;
    } else if (ix == -1) {
      binned[0] += weight * frac;
    } else if (ix == bins - 1) {
      binned[ix] += weight * (1.0 - frac);
    }
  }

  const std::size_t len = binned.size();
  std::vector<double> kernel(len);
  const double norm = 1.0 / (h * std::sqrt(2.0 * std::numbers::pi));
  for (std::size_t k = 0; k < len; ++k) {
    const double offset = static_cast<double>(k <= len / 2 ? k : len - k) * delta;
    kernel[k] = norm * std::exp(-0.5 * (offset / h) * (offset / h));
  }

  std::vector<Complex> bins_hat = real_dft(binned);
  const std::vector<Complex> kernel_hat = real_dft(kernel);
  // the kernel is even, so its transform is real and correlation equals convolution
  for (std::size_t k = 0; k < bins_hat.size(); ++k) bins_hat[k] *= kernel_hat[k].real() / static_cast<double>(len);
  const std::vector<double> smoothed = inverse_real_dft(bins_hat, static_cast<int>(len));

  Vector coarse_x(bins), coarse_y(bins);
  for (int k = 0; k < bins; ++k) {
    coarse_x(k) = lo + k * delta;
    coarse_y(k) = std::max(0.0, smoothed[static_cast<std::size_t>(k)]);
  }

  DensityEstimate out;
  out.bandwidth = h;
  out.grid = Vector::LinSpaced(settings.grid_points, from, to);
  out.values.resize(settings.grid_points);
  for (int k = 0; k < settings.grid_points; ++k) out.values(k) = interpolate(coarse_x, coarse_y, out.grid(k));
  return out;
}

DensityEstimate kde(const Trajectory& y, const KdeSettings& settings) {
  require_usable(y);
  return kde(y.values, settings);
}

SpectralEstimate smoothed_periodogram(const Eigen::Ref<const Vector>& y, double dt, const SpectrumSettings& settings) {
  require_summarizable(y);
  if (!(dt > 0.0)) throw DomainError("smoothed_periodogram: dt must be positive");
  const Eigen::Index m = y.size();

  std::vector<double> series(y.data(), y.data() + m);
  if (settings.detrend) {
    // least-squares line through (t, y)
    const double t_mean = 0.5 * static_cast<double>(m - 1);
    const double y_mean = y.mean();
    double sxy = 0.0, sxx = 0.0;
    for (Eigen::Index t = 0; t < m; ++t) {
      sxy += (static_cast<double>(t) - t_mean) * (series[t] - y_mean);
      sxx += (static_cast<double>(t) - t_mean) * (static_cast<double>(t) - t_mean);
    }
    const double slope = sxy / sxx;
    for (Eigen::Index t = 0; t < m; ++t) series[t] -= y_mean + slope * (static_cast<double>(t) - t_mean);
  } else if (settings.demean) {
    const double mean = y.mean();
    for (double& v : series) v -= mean;
  }

  // split cosine bell over taper/2 of the samples at each end
  const auto tapered = static_cast<Eigen::Index>(std::floor(static_cast<double>(m) * settings.taper / 2.0));
  double weight_sq_sum = static_cast<double>(m - 2 * tapered);
  for (Eigen::Index i = 0; i < tapered; ++i) {
    const double w = 0.5 * (1.0 - std::cos(std::numbers::pi * static_cast<double>(2 * i + 1) /
                                           static_cast<double>(2 * tapered)));
    series[i] *= w;
    series[m - 1 - i] *= w;
    weight_sq_sum += 2.0 * w * w;
  }
  const double u2 = settings.taper_correction ? weight_sq_sum / static_cast<double>(m) : 1.0;

  const std::vector<Complex> coeffs = real_dft(series);

  // Raw periodogram at bins 0..m/2; bin b and m - b coincide for real input.
  // Bin 0 is replaced by the mean of its neighbours 1 and m - 1.
  const double scale = dt / (static_cast<double>(m) * u2);
  std::vector<double> pgram(coeffs.size());
  for (std::size_t j = 0; j < coeffs.size(); ++j) pgram[j] = std::norm(coeffs[j]) * scale;
  pgram[0] = pgram[1];

  const Eigen::Index n_freq = m / 2;
  int k = settings.halfwidth_override >= 0
              ? settings.halfwidth_override
              : static_cast<int>(std::floor(settings.span_per_time * static_cast<double>(m) * dt / 2.0 + 1e-9));
  k = static_cast<int>(std::min<Eigen::Index>(k, (m - 1) / 2));

  SpectralEstimate out;
  out.smoother_halfwidths = {k};
  out.frequencies.resize(n_freq);
  out.values.resize(n_freq);
  for (Eigen::Index j = 1; j <= n_freq; ++j)
    out.frequencies(j - 1) = static_cast<double>(j) / (static_cast<double>(m) * dt);

  if (k == 0) {
    for (Eigen::Index j = 1; j <= n_freq; ++j) out.values(j - 1) = pgram[j];
    return out;
  }

  // Modified Daniell: weight 1/(2k) for |offset| < k, 1/(4k) at |offset| = k.
  // ext[t] holds the periodogram at bin t + 1 - k (mod m).
  const Eigen::Index ext_len = n_freq + 2 * k;
  std::vector<double> ext(static_cast<std::size_t>(ext_len));
  for (Eigen::Index t = 0; t < ext_len; ++t) {
    Eigen::Index bin = (t + 1 - k) % m;
    if (bin < 0) bin += m;
    if (bin > m / 2) bin = m - bin;
    ext[t] = pgram[static_cast<std::size_t>(bin)];
  }
  std::vector<long double> prefix(ext.size() + 1, 0.0L);
  for (std::size_t t = 0; t < ext.size(); ++t) prefix[t + 1] = prefix[t] + ext[t];
  const long double inner = 1.0L / (2.0L * k);
  const long double edge = 1.0L / (4.0L * k);
  for (Eigen::Index j = 1; j <= n_freq; ++j) {
    const Eigen::Index first = j - 1;  // bin j - k
    const Eigen::Index last = first + 2 * k;
    const long double middle = prefix[last] - prefix[first + 1];
    out.values(j - 1) = static_cast<double>(inner * middle + edge * (ext[first] + ext[last]));
  }
  return out;
}

SpectralEstimate smoothed_periodogram(const Trajectory& y, const SpectrumSettings& settings) {
  require_usable(y);
  return smoothed_periodogram(y.values, y.grid.dt, settings);
}

double interpolate(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y, double at, double outside) {
  const Eigen::Index n = x.size();
  if (n == 0 || at < x(0) || at > x(n - 1)) return outside;
  if (n == 1) return y(0);
  const double* begin = x.data();
  const double* hi = std::upper_bound(begin, begin + n, at);
  Eigen::Index i = std::clamp<Eigen::Index>(hi - begin, 1, n - 1);
  const double span = x(i) - x(i - 1);
  if (span <= 0.0) return y(i);
  const double frac = (at - x(i - 1)) / span;
  return y(i - 1) + frac * (y(i) - y(i - 1));
}

double iae(const Eigen::Ref<const Vector>& x1, const Eigen::Ref<const Vector>& y1, const Eigen::Ref<const Vector>& x2,
           const Eigen::Ref<const Vector>& y2, Extension extension) {
  if (x1.size() == 0 || x2.size() == 0) throw DomainError("iae: empty grid");
  if (x1.size() != y1.size() || x2.size() != y2.size()) throw DimensionError("iae: grid and values differ in length");

  const auto trapezoid = [](const std::vector<double>& x, const std::vector<double>& gap) {
    double total = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) total += 0.5 * (x[i] - x[i - 1]) * (gap[i] + gap[i - 1]);
    return total;
  };

  if (x1.size() == x2.size() && (x1.data() == x2.data() || x1 == x2)) {
    const Eigen::Index n = x1.size();
    if (n == 1) return 0.0;
    double total = 0.0;
    double previous = std::abs(y1(0) - y2(0));
    for (Eigen::Index i = 1; i < n; ++i) {
      const double gap = std::abs(y1(i) - y2(i));
      total += (x1(i) - x1(i - 1)) * (gap + previous);
      previous = gap;
    }
    return 0.5 * total;
  }

  std::vector<double> nodes;
  if (extension == Extension::zero) {
    nodes.reserve(static_cast<std::size_t>(x1.size() + x2.size()));
    std::merge(x1.data(), x1.data() + x1.size(), x2.data(), x2.data() + x2.size(), std::back_inserter(nodes));
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  } else {
    const double lo = std::max(x1(0), x2(0));
    const double hi = std::min(x1(x1.size() - 1), x2(x2.size() - 1));
    if (!(hi > lo)) throw DomainError("iae: curves have no common range");
    nodes.push_back(lo);
    for (Eigen::Index i = 0; i < x1.size(); ++i)
      if (x1(i) > lo && x1(i) < hi) nodes.push_back(x1(i));
    nodes.push_back(hi);
  }
  std::vector<double> gap(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i)
    gap[i] = std::abs(interpolate(x1, y1, nodes[i]) - interpolate(x2, y2, nodes[i]));
  return trapezoid(nodes, gap);
}

double iae(const DensityEstimate& f1, const DensityEstimate& f2) {
  return iae(f1.grid, f1.values, f2.grid, f2.values, Extension::zero);
}

double iae(const SpectralEstimate& s1, const SpectralEstimate& s2) {
  return iae(s1.frequencies, s1.values, s2.frequencies, s2.values, Extension::overlap);
}

SummaryPair summarize(const Eigen::Ref<const Vector>& y, double dt, const SummarySettings& settings) {
  SummaryPair out;
  if (settings.with_spectrum) out.spec = smoothed_periodogram(y, dt, settings.spectrum);
  if (settings.with_density) out.dens = kde(y, settings.kde);
  if (!settings.with_spectrum && !settings.with_density) require_summarizable(y);
  return out;
}

SummaryPair summarize(const Trajectory& y, const SummarySettings& settings) {
  require_usable(y);
  return summarize(y.values, y.grid.dt, settings);
}

} // namespace mpabc

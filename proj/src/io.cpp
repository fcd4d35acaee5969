#include "mpabc/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "mpabc/errors.hpp"

namespace mpabc {

namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw RunError("cannot write " + path.string());
  return out;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool parse_number(std::string_view text, double& value) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return false;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  return ec == std::errc() && ptr == text.data() + text.size();
}

[[noreturn]] void ingest_failure(const std::filesystem::path& path, std::size_t line, const std::string& what) {
  std::ostringstream msg;
  msg << path.string() << ":" << line << ": " << what;
  throw IngestError(msg.str());
}

} // namespace

std::string format_double(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.17g", v);
  return buffer;
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& y) {
  auto out = open_for_write(path);
  out << "t,y\n";
  for (Eigen::Index i = 0; i < y.values.size(); ++i)
    out << format_double(static_cast<double>(i + 1) * y.grid.dt) << ',' << format_double(y.values(i)) << '\n';
}

IngestedSeries read_series(const std::filesystem::path& path, double sample_rate, const Rescale& rescale) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open " + path.string());
  std::vector<double> times, values;
  std::string line;
  std::size_t line_no = 0;
  std::size_t columns = 0;
  bool seen_data = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = trim(line);
    if (text.empty()) continue;
    const auto fields = split(text, text.find(',') != std::string_view::npos ? ',' : ';');
    std::vector<double> parsed(fields.size());
    bool numeric = true;
    for (std::size_t k = 0; k < fields.size(); ++k) numeric = numeric && parse_number(fields[k], parsed[k]);
    if (!numeric) {
      if (!seen_data && columns == 0) {
        columns = fields.size();  // header
        if (columns > 2) ingest_failure(path, line_no, "expected one or two columns, got " + std::to_string(columns));
        continue;
      }
      ingest_failure(path, line_no, "non-numeric value '" + std::string(text) + "'");
    }
    if (columns == 0) columns = fields.size();
    if (fields.size() != columns)
      ingest_failure(path, line_no, "expected " + std::to_string(columns) + " columns, got " + std::to_string(fields.size()));
    if (columns > 2) ingest_failure(path, line_no, "expected one or two columns, got " + std::to_string(columns));
    seen_data = true;
    if (columns == 2) times.push_back(parsed[0]);
    values.push_back(parsed.back());
  }
  if (values.empty()) throw IngestError(path.string() + ": no samples");

  IngestedSeries out;
  out.source = path.string();
  if (sample_rate > 0.0) {
    out.sample_rate = sample_rate;
  } else if (times.size() >= 2) {
    out.sample_rate = static_cast<double>(times.size() - 1) / (times.back() - times.front());
  } else {
    throw IngestError(path.string() + ": sample rate not given and no time column to infer it from");
  }
  if (!(out.sample_rate > 0.0) || !std::isfinite(out.sample_rate))
    throw IngestError(path.string() + ": sample rate must be positive");
  out.samples = Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
  out.samples = (rescale.scale * out.samples.array() + rescale.offset).matrix();
  return out;
}

std::vector<Vector> cut_series(const Eigen::Ref<const Vector>& samples, std::size_t pieces) {
  if (pieces == 0) throw ConfigError("cut must be at least 1");
  const auto length = samples.size() / static_cast<Eigen::Index>(pieces);
  if (length == 0) throw IngestError("series too short to cut into " + std::to_string(pieces) + " pieces");
  std::vector<Vector> out;
  for (std::size_t k = 0; k < pieces; ++k) out.emplace_back(samples.segment(static_cast<Eigen::Index>(k) * length, length));
  return out;
}

ReferenceSet ingest(const std::vector<std::filesystem::path>& paths, double sample_rate, const Rescale& rescale,
                    std::size_t cut, const SummarySettings& settings) {
  if (paths.empty()) throw ConfigError("no reference files given");
  if (cut > 1 && paths.size() != 1) throw ConfigError("cut applies to a single reference file");
  ReferenceSet out;
  std::ostringstream prov;
  prov << "ingested";
  for (const auto& path : paths) {
    const IngestedSeries series = read_series(path, sample_rate, rescale);
    prov << ' ' << path.string();
    const auto segments = cut > 1 ? cut_series(series.samples, cut) : std::vector<Vector>{series.samples};
    for (const auto& segment : segments) {
      try {
        out.summaries.push_back(summarize(segment, series.dt(), settings));
      } catch (const SummaryError& e) {
        throw IngestError(path.string() + ": " + e.what());
      }
    }
  }
  if (cut > 1) prov << " cut=" << cut;
  out.provenance = prov.str();
  return out;
}

void write_curves_csv(const std::filesystem::path& path, const std::vector<Curve>& curves) {
  auto out = open_for_write(path);
  out << "x,value,series\n";
  for (const auto& c : curves)
    for (Eigen::Index i = 0; i < c.x.size(); ++i)
      out << format_double(c.x(i)) << ',' << format_double(c.value(i)) << ',' << c.series << '\n';
}

void write_samples_csv(const std::filesystem::path& path, const AbcRun& run) {
  auto out = open_for_write(path);
  for (const auto& name : run.names) out << display_name(name) << ',';
  out << "distance\n";
  for (const std::size_t i : run.kept) {
    const auto row = static_cast<Eigen::Index>(i);
    for (Eigen::Index j = 0; j < run.thetas.cols(); ++j) out << format_double(run.thetas(row, j)) << ',';
    out << format_double(run.distances(row)) << '\n';
  }
}

SampleTable read_samples_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path.string() + ": empty samples file");
  SampleTable table;
  for (const auto field : split(trim(line), ',')) table.names.emplace_back(field);
  if (table.names.empty() || table.names.back() != "distance")
    throw ConfigError(path.string() + ": last column must be 'distance'");
  table.names.pop_back();
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(trim(line), ',');
    if (fields.size() != table.names.size() + 1) ingest_failure(path, line_no, "wrong number of columns");
    std::vector<double> row(fields.size());
    for (std::size_t k = 0; k < fields.size(); ++k)
      if (!parse_number(fields[k], row[k]) && fields[k] != "inf") ingest_failure(path, line_no, "non-numeric value");
    rows.push_back(std::move(row));
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto k = static_cast<Eigen::Index>(table.names.size());
  table.values.resize(n, k);
  table.distances.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) table.values(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    table.distances(i) = rows[static_cast<std::size_t>(i)].back();
  }
  return table;
}

void write_posterior_csv(const std::filesystem::path& path, const PosteriorStats& stats) {
  auto out = open_for_write(path);
  out << "parameter,mean,sd,q025,q50,q975";
  for (const auto& name : stats.names) out << ",corr_" << display_name(name);
  out << '\n';
  for (std::size_t j = 0; j < stats.names.size(); ++j) {
    const auto c = static_cast<Eigen::Index>(j);
    out << display_name(stats.names[j]) << ',' << format_double(stats.mean(c)) << ',' << format_double(stats.sd(c))
        << ',' << format_double(stats.q025(c)) << ',' << format_double(stats.q50(c)) << ','
        << format_double(stats.q975(c));
    for (Eigen::Index k = 0; k < stats.correlation.cols(); ++k) out << ',' << format_double(stats.correlation(c, k));
    out << '\n';
  }
}

void write_histogram_csv(const std::filesystem::path& path, const std::vector<std::string>& names,
                         const Eigen::Ref<const Matrix>& samples, const std::vector<PriorBound>& ranges, int bins) {
  if (bins < 1) throw ConfigError("histogram needs at least one bin");
  auto out = open_for_write(path);
  out << "parameter,bin_lower,bin_upper,count\n";
  for (std::size_t j = 0; j < names.size(); ++j) {
    const double lo = ranges[j].lower;
    const double hi = ranges[j].upper;
    const double width = (hi - lo) / bins;
    std::vector<long> counts(static_cast<std::size_t>(bins), 0);
    for (Eigen::Index i = 0; i < samples.rows(); ++i) {
      const double v = samples(i, static_cast<Eigen::Index>(j));
      if (v < lo || v > hi) continue;
      const int b = std::min(bins - 1, static_cast<int>((v - lo) / width));
      ++counts[static_cast<std::size_t>(b)];
    }
    for (int b = 0; b < bins; ++b)
      out << display_name(names[j]) << ',' << format_double(lo + b * width) << ',' << format_double(lo + (b + 1) * width)
          << ',' << counts[static_cast<std::size_t>(b)] << '\n';
  }
}

} // namespace mpabc

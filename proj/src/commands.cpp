#include "mpabc/commands.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>

#include "mpabc/errors.hpp"
#include "mpabc/io.hpp"

namespace mpabc {

namespace {

namespace fs = std::filesystem;

void write_json(const fs::path& path, const Json& doc) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw RunError("cannot write " + path.string());
  out << std::setw(2) << doc << '\n';
}

std::uint64_t reference_seed(const RunConfig& config) { return config.reference.seed.value_or(config.seed); }

Curve spectrum_curve(const SpectralEstimate& s, std::string series) { return {std::move(series), s.frequencies, s.values}; }
Curve density_curve(const DensityEstimate& f, std::string series) { return {std::move(series), f.grid, f.values}; }

Vector normal_pdf(const Vector& x, double variance) {
  return ((-0.5 * x.array().square() / variance).exp() / std::sqrt(2.0 * std::numbers::pi * variance)).matrix();
}

} // namespace

std::vector<fs::path> cmd_simulate(const RunConfig& config, std::ostream& log) {
  if (config.reference.source != ReferenceConfig::Source::simulate)
    throw ConfigError("reference.source: simulate needs source = simulate");
  if (config.reference.m == 0) throw ConfigError("reference.m: must be at least 1");
  const SimulationSetup setup = config.reference_setup();
  const std::uint64_t seed = reference_seed(config);
  std::vector<fs::path> paths;
  for (std::size_t k = 0; k < config.reference.m; ++k) {
    const Trajectory path = setup.simulate_path(config.reference.theta, RngStream(seed, stream_id(StreamDomain::reference, k)));
    std::ostringstream name;
    name << "path_" << std::setw(3) << std::setfill('0') << k << ".csv";
    paths.push_back(config.output_dir / "reference" / name.str());
    write_trajectory_csv(paths.back(), path);
    if (path.overflowed) log << "warning: path " << k << " overflowed after " << path.values.size() << " samples\n";
  }
  Json manifest;
  manifest["command"] = "simulate";
  manifest["config"] = to_json(config);
  manifest["results"] = {{"files", Json::array()}, {"seed", seed}};
  for (const auto& p : paths) manifest["results"]["files"].push_back(p.filename().string());
  write_json(config.output_dir / "reference" / "manifest.json", manifest);
  log << "wrote " << paths.size() << " trajectories to " << (config.output_dir / "reference").string() << '\n';
  return paths;
}

ReferenceSet build_reference(const RunConfig& config) {
  if (config.reference.source == ReferenceConfig::Source::files)
    return ingest(config.reference.paths, config.reference.sample_rate, config.reference.rescale, config.reference.cut,
                  config.summary);
  return simulate_reference(config.reference_setup(), config.reference.theta, config.reference.m, reference_seed(config));
}

ReferenceSet cmd_ingest(const RunConfig& config, std::ostream& log) {
  if (config.reference.source != ReferenceConfig::Source::files)
    throw ConfigError("reference.source: ingest needs source = files");
  const ReferenceSet ref = build_reference(config);
  std::vector<Curve> spectra, densities;
  for (std::size_t k = 0; k < ref.size(); ++k) {
    spectra.push_back(spectrum_curve(ref.summaries[k].spec, "ref" + std::to_string(k)));
    densities.push_back(density_curve(ref.summaries[k].dens, "ref" + std::to_string(k)));
  }
  write_curves_csv(config.output_dir / "reference_spectra.csv", spectra);
  write_curves_csv(config.output_dir / "reference_densities.csv", densities);
  log << "ingested " << ref.size() << " reference series (" << ref.provenance << ")\n";
  return ref;
}

PilotResult cmd_pilot(const RunConfig& config, std::ostream& log) {
  PilotOptions options;
  options.iterations = config.pilot_l;
  options.seed = config.seed;
  options.workers = config.workers;
  const auto started = std::chrono::steady_clock::now();
  PilotResult result = pilot_weight(config.setup(), config.make_prior(), options);
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  fs::create_directories(config.output_dir);
  std::ofstream ratios(config.output_dir / "pilot_ratios.csv");
  ratios << "iteration,ratio\n";
  for (std::size_t l = 0; l < result.ratios.size(); ++l) ratios << l << ',' << format_double(result.ratios[l]) << '\n';
  Json manifest;
  manifest["command"] = "pilot";
  manifest["config"] = to_json(config);
  manifest["results"] = {{"weight", result.weight}, {"iterations", result.ratios.size()}, {"redraws", result.redraws},
                         {"elapsed_seconds", elapsed}};
  write_json(config.output_dir / "pilot.json", manifest);
  log << "pilot weight w = " << format_double(result.weight) << " from " << result.ratios.size() << " ratios\n";
  return result;
}

double resolve_weight(const RunConfig& config, std::ostream& log) {
  switch (config.weight_mode) {
    case WeightMode::zero: return 0.0;
    case WeightMode::fixed: return config.weight_value;
    case WeightMode::pilot: return cmd_pilot(config, log).weight;
  }
  return 0.0;
}

RunArtifacts cmd_run(const RunConfig& config, bool resume, std::ostream& log) {
  if (config.prior.empty()) throw ConfigError("prior: at least one parameter is required for a run");
  const fs::path manifest_path = config.output_dir / "manifest.json";
  const fs::path samples_path = config.output_dir / "accepted.csv";
  const Json config_json = to_json(config);

  RunArtifacts out;
  if (resume && fs::exists(manifest_path) && fs::exists(samples_path)) {
    std::ifstream in(manifest_path);
    const Json old = Json::parse(in, nullptr, false);
    Json a = old.is_discarded() ? Json() : old.value("config", Json());
    Json b = config_json;
    // worker count does not change results
    a.erase("workers");
    b.erase("workers");
    if (a == b) {
      const SampleTable table = read_samples_csv(samples_path);
      const Json& results = old["results"];
      out.resumed = true;
      out.run.names = config.make_prior().names();
      out.run.n_total = results.value("n_total", std::size_t{0});
      out.run.n_failed = results.value("failed", std::size_t{0});
      out.run.epsilon = results.value("epsilon", 0.0);
      out.run.kept = results.value("kept_trials", std::vector<std::size_t>{});
      if (out.run.kept.size() != static_cast<std::size_t>(table.values.rows()))
        throw RunError("cannot resume: " + manifest_path.string() + " does not match " + samples_path.string());
      // only kept draws are on disk; the rest are NaN
      const auto n = static_cast<Eigen::Index>(out.run.n_total);
      out.run.thetas = Matrix::Constant(n, table.values.cols(), std::nan(""));
      out.run.distances = Vector::Constant(n, std::nan(""));
      for (std::size_t r = 0; r < out.run.kept.size(); ++r) {
        const auto trial = static_cast<Eigen::Index>(out.run.kept[r]);
        if (trial >= n) throw RunError("cannot resume: trial index out of range in " + manifest_path.string());
        out.run.thetas.row(trial) = table.values.row(static_cast<Eigen::Index>(r));
        out.run.distances(trial) = table.distances(static_cast<Eigen::Index>(r));
      }
      out.run.percentile = config.percentile;
      out.run.seed = config.seed;
      out.stats = posterior_stats(out.run);
      log << "resumed: manifest matches, reusing " << samples_path.string() << '\n';
      return out;
    }
    log << "manifest differs from config; running again\n";
  }

  const auto started = std::chrono::steady_clock::now();
  const ReferenceSet reference = build_reference(config);
  DistanceConfig distance_config;
  distance_config.weight = resolve_weight(config, log);
  distance_config.aggregator = config.aggregator;
  const UniformPrior prior = config.make_prior();

  AbcSettings settings;
  settings.n_total = config.n_total;
  settings.percentile = config.percentile;
  settings.seed = config.seed;
  settings.workers = config.workers;
  out.run = run_abc(config.setup(), prior, reference, distance_config, settings);
  out.stats = posterior_stats(out.run);
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  write_samples_csv(samples_path, out.run);
  write_posterior_csv(config.output_dir / "posterior.csv", out.stats);
  write_histogram_csv(config.output_dir / "histograms.csv", out.run.names, out.run.kept_thetas(), prior.bounds(), 30);

  Json manifest;
  manifest["command"] = "run";
  manifest["config"] = config_json;
  Json prior_json = Json::object();
  for (const auto& b : prior.bounds()) prior_json[b.name] = Json::array({b.lower, b.upper});
  manifest["results"] = {{"seed", config.seed},
                         {"n_total", out.run.n_total},
                         {"percentile", out.run.percentile},
                         {"epsilon", out.run.epsilon},
                         {"kept", out.run.kept.size()},
                         {"kept_trials", out.run.kept},
                         {"failed", out.run.n_failed},
                         {"scheme", std::string(to_string(config.scheme))},
                         {"model", config.model_id},
                         {"prior", prior_json},
                         {"weight", distance_config.weight},
                         {"aggregator", std::string(to_string(distance_config.aggregator))},
                         {"reference", reference.provenance},
                         {"timings", {{"abc_seconds", out.run.elapsed_seconds}, {"total_seconds", elapsed}}}};
  write_json(manifest_path, manifest);

  log << "kept " << out.run.kept.size() << " of " << out.run.n_total << " draws (epsilon = " << format_double(out.run.epsilon)
      << ", failed = " << out.run.n_failed << ") in " << std::fixed << std::setprecision(1) << elapsed << " s\n";
  log.unsetf(std::ios::floatfield);
  log << std::setprecision(6);
  for (std::size_t j = 0; j < out.stats.names.size(); ++j)
    log << "  " << display_name(out.stats.names[j]) << ": mean " << out.stats.mean(static_cast<Eigen::Index>(j)) << ", sd "
        << out.stats.sd(static_cast<Eigen::Index>(j)) << '\n';
  return out;
}

std::vector<fs::path> cmd_plot_data(const RunConfig& config, const std::string& kind, const fs::path& run_dir,
                                    const std::string& perturb, const std::vector<double>& dts, std::ostream& log) {
  std::vector<fs::path> written;
  const fs::path dir = config.output_dir / "plot";

  if (kind == "summaries") {
    const SimulationSetup setup = config.reference_setup();
    const std::uint64_t seed = reference_seed(config);
    std::vector<Curve> spectra, densities;
    for (std::uint64_t k = 0; k < 2; ++k) {
      const SummaryPair s = summarize(
          setup.simulate_path(config.reference.theta, RngStream(seed, stream_id(StreamDomain::plot, k))), setup.summary);
      spectra.push_back(spectrum_curve(s.spec, "seed" + std::to_string(k)));
      densities.push_back(density_curve(s.dens, "seed" + std::to_string(k)));
    }
    if (!perturb.empty()) {
      const auto eq = perturb.find('=');
      if (eq == std::string::npos) throw ConfigError("--perturb: expected name=value");
      ParameterVector theta = config.reference.theta;
      try {
        theta.set(perturb.substr(0, eq), std::stod(perturb.substr(eq + 1)));
      } catch (const std::exception&) {
        throw ConfigError("--perturb: expected name=value");
      }
      const SummaryPair s = summarize(setup.simulate_path(theta, RngStream(seed, stream_id(StreamDomain::plot, 2))), setup.summary);
      spectra.push_back(spectrum_curve(s.spec, perturb));
      densities.push_back(density_curve(s.dens, perturb));
    }
    written = {dir / "spectra.csv", dir / "densities.csv"};
    write_curves_csv(written[0], spectra);
    write_curves_csv(written[1], densities);
  } else if (kind == "posterior") {
    const fs::path samples = run_dir / "accepted.csv";
    if (!fs::exists(samples)) throw ConfigError("missing artifact " + samples.string());
    const SampleTable table = read_samples_csv(samples);
    const UniformPrior prior = config.make_prior();
    std::vector<Curve> marginals, pairs;
    for (Eigen::Index j = 0; j < table.values.cols(); ++j) {
      const std::string& name = table.names[static_cast<std::size_t>(j)];
      try {
        marginals.push_back(density_curve(kde(table.values.col(j), config.summary.kde), name + ":posterior"));
      } catch (const SummaryError& e) {
        log << name << ": no posterior density (" << e.what() << ")\n";
      }
      for (const auto& b : prior.bounds()) {
        if (display_name(b.name) != name) continue;
        const Vector x = Vector::LinSpaced(config.summary.kde.grid_points, b.lower, b.upper);
        marginals.push_back({name + ":prior", x, Vector::Constant(x.size(), 1.0 / (b.upper - b.lower))});
      }
      for (Eigen::Index k = j + 1; k < table.values.cols(); ++k)
        pairs.push_back({name + ":" + table.names[static_cast<std::size_t>(k)], table.values.col(j), table.values.col(k)});
    }
    written = {dir / "posterior_marginals.csv", dir / "posterior_pairs.csv"};
    write_curves_csv(written[0], marginals);
    write_curves_csv(written[1], pairs);
  } else if (kind == "schemes") {
    const std::vector<double> steps = dts.empty() ? std::vector<double>{1e-3, 3e-3, 4.5e-3} : dts;
    const HamiltonianModel model = make_model(config.model_id, config.fixed.merged(config.reference.theta));
    std::vector<Curve> densities;
    Vector span;
    for (const double dt : steps) {
      const SimGrid grid = SimGrid::fit(dt, config.t_end);
      SimOptions options;
      options.burn_in = config.burn_in;
      const RngStream rng(reference_seed(config), stream_id(StreamDomain::plot, 0));
      for (const Scheme s : {Scheme::strang_sde_outer, Scheme::euler}) {
        const Trajectory path = simulate(model, grid, s, rng, options);
        std::ostringstream label;
        label << to_string(s) << " dt=" << dt;
        if (path.overflowed) {
          log << label.str() << ": overflowed, no density\n";
          continue;
        }
        const DensityEstimate f = kde(path, config.summary.kde);
        densities.push_back(density_curve(f, label.str()));
        if (span.size() == 0) span = f.grid;
      }
    }
    if (model.analytics && span.size() > 0)
      densities.push_back({"analytic", span, normal_pdf(span, model.analytics->variance)});
    written = {dir / "scheme_densities.csv"};
    write_curves_csv(written[0], densities);
  } else {
    throw ConfigError("unknown plot kind '" + kind + "' (expected summaries, posterior or schemes)");
  }
  for (const auto& p : written) log << "wrote " << p.string() << '\n';
  return written;
}

PosteriorStats cmd_stats(const fs::path& run_dir, std::ostream& log) {
  const fs::path samples = run_dir / "accepted.csv";
  if (!fs::exists(samples)) throw ConfigError("missing artifact " + samples.string());
  const SampleTable table = read_samples_csv(samples);
  const PosteriorStats stats = posterior_stats(table.names, table.values);
  write_posterior_csv(run_dir / "posterior.csv", stats);
  log << std::left << std::setw(10) << "parameter" << std::right << std::setw(14) << "mean" << std::setw(14) << "sd"
      << std::setw(14) << "q2.5" << std::setw(14) << "q50" << std::setw(14) << "q97.5" << '\n';
  for (std::size_t j = 0; j < stats.names.size(); ++j) {
    const auto c = static_cast<Eigen::Index>(j);
    log << std::left << std::setw(10) << stats.names[j] << std::right << std::setprecision(6) << std::setw(14)
        << stats.mean(c) << std::setw(14) << stats.sd(c) << std::setw(14) << stats.q025(c) << std::setw(14)
        << stats.q50(c) << std::setw(14) << stats.q975(c) << '\n';
  }
  log << "correlation:\n" << stats.correlation << '\n';
  if (stats.degenerate) log << "note: some parameter has zero spread; its correlations are reported as 0\n";
  return stats;
}

} // namespace mpabc

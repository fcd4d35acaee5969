#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mpabc/commands.hpp"
#include "mpabc/config.hpp"
#include "mpabc/errors.hpp"

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out;
};

mpabc::RunConfig load(const Globals& g) {
  if (g.config.empty()) throw mpabc::ConfigError("--config is required");
  mpabc::RunConfig c = mpabc::load_config(g.config, mpabc::process_environment());
  if (g.seed) c.seed = *g.seed;
  if (g.workers) {
    if (*g.workers < 1) throw mpabc::ConfigError("--workers must be at least 1");
    c.workers = *g.workers;
  }
  if (g.out) c.output_dir = *g.out;
  return c;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Measure-preserving ABC for partially observed Hamiltonian-type SDEs"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "JSON run configuration (or a run manifest)");
  app.add_option("--seed", g.seed, "master seed");
  app.add_option("--workers", g.workers, "worker threads");
  app.add_option("--out", g.out, "output directory");

  auto* simulate = app.add_subcommand("simulate", "write reference trajectories as t,y CSV");
  auto* ingest = app.add_subcommand("ingest", "summarize external series listed under reference.paths");
  auto* pilot = app.add_subcommand("pilot", "calibrate the density weight w");
  auto* run = app.add_subcommand("run", "rejection ABC with posterior summaries");
  bool resume = false;
  run->add_flag("--resume", resume, "reuse an output directory whose manifest matches");

  auto* plot = app.add_subcommand("plot-data", "write x,value,series CSVs for plotting");
  std::string kind = "summaries";
  std::string run_dir;
  std::string perturb;
  std::vector<double> dts;
  plot->add_option("--kind", kind, "summaries | posterior | schemes")->check(CLI::IsMember({"summaries", "posterior", "schemes"}));
  plot->add_option("--run", run_dir, "run directory (posterior); default: output_dir");
  plot->add_option("--perturb", perturb, "name=value for a third summary (summaries)");
  plot->add_option("--dt", dts, "time steps (schemes)");

  auto* stats = app.add_subcommand("stats", "posterior statistics of a finished run");
  stats->add_option("--run", run_dir, "run directory; default: output_dir");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*simulate) {
      mpabc::cmd_simulate(load(g), std::cout);
    } else if (*ingest) {
      mpabc::cmd_ingest(load(g), std::cout);
    } else if (*pilot) {
      mpabc::cmd_pilot(load(g), std::cout);
    } else if (*run) {
      mpabc::cmd_run(load(g), resume, std::cout);
    } else if (*plot) {
      const mpabc::RunConfig c = load(g);
      mpabc::cmd_plot_data(c, kind, run_dir.empty() ? c.output_dir : std::filesystem::path(run_dir), perturb, dts, std::cout);
    } else if (*stats) {
      std::filesystem::path dir = run_dir;
      if (dir.empty()) dir = g.out ? std::filesystem::path(*g.out) : load(g).output_dir;
      mpabc::cmd_stats(dir, std::cout);
    }
  } catch (const mpabc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const mpabc::IngestError& e) {
    std::cerr << "ingest error: " << e.what() << '\n';
    return 2;
  } catch (const mpabc::RunError& e) {
    std::cerr << "run error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

// noisysde: convergence experiments, single trajectories and self-tests for
// strong SDE schemes under noisy coefficient information.
//
// Exit codes: 0 success, 1 validation error, 2 runtime error, 3 self-test
// failure.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "noisysde/config.hpp"
#include "noisysde/harness.hpp"
#include "noisysde/output.hpp"
#include "noisysde/selftest.hpp"

namespace fs = std::filesystem;
using namespace noisysde;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitSelftest = 3;

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::int64_t> seed;
  std::optional<int> workers;
  std::optional<std::int64_t> trajectories;
  std::optional<std::string> out_dir;
  bool paper_scale = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("-c,--config", o.config_path, "Experiment configuration file")
      ->check(CLI::ExistingFile);
  cmd->add_option("--set", o.overrides, "Override a configuration key (key=value), repeatable");
  cmd->add_option("--seed", o.seed, "Master seed");
  cmd->add_option("--workers", o.workers, "Worker threads (output does not depend on it)");
  cmd->add_option("--trajectories", o.trajectories, "Monte Carlo trajectories K");
  cmd->add_option("-o,--out-dir", o.out_dir, "Output directory");
  cmd->add_flag("--paper-scale", o.paper_scale,
                "Reference factor 1000 and 10^4 trajectories (slow)");
}

CliConfig resolve(const CommonOptions& o) {
  CliConfig cfg;
  if (!o.config_path.empty()) cfg = load_config(o.config_path);
  if (o.paper_scale) {
    cfg.experiment.reference_factor = 1000;
    cfg.experiment.trajectories = 10000;
  }
  for (const auto& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw config_error(kv, "--set expects key=value");
    apply_setting(cfg, std::string(config_detail::trim(kv.substr(0, eq))), kv.substr(eq + 1));
  }
  if (o.seed) {
    if (*o.seed < 0) throw config_error("seed", "must be non-negative");
    cfg.experiment.seed = static_cast<std::uint64_t>(*o.seed);
  }
  if (o.workers) cfg.experiment.workers = *o.workers;
  if (o.trajectories) cfg.experiment.trajectories = *o.trajectories;
  if (o.out_dir) cfg.output.directory = *o.out_dir;
  validate(cfg);
  return cfg;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

int cmd_convergence(const CommonOptions& o, bool svg, bool quiet) {
  CliConfig cfg = resolve(o);
  if (svg) cfg.output.svg = true;
  const auto result = run_experiment(cfg.experiment);
  const fs::path dir(cfg.output.directory);
  fs::create_directories(dir);
  {
    auto out = open_output(dir / "errors.csv");
    write_errors_csv(out, result.table);
  }
  {
    auto out = open_output(dir / "rates.csv");
    write_rates_csv(out, result.rates);
  }
  if (cfg.output.svg) {
    auto out = open_output(dir / "convergence.svg");
    write_svg_plot(out, result.table, cfg.experiment.build_problem().name() + ": strong error");
  }
  if (!quiet) {
    for (const auto& r : result.rates) {
      std::cout << to_string(r.scheme) << "  " << r.schedule << "  ";
      if (r.fit) {
        std::cout << "rate " << format_double(std::round(r.fit->slope * 1000) / 1000) << "  R^2 "
                  << format_double(std::round(r.fit->r2 * 1000) / 1000) << '\n';
      } else {
        std::cout << "no rate (" << r.note << ")\n";
      }
    }
    std::cout << "wrote " << (dir / "errors.csv").string() << '\n';
  }
  return 0;
}

int cmd_simulate(const CommonOptions& o, std::int64_t trajectory, std::optional<std::int64_t> n_opt,
                 const std::string& out_path) {
  const CliConfig cfg = resolve(o);
  const auto& e = cfg.experiment;
  if (trajectory < 0) throw config_error("trajectory", "must be non-negative");
  const std::int64_t n = n_opt.value_or(e.n_grid.front());
  if (n < 1) throw config_error("n", "must be >= 1");
  const SdeProblem problem = e.build_problem();
  const auto streams = TrajectoryStreams::make(e.seed, n, trajectory);
  const WienerPath path = wiener_generate(n * e.reference_factor, problem.horizon(), streams.wiener);
  const auto coarse = coarsen(path, e.reference_factor);
  const auto& sch = e.schedules.front();
  const auto a = make_oracle(problem.drift(), sch.drift.at(n), e.noise.drift_class, e.noise,
                             noise_stream(e.seed, n, 0, false));
  const auto b = make_oracle(problem.diffusion(), sch.diffusion.at(n), e.noise.diffusion_class,
                             e.noise, noise_stream(e.seed, n, 0, true));
  RunOptions opts;
  opts.trajectory_id = static_cast<std::uint64_t>(trajectory);
  opts.record_trajectory = true;
  const Mesh mesh(problem.horizon(), n);
  const auto run = run_scheme(problem, a, b, e.schemes.front(), mesh, coarse,
                              RandomizationStream(streams.xi), opts);
  if (out_path == "-") {
    write_trajectory_csv(std::cout, mesh, run.trajectory);
  } else {
    const fs::path target = out_path.empty() ? fs::path(cfg.output.directory) / "trajectory.csv"
                                             : fs::path(out_path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    auto out = open_output(target);
    write_trajectory_csv(out, mesh, run.trajectory);
  }
  return 0;
}

int cmd_selftest(const SelftestOptions& options) {
  const auto results = run_selftest(options);
  return report_selftest(std::cout, results) ? 0 : kExitSelftest;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Strong approximation of scalar SDEs under noisy coefficient information"};
  app.require_subcommand(1);

  CommonOptions conv_opts;
  bool svg = false, quiet = false;
  auto* conv = app.add_subcommand("convergence", "Monte Carlo strong errors and fitted rates");
  add_common(conv, conv_opts);
  conv->add_flag("--svg", svg, "Also write convergence.svg");
  conv->add_flag("-q,--quiet", quiet, "No summary on stdout");

  CommonOptions sim_opts;
  std::int64_t trajectory = 0;
  std::optional<std::int64_t> sim_n;
  std::string sim_out;
  auto* sim = app.add_subcommand("simulate", "Write one trajectory (t, X(t)) as CSV");
  add_common(sim, sim_opts);
  sim->add_option("-k,--trajectory", trajectory, "Trajectory index");
  sim->add_option("-n,--steps", sim_n, "Mesh size (default: first n of the grid)");
  sim->add_option("--out", sim_out, "Output file, '-' for stdout (default: <out-dir>/trajectory.csv)");

  SelftestOptions st;
  std::string fault;
  auto* self = app.add_subcommand("selftest", "Run the invariant suites");
  self->add_option("--samples", st.samples, "Samples per bound-check suite")
      ->check(CLI::Range(std::int64_t{10000}, std::int64_t{100000000}));
  self->add_option("--inject-fault", fault, "Inject a fault (coarsen)")
      ->check(CLI::IsMember({"coarsen"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*conv) return cmd_convergence(conv_opts, svg, quiet);
    if (*sim) return cmd_simulate(sim_opts, trajectory, sim_n, sim_out);
    st.inject_bad_coarsen = fault == "coarsen";
    return cmd_selftest(st);
  } catch (const config_error& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

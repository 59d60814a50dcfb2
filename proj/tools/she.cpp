// Command-line front end: experiment orchestration and report emission.

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "she/config.hpp"
#include "she/report.hpp"
#include "she/runner.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::size_t replicas = 0;
  int workers = 0;
};

void attach_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "experiment config file");
  cmd->add_option("--out", opts.out_dir, "output directory");
  cmd->add_option("--seed", opts.seed, "master seed override")
      ->each([&opts](const std::string&) { opts.seed_set = true; });
  cmd->add_option("--replicas", opts.replicas, "replica count override");
  cmd->add_option("--workers", opts.workers, "worker thread count");
}

she::ExperimentConfig resolve_config(const CommonOpts& opts,
                                     const std::string& suite) {
  she::ExperimentConfig cfg;
  if (!opts.config_path.empty()) cfg = she::load_config(opts.config_path);
  if (!suite.empty()) cfg.suite = suite;
  if (!opts.out_dir.empty()) cfg.out_dir = opts.out_dir;
  if (opts.seed_set) cfg.master_seed = opts.seed;
  if (opts.replicas > 0) cfg.replicas = opts.replicas;
  if (opts.workers > 0) cfg.workers = opts.workers;
  return cfg;
}

int do_simulate(const CommonOpts& opts) {
  she::ExperimentConfig cfg = resolve_config(opts, "");
  std::filesystem::create_directories(cfg.out_dir);
  she::Coefficient coeff = she::build_coefficient(cfg);
  std::vector<double> u0(cfg.grid.n, cfg.u0_constant);
  auto outcomes = she::replicate<int>(
      cfg.replicas, cfg.workers, [&](std::size_t r) {
        auto traj = she::simulate(coeff, u0, cfg.grid,
                                  she::NoiseStream(cfg.master_seed, r));
        std::string stem = cfg.out_dir + "/traj_r" + std::to_string(r);
        she::write_trajectory_binary(traj, stem + ".bin");
        she::write_trajectory_csv(traj, stem + ".csv");
        return 0;
      });
  she::write_manifest(cfg, 0.0, cfg.out_dir + "/manifest.txt");
  int failures = 0;
  for (std::size_t r = 0; r < outcomes.size(); ++r) {
    if (!outcomes[r].error.empty()) {
      std::fprintf(stderr, "replica %zu failed: %s\n", r,
                   outcomes[r].error.c_str());
      ++failures;
    }
  }
  std::printf("wrote %zu trajectories to %s\n", outcomes.size() - failures,
              cfg.out_dir.c_str());
  return failures == 0 ? 0 : 1;
}

int do_verify(const CommonOpts& opts, const std::string& suite) {
  she::ExperimentConfig cfg = resolve_config(opts, suite);
  int status = she::run(cfg);
  std::printf("suite '%s': %s (reports in %s)\n", cfg.suite.c_str(),
              status == 0 ? "all claims pass" : "FAILURES", cfg.out_dir.c_str());
  return status;
}

int do_report(const CommonOpts& opts, const std::string& suite) {
  std::string dir = opts.out_dir.empty() ? "out" : opts.out_dir;
  std::vector<she::SuiteReport> reports;
  if (!suite.empty()) {
    reports.push_back(she::load_report_json(dir + "/" + suite + "_report.json"));
  } else {
    for (const auto& name : she::all_suite_names()) {
      std::string path = dir + "/" + name + "_report.json";
      if (std::filesystem::exists(path))
        reports.push_back(she::load_report_json(path));
    }
    if (reports.empty())
      throw she::invalid_parameter("no suite reports found in " + dir);
  }
  auto written = she::emit_plot_data(reports, dir);
  for (const auto& p : written) std::printf("%s\n", p.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stochastic heat equation simulator and verification harness"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string report_suite;

  CLI::App* sim = app.add_subcommand("simulate", "run replicas, export trajectories");
  attach_common(sim, opts);

  const char* suites[] = {"kernel",     "moments",  "holder",     "comparison",
                          "positivity", "critical", "superlinear"};
  for (const char* s : suites) {
    CLI::App* cmd = app.add_subcommand(std::string("verify-") + s,
                                       std::string("run the ") + s + " suite");
    attach_common(cmd, opts);
  }

  CLI::App* rpt = app.add_subcommand("report", "emit plot data from reports");
  attach_common(rpt, opts);
  rpt->add_option("--suite", report_suite, "emit only this suite's figures");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return do_simulate(opts);
    if (rpt->parsed()) return do_report(opts, report_suite);
    for (const char* s : suites) {
      if (app.get_subcommand(std::string("verify-") + s)->parsed())
        return do_verify(opts, s);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}

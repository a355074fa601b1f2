#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <exception>
#include <string>

#include "sticky/experiments.hpp"

#ifndef STICKY_HYDRO_GIT_REV
#define STICKY_HYDRO_GIT_REV "unknown"
#endif

int main(int argc, char** argv) {
  CLI::App app{"sticky-hydro: exclusion channel with mean-field reservoirs, dual sticky walks,\n"
               "and the free-boundary heat equation, with experiment runners for the\n"
               "hydrodynamic-limit and correlation-decay checks"};
  app.name("sticky-hydro");

  std::string experiment, config_path, out_dir;
  std::string seed_str;
  bool list_checks_flag = false, version_flag = false;
  app.add_option("experiment", experiment,
                 "hydro-convergence | chaos-decay | walk-diagnostics | fbp-selftest");
  app.add_option("--config", config_path, "key = value configuration file");
  app.add_option("--seed", seed_str, "override the RNG seed");
  app.add_option("--out", out_dir, "override the output directory");
  app.add_flag("--list-checks", list_checks_flag, "print the checks an experiment runs");
  app.add_flag("--version", version_flag, "print version and exit");

  CLI11_PARSE(app, argc, argv);

  if (version_flag) {
    std::printf("sticky-hydro 1.0.0 (%s)\n", STICKY_HYDRO_GIT_REV);
    return 0;
  }

  try {
    sticky::ExperimentConfig cfg;
    if (!config_path.empty()) cfg = sticky::parse_config_file(config_path);
    if (!experiment.empty()) sticky::apply_config_entry(cfg, "experiment", experiment, 0);
    if (!seed_str.empty()) sticky::apply_config_entry(cfg, "seed", seed_str, 0);
    if (!out_dir.empty()) sticky::apply_config_entry(cfg, "output_dir", out_dir, 0);

    if (list_checks_flag) {
      if (cfg.experiment.empty()) {
        for (const char* e :
             {"hydro-convergence", "chaos-decay", "walk-diagnostics", "fbp-selftest"}) {
          std::printf("%s:\n", e);
          for (const auto& c : sticky::list_checks(e)) std::printf("  - %s\n", c.c_str());
        }
      } else {
        for (const auto& c : sticky::list_checks(cfg.experiment))
          std::printf("  - %s\n", c.c_str());
      }
      return 0;
    }

    sticky::finalize_config(cfg);
    const auto t0 = std::chrono::steady_clock::now();
    const sticky::ExperimentReport rep = sticky::run_experiment(cfg);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    sticky::write_report_files(rep, cfg, wall);

    std::printf("%s: %zu rows, %.1f s -> %s/%s.csv\n", rep.experiment.c_str(), rep.rows.size(),
                wall, cfg.output_dir.c_str(), rep.experiment.c_str());
    for (const auto& f : rep.failures) std::printf("FAIL %s\n", f.c_str());
    if (rep.pass()) std::printf("all checks passed\n");
    return rep.pass() ? 0 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}

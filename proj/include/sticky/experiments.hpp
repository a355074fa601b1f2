#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "sticky/lattice.hpp"

namespace sticky {

// Named initial datum for the experiment runners.
struct DatumSpec {
  enum class Kind { Constant, Linear, Step, Sine, Table };
  Kind kind = Kind::Linear;
  double c = 0.5;                                  // Constant level
  std::vector<std::pair<double, double>> table;    // (r, value), sorted in r
  bool v0_overridden = false;
  double v0_minus = 0.0, v0_plus = 0.0;
};

InitialData make_initial_data(const DatumSpec& datum);

struct ExperimentConfig {
  std::string experiment;  // hydro-convergence | chaos-decay | walk-diagnostics | fbp-selftest
  std::vector<int> N_list;
  DatumSpec datum;
  double T = 0.0;
  int replicas = 0;
  std::uint64_t seed = 12345;
  double h = 1e-3;
  std::string output_dir = ".";
  std::vector<double> tau_list;

  // which keys were given explicitly (file or flag); the rest get
  // per-experiment defaults in finalize_config
  std::vector<std::string> given;
  bool was_given(const std::string& key) const;
};

// Line-based "key = value" file; '#' starts a comment.  Unknown keys and
// malformed lines are reported with their line number.
ExperimentConfig parse_config_file(const std::string& path);
void apply_config_entry(ExperimentConfig& cfg, const std::string& key, const std::string& value,
                        int line_no);
// Fills experiment-specific defaults and checks the invariants.
void finalize_config(ExperimentConfig& cfg);

struct ReportRow {
  int N = 0;
  double tau = 0.0;
  std::string metric;
  double value = 0.0;
  double se = 0.0;
};

struct ExperimentReport {
  std::string experiment;
  std::vector<ReportRow> rows;
  std::vector<std::string> failures;  // empty iff all checks passed
  bool pass() const { return failures.empty(); }
};

ExperimentReport run_hydro_convergence(const ExperimentConfig& cfg);
ExperimentReport run_chaos_decay(const ExperimentConfig& cfg);
ExperimentReport run_walk_diagnostics(const ExperimentConfig& cfg);
ExperimentReport run_fbp_selftest(const ExperimentConfig& cfg);
ExperimentReport run_experiment(const ExperimentConfig& cfg);

// Deterministic CSV (header N,tau,metric,value,stderr); metadata goes to a
// separate sidecar so the CSV is byte-identical under a fixed seed.
void write_report_csv(const ExperimentReport& rep, std::ostream& os);
void write_report_files(const ExperimentReport& rep, const ExperimentConfig& cfg,
                        double wall_seconds);

// names of the checks each experiment evaluates, for --list-checks
std::vector<std::string> list_checks(const std::string& experiment);

// two-sided Kolmogorov-Smirnov helpers (asymptotic p-value)
double ks_statistic_exp(std::vector<double> samples, double rate);
double ks_p_value(double d, std::size_t n);

}  // namespace sticky

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sticky/lattice.hpp"

namespace sticky {

// Which microscopic process to run: Omega keeps reservoir particle counts,
// OmegaStar keeps one bit per reservoir site (slowed stirring bonds).
enum class ProcessKind { Omega, OmegaStar };

struct SimConfig {
  LatticeSpec spec;
  double horizon_tau = 0.0;  // macroscopic horizon; microscopic horizon is N^2 T
  InitialData initial;
  int replicas = 1;
  std::uint64_t seed = 0;
  ProcessKind kind = ProcessKind::Omega;
  std::vector<double> sample_taus;               // macroscopic sample times in [0, T]
  std::vector<std::pair<int, int>> pairs;        // channel site pairs to record
  bool record_profiles = true;
  int workers = 0;  // 0 = STICKY_HYDRO_WORKERS or hardware concurrency
};

// Per-replica records at the sample times.  Profiles store occupation bits on
// the channel and n_±/M at the boundary slots.
struct TrajectorySamples {
  LatticeSpec spec{2};
  std::vector<double> sample_taus;
  int replicas = 0;
  bool has_profiles = false;
  std::vector<double> profiles;  // [replica][time][site 0..N+1]
  std::vector<std::pair<int, int>> pairs;
  std::vector<std::uint8_t> pair_bits;  // [replica][time][pair][2]

  double profile_at(int rep, int time, int site) const {
    return profiles[(static_cast<std::size_t>(rep) * sample_taus.size() + time) *
                        spec.num_sites() +
                    site];
  }
  const std::uint8_t* pair_at(int rep, int time, int pair) const {
    return &pair_bits[((static_cast<std::size_t>(rep) * sample_taus.size() + time) *
                           pairs.size() +
                       pair) *
                      2];
  }
};

TrajectorySamples simulate_omega(const SimConfig& cfg);
TrajectorySamples simulate_omega_star(const SimConfig& cfg);

// Sticky walk via the time-change of the reflected walk: boundary sojourns of
// the rate-1 reflected walk are stretched by the factor 2N.
struct StickyWalkPath {
  std::vector<double> jump_times;                     // sticky clock, increasing
  std::vector<int> positions;                         // size jump_times.size() + 1
  std::vector<std::pair<int, double>> boundary_sojourns;  // (site, stretched duration)

  int state_at(double t) const;
};

StickyWalkPath simulate_sticky_walk(const LatticeSpec& spec, int x0, double horizon_micro,
                                    std::uint64_t seed);

struct DensityEstimate {
  std::vector<double> taus;
  std::vector<DensityProfile> mean;
  std::vector<DensityProfile> se;
};

DensityEstimate estimate_density(const TrajectorySamples& samples);

// Covariance E[eta(x1) eta(x2)] - E[eta(x1)] E[eta(x2)] per recorded pair and
// sample time, with jackknife standard errors.
struct TwoPointEstimate {
  std::vector<double> taus;
  std::vector<std::pair<int, int>> pairs;
  std::vector<double> cov;  // [time][pair]
  std::vector<double> se;

  double cov_at(int time, int pair) const { return cov[time * pairs.size() + pair]; }
  double se_at(int time, int pair) const { return se[time * pairs.size() + pair]; }
};

TwoPointEstimate estimate_two_point(const TrajectorySamples& samples,
                                    const std::vector<std::pair<int, int>>& pairs);

// CSV dump (replica, tau, site, value); written gzip-compressed when the path
// ends in ".gz".
void dump_samples_csv(const TrajectorySamples& samples, const std::string& path);

// STICKY_HYDRO_WORKERS if set (positive), otherwise hardware concurrency.
int default_worker_count();

}  // namespace sticky

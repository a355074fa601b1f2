#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <zlib.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "sticky/ctmc.hpp"
#include "sticky/experiments.hpp"
#include "sticky/mean_ode.hpp"
#include "sticky/rng.hpp"
#include "sticky/simulate.hpp"

using namespace sticky;

namespace {

const InitialData kHalf{[](double) { return 0.5; }, 0.5, 0.5};
const InitialData kLinear{[](double r) { return r; }, 0.0, 1.0};

double omega_total(const TrajectorySamples& s, int rep, int time) {
  const int N = s.spec.N, M = s.spec.M();
  double total = std::llround(s.profile_at(rep, time, 0) * M) +
                 std::llround(s.profile_at(rep, time, N + 1) * M);
  for (int x = 1; x <= N; ++x) total += s.profile_at(rep, time, x);
  return total;
}

}  // namespace

TEST_CASE("jammed and empty configurations are frozen") {
  const LatticeSpec spec(6);
  for (ProcessKind kind : {ProcessKind::Omega, ProcessKind::OmegaStar}) {
    SimConfig cfg{spec, 0.5, InitialData{[](double) { return 1.0; }, 1.0, 1.0},
                  5,    7,   kind, {0.0, 0.1, 0.5}};
    const TrajectorySamples full =
        kind == ProcessKind::Omega ? simulate_omega(cfg) : simulate_omega_star(cfg);
    cfg.initial = InitialData{[](double) { return 0.0; }, 0.0, 0.0};
    const TrajectorySamples empty =
        kind == ProcessKind::Omega ? simulate_omega(cfg) : simulate_omega_star(cfg);
    for (int r = 0; r < 5; ++r)
      for (int k = 0; k < 3; ++k)
        for (int x = 0; x < spec.num_sites(); ++x) {
          CHECK(full.profile_at(r, k, x) == 1.0);
          CHECK(empty.profile_at(r, k, x) == 0.0);
        }
  }
}

TEST_CASE("pathwise conservation and bit-for-bit reproducibility") {
  const LatticeSpec spec(6);
  SimConfig cfg{spec, 0.4, kLinear, 40, 99, ProcessKind::Omega, {0.0, 0.05, 0.2, 0.4}};
  const TrajectorySamples a = simulate_omega(cfg);
  for (int r = 0; r < cfg.replicas; ++r) {
    const double t0 = omega_total(a, r, 0);
    for (int k = 1; k < 4; ++k) CHECK(omega_total(a, r, k) == t0);
  }
  const TrajectorySamples b = simulate_omega(cfg);
  CHECK(a.profiles == b.profiles);

  cfg.kind = ProcessKind::OmegaStar;
  const TrajectorySamples c = simulate_omega_star(cfg);
  for (int r = 0; r < cfg.replicas; ++r) {
    const double t0 = omega_total(c, r, 0);
    for (int k = 1; k < 4; ++k) CHECK(omega_total(c, r, k) == t0);
  }
  cfg.workers = 2;  // worker count must not change the trajectories
  const TrajectorySamples d = simulate_omega_star(cfg);
  CHECK(c.profiles == d.profiles);
}

TEST_CASE("empirical means track the moment system") {
  const LatticeSpec spec(8);
  for (const InitialData& init : {kHalf, kLinear}) {
    SimConfig cfg{spec, 0.2, init, 10000, 31, ProcessKind::Omega, {0.2}};
    const DensityEstimate est = estimate_density(simulate_omega(cfg));
    const MeanTrajectory ode = evolve_mean_ode(spec, discretize_initial(spec, init), {0.2});
    for (int x = 0; x < spec.num_sites(); ++x) {
      const double se = std::max(est.se[0][x], 1e-4);
      CHECK(std::fabs(est.mean[0][x] - ode.profiles[0][x]) <= 4.0 * se);
    }
  }
}

TEST_CASE("the bit-reservoir marginal matches the counting process") {
  const LatticeSpec spec(6);
  const InitialData init{[](double r) { return 0.3 + 0.4 * r; }, 0.2, 0.9};
  SimConfig cfg{spec, 0.3, init, 8000, 5, ProcessKind::Omega, {0.1, 0.3}};
  const DensityEstimate omega = estimate_density(simulate_omega(cfg));
  cfg.kind = ProcessKind::OmegaStar;
  cfg.seed = 6;
  const DensityEstimate star = estimate_density(simulate_omega_star(cfg));
  for (int k = 0; k < 2; ++k)
    for (int x = 0; x < spec.num_sites(); ++x) {
      const double se = std::hypot(omega.se[k][x], star.se[k][x]);
      CHECK(std::fabs(omega.mean[k][x] - star.mean[k][x]) <= 4.0 * std::max(se, 1e-4));
    }
}

TEST_CASE("sticky walk: sojourn laws and empirical transitions") {
  const LatticeSpec spec(10);
  const StickyWalkPath path = simulate_sticky_walk(spec, 5, 3.2e5, 42);

  std::vector<double> interior;
  double prev = 0.0;
  for (std::size_t k = 0; k < path.jump_times.size(); ++k) {
    const int site = path.positions[k];
    if (site != 0 && site != 11 && interior.size() < 10000)
      interior.push_back(path.jump_times[k] - prev);
    prev = path.jump_times[k];
  }
  REQUIRE(interior.size() == 10000);
  CHECK(ks_p_value(ks_statistic_exp(interior, 1.0), interior.size()) > 0.01);

  REQUIRE(path.boundary_sojourns.size() >= 10000);
  double mean = 0.0;
  for (const auto& [site, dur] : path.boundary_sojourns) mean += dur;
  mean /= path.boundary_sojourns.size();
  double var = 0.0;
  for (const auto& [site, dur] : path.boundary_sojourns) var += (dur - mean) * (dur - mean);
  const double se = std::sqrt(var / (path.boundary_sojourns.size() - 1.0) /
                              path.boundary_sojourns.size());
  CHECK(std::fabs(mean - 20.0) <= 3.0 * se);  // Exp mean 2N
  std::vector<double> bdur;
  for (const auto& [site, dur] : path.boundary_sojourns) bdur.push_back(dur);
  CHECK(ks_p_value(ks_statistic_exp(bdur, 1.0 / 20.0), bdur.size()) > 0.01);

  // short-run transition frequencies vs uniformization at N = 4
  const LatticeSpec small(4);
  const GeneratorMatrix gen = build_sticky_generator(small);
  const Eigen::VectorXd p = transition_probabilities(gen, 1.0, 2);
  const int R = 5000;
  std::vector<double> freq(small.num_sites(), 0.0);
  for (int r = 0; r < R; ++r)
    freq[simulate_sticky_walk(small, 2, 1.0, derive_seed(4242, r)).state_at(1.0)] += 1.0;
  for (int y = 0; y < small.num_sites(); ++y) {
    const double sep = std::sqrt(std::max(p(y) * (1.0 - p(y)), 1e-12) / R);
    CHECK(std::fabs(freq[y] / R - p(y)) <= 4.0 * sep);
  }
}

TEST_CASE("sticky walk: occupation approaches the reversible measure") {
  // The walk switches boundary sides only every ~2N^2 time units, so one
  // 100 N^2 horizon carries few switches; pool independent walks to average
  // the side-split fluctuation down.
  const LatticeSpec spec(10);
  const double horizon = 100.0 * spec.N * spec.N;
  DensityProfile occ(spec.num_sites(), 0.0);
  const int walks = 256;
  for (int w = 0; w < walks; ++w) {
    const StickyWalkPath path = simulate_sticky_walk(spec, 5, horizon, derive_seed(7, w));
    double t0 = 0.0;
    for (std::size_t k = 0; k <= path.jump_times.size() && t0 < horizon; ++k) {
      const double t1 =
          k < path.jump_times.size() ? std::min(path.jump_times[k], horizon) : horizon;
      occ[path.positions[k]] += t1 - t0;
      t0 = t1;
    }
  }
  const DensityProfile mu = sticky_measure(spec);
  double tv = 0.0;
  for (int x = 0; x < spec.num_sites(); ++x)
    tv += std::fabs(occ[x] / (walks * horizon) - mu[x]);
  CHECK(tv / 2.0 < 2e-2);
}

TEST_CASE("density estimator basics") {
  TrajectorySamples s;
  s.spec = LatticeSpec(2);
  s.sample_taus = {0.1};
  s.replicas = 2;
  s.has_profiles = true;
  s.profiles = {1, 1, 1, 1, 1, 0, 1, 1};  // two replicas, one time, 4 sites
  const DensityEstimate est = estimate_density(s);
  CHECK(est.mean[0][0] == 1.0);
  CHECK(est.se[0][0] == 0.0);
  CHECK(est.mean[0][1] == 0.5);
  CHECK(est.se[0][1] == doctest::Approx(0.5));
  s.replicas = 1;
  s.profiles.resize(4);
  CHECK_THROWS_AS(estimate_density(s), std::invalid_argument);
}

TEST_CASE("two-point estimator: independence, degeneracy, exact oracle") {
  {  // synthetic independent bits
    TrajectorySamples s;
    s.spec = LatticeSpec(4);
    s.sample_taus = {0.1};
    s.replicas = 20000;
    s.has_profiles = true;
    s.profiles.assign(static_cast<std::size_t>(s.replicas) * 6, 0.0);
    auto rng = make_stream(5, 0);
    for (int r = 0; r < s.replicas; ++r)
      for (int x = 0; x < 6; ++x)
        s.profiles[r * 6 + x] = bernoulli(rng, 0.4) ? 1.0 : 0.0;
    const TwoPointEstimate est = estimate_two_point(s, {{1, 3}});
    CHECK(std::fabs(est.cov_at(0, 0)) <= 4.0 * est.se_at(0, 0));
    CHECK_THROWS_AS(estimate_two_point(s, {{2, 2}}), std::invalid_argument);

    for (auto& v : s.profiles) v = 1.0;  // deterministic bits: zero covariance
    const TwoPointEstimate det = estimate_two_point(s, {{1, 3}});
    CHECK(det.cov_at(0, 0) == 0.0);
    CHECK(det.se_at(0, 0) == 0.0);
  }
  {  // against the exact pair-walk covariance at small N
    const LatticeSpec spec(6);
    const InitialData init{[](double r) { return 0.2 + 0.6 * r; }, 0.3, 0.8};
    SimConfig cfg{spec, 0.2, init,  6000, 11, ProcessKind::OmegaStar,
                  {0.2}, {{2, 4}}, false};
    const TwoPointEstimate est = estimate_two_point(simulate_omega_star(cfg), {{2, 4}});
    const double exact = exact_pair_covariance(spec, init, 2, 4, 0.2);
    CHECK(std::fabs(est.cov_at(0, 0) - exact) <= 4.0 * est.se_at(0, 0));
  }
}

TEST_CASE("trajectory CSV dumps, plain and gzip") {
  const LatticeSpec spec(3);
  SimConfig cfg{spec, 0.1, kHalf, 2, 1, ProcessKind::Omega, {0.1}};
  const TrajectorySamples s = simulate_omega(cfg);
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "sticky_hydro_test";
  fs::create_directories(dir);

  const std::string plain = (dir / "dump.csv").string();
  dump_samples_csv(s, plain);
  std::ifstream f(plain);
  std::string header;
  std::getline(f, header);
  CHECK(header == "replica,tau,site,value");

  const std::string zipped = (dir / "dump.csv.gz").string();
  dump_samples_csv(s, zipped);
  gzFile g = gzopen(zipped.c_str(), "rb");
  REQUIRE(g != nullptr);
  char buf[32] = {0};
  gzread(g, buf, 22);
  gzclose(g);
  CHECK(std::string(buf, 22) == "replica,tau,site,value");
  fs::remove_all(dir);
}

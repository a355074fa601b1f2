// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure.  Tolerances are fixed here, not tuned at runtime.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "sticky/ctmc.hpp"
#include "sticky/experiments.hpp"
#include "sticky/fbp.hpp"
#include "sticky/mean_ode.hpp"
#include "sticky/rng.hpp"
#include "sticky/simulate.hpp"

using namespace sticky;

namespace {

int g_failures = 0;

void criterion(int id, const std::string& name, bool ok, const std::string& detail) {
  std::printf("[%s] %2d. %-28s %s\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", x);
  return buf;
}

DensityProfile random_profile(int N, std::mt19937_64& rng) {
  DensityProfile p(N + 2);
  for (auto& v : p) v = uniform01(rng);
  return p;
}

double simpson01(const std::function<double(double)>& f, int n) {
  double s = f(0.0) + f(1.0);
  for (int i = 1; i < n; ++i) s += f(i / static_cast<double>(n)) * (i % 2 ? 4.0 : 2.0);
  return s / (3.0 * n);
}

const InitialData kLinear{[](double r) { return r; }, 0.0, 1.0};

void c1_duality() {
  const auto t0 = std::chrono::steady_clock::now();
  auto rng = make_stream(101, 0);
  double worst = 0.0;
  for (int N : {4, 10, 20}) {
    const LatticeSpec spec(N);
    const GeneratorMatrix gen = build_sticky_generator(spec);
    const DensityProfile rho0 = random_profile(N, rng);
    for (double tau : {0.1, 1.0, 10.0}) {
      const MeanTrajectory traj = evolve_mean_ode(spec, rho0, {tau});
      for (int x = 0; x <= N + 1; ++x) {
        const Eigen::VectorXd row = transition_probabilities(gen, tau * N * N, x);
        double s = 0.0;
        for (int y = 0; y <= N + 1; ++y) s += rho0[y] * row(y);
        worst = std::max(worst, std::fabs(traj.profiles[0][x] - s));
      }
    }
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  criterion(1, "duality", worst <= 1e-8 && secs < 10.0,
            "max |e^{Lt}rho0 - p_t sum| = " + fmt(worst) + " (tol 1e-8), " + fmt(secs) + " s");
}

void c2_conservation() {
  double drift = 0.0;
  for (int N : {50, 200}) {
    const LatticeSpec spec(N);
    const MeanTrajectory traj =
        evolve_mean_ode(spec, discretize_initial(spec, kLinear), {0.05, 0.1, 0.5, 1.0, 2.0});
    drift = std::max(drift, conservation_drift(traj));
  }
  auto rng = make_stream(7, 1);
  const LatticeSpec sp20(20);
  drift = std::max(drift,
                   conservation_drift(evolve_mean_ode(sp20, random_profile(20, rng), {0.3, 3.0})));

  bool pathwise = true;
  for (ProcessKind kind : {ProcessKind::Omega, ProcessKind::OmegaStar}) {
    const LatticeSpec spec(kind == ProcessKind::Omega ? 8 : 6);
    SimConfig cfg{spec, 0.4, kLinear, 50, 404, kind, {0.0, 0.1, 0.4}};
    const TrajectorySamples s =
        kind == ProcessKind::Omega ? simulate_omega(cfg) : simulate_omega_star(cfg);
    const int N = spec.N, M = spec.M();
    for (int r = 0; r < cfg.replicas; ++r) {
      long t0 = -1;
      for (int k = 0; k < 3; ++k) {
        long tot = std::llround(s.profile_at(r, k, 0) * M) +
                   std::llround(s.profile_at(r, k, N + 1) * M);
        for (int x = 1; x <= N; ++x) tot += std::llround(s.profile_at(r, k, x));
        if (t0 < 0) t0 = tot;
        pathwise = pathwise && tot == t0;
      }
    }
  }
  criterion(2, "conservation of mass", drift < 1e-9 && pathwise,
            "ODE drift = " + fmt(drift) + " (tol 1e-9), particle totals " +
                (pathwise ? "exact" : "NOT conserved"));
}

void c3_selfadjoint_balance() {
  auto rng = make_stream(33, 0);
  double worst = 0.0;
  for (int N : {5, 12, 20}) {
    const LatticeSpec spec(N);
    const GeneratorMatrix gen = build_sticky_generator(spec);
    for (double t : {0.1, 1.0, 10.0}) {
      Eigen::VectorXd phi(N + 2), psi(N + 2);
      for (int i = 0; i < N + 2; ++i) {
        phi(i) = uniform01(rng);
        psi(i) = uniform01(rng);
      }
      const Eigen::VectorXd ep = apply_semigroup(gen, t, psi);
      const Eigen::VectorXd eq = apply_semigroup(gen, t, phi);
      DensityProfile a(phi.data(), phi.data() + N + 2), b(psi.data(), psi.data() + N + 2);
      DensityProfile ea(eq.data(), eq.data() + N + 2), eb(ep.data(), ep.data() + N + 2);
      worst = std::max(worst, std::fabs(inner_product(a, eb) - inner_product(b, ea)));
    }
  }
  double balance = 0.0;
  for (int N = 2; N <= 20; ++N) {
    const LatticeSpec spec(N);
    const GeneratorMatrix gen = build_sticky_generator(spec);
    const DensityProfile mu = sticky_measure(spec);
    for (int x = 0; x <= N + 1; ++x)
      for (int y = 0; y <= N + 1; ++y)
        if (x != y)
          balance = std::max(balance, std::fabs(mu[x] * gen.Q(x, y) - mu[y] * gen.Q(y, x)));
  }
  criterion(3, "self-adjointness + balance", worst <= 1e-10 && balance <= 1e-10,
            "selfadj err = " + fmt(worst) + ", detailed balance err = " + fmt(balance) +
                " (tol 1e-10)");
}

void c4_sticky_walk() {
  const LatticeSpec spec(10);
  const StickyWalkPath path = simulate_sticky_walk(spec, 5, 3.2e5, 2025);

  std::vector<double> interior;
  double prev = 0.0;
  for (std::size_t k = 0; k < path.jump_times.size(); ++k) {
    if (path.positions[k] != 0 && path.positions[k] != 11 && interior.size() < 10000)
      interior.push_back(path.jump_times[k] - prev);
    prev = path.jump_times[k];
  }
  const double p_int = ks_p_value(ks_statistic_exp(interior, 1.0), interior.size());

  double mean = 0.0;
  for (const auto& [site, dur] : path.boundary_sojourns) mean += dur;
  const std::size_t nb = path.boundary_sojourns.size();
  mean /= nb;
  double var = 0.0;
  for (const auto& [site, dur] : path.boundary_sojourns) var += (dur - mean) * (dur - mean);
  const double se = std::sqrt(var / (nb - 1.0) / nb);
  const bool mean_ok = nb >= 10000 && std::fabs(mean - 20.0) <= 3.0 * se;

  const LatticeSpec small(6);
  const GeneratorMatrix gen = build_sticky_generator(small);
  double worst_z = 0.0;
  for (int x0 : {0, 2}) {
    const Eigen::VectorXd p = transition_probabilities(gen, 1.0, x0);
    const int R = 20000;
    std::vector<double> freq(small.num_sites(), 0.0);
    for (int r = 0; r < R; ++r)
      freq[simulate_sticky_walk(small, x0, 1.0, derive_seed(909 + x0, r)).state_at(1.0)] += 1.0;
    for (int y = 0; y < small.num_sites(); ++y) {
      const double sep = std::sqrt(std::max(p(y) * (1.0 - p(y)), 1e-12) / R);
      worst_z = std::max(worst_z, std::fabs(freq[y] / R - p(y)) / sep);
    }
  }
  criterion(4, "sticky-walk construction",
            p_int > 0.01 && mean_ok && worst_z <= 4.0,
            "interior KS p = " + fmt(p_int) + ", boundary mean = " + fmt(mean) + " (2N = 20, " +
                fmt(nb * 1.0) + " sojourns), transition max z = " + fmt(worst_z));
}

void c5_theta_identities() {
  double sym = 0.0;
  for (double t : {0.01, 0.1, 1.0, 10.0})
    for (double r : {0.0, 0.13, 0.5, 0.77, 1.0}) {
      sym = std::max(sym, std::fabs(theta(r, t) - theta(-r, t)));
      sym = std::max(sym, std::fabs(theta(r, t) - theta(r + 2.0, t)));
      sym = std::max(sym, std::fabs(theta(r, t) - theta(2.0 - r, t)));
    }
  double half = 0.0;
  for (double t : {0.01, 0.1, 1.0, 10.0})
    half = std::max(half,
                    std::fabs(simpson01([&](double r) { return theta(r, t); }, 4096) - 0.5));
  double heat = 0.0;
  const double dh = 1e-3;
  for (const auto& [r, t] : std::vector<std::pair<double, double>>{{0.4, 0.3}, {0.3, 0.2}}) {
    const double urr = (theta(r + dh, t) - 2.0 * theta(r, t) + theta(r - dh, t)) / (dh * dh);
    const double ds = (theta(r, t - dh) - theta(r, t + dh)) / (2.0 * dh);  // d/ds through t - s
    heat = std::max(heat, std::fabs(urr + 2.0 * ds));
  }
  criterion(5, "theta identities", sym <= 1e-12 && half <= 1e-10 && heat <= 1e-5,
            "symmetry " + fmt(sym) + " (1e-12), half-mass " + fmt(half) + " (1e-10), heat " +
                fmt(heat) + " (1e-5)");
}

void c6_fbp_stationarity_uniqueness() {
  double cerr = 0.0;
  {
    const double c = 0.7;
    const InitialData con{[c](double) { return c; }, c, c};
    const FBPSolution sol = solve_fbp(con, uniform_grid(1.0, 1e-3));
    for (std::size_t i = 0; i < sol.volterra.t_grid.size(); ++i) {
      cerr = std::max(cerr, std::fabs(sol.volterra.v_minus[i] - c));
      cerr = std::max(cerr, std::fabs(sol.picard_v_minus[i] - c));
      cerr = std::max(cerr, std::fabs(sol.picard_v_plus[i] - c));
    }
    for (double t : {0.25, 1.0})
      for (double r : {0.05, 0.5, 0.9}) cerr = std::max(cerr, std::fabs(sol.u(r, t) - c));
  }
  const FBPSolution lin = solve_fbp(kLinear, uniform_grid(1.0, 1e-3));

  double v[3][2];
  int k = 0;
  for (double h : {2e-3, 1e-3, 5e-4}) {
    const VolterraSolution s = solve_volterra(kLinear, uniform_grid(0.5, h));
    v[k][0] = s.v_minus_at(0.5);
    v[k][1] = s.v_plus_at(0.5);
    ++k;
  }
  const double d1 = std::max(std::fabs(v[0][0] - v[1][0]), std::fabs(v[0][1] - v[1][1]));
  const double d2 = std::max(std::fabs(v[1][0] - v[2][0]), std::fabs(v[1][1] - v[2][1]));
  const double order = std::log2(d1 / d2);

  criterion(6, "fbp stationarity + uniqueness",
            cerr <= 1e-10 && lin.method_disagreement <= 1e-2 && order >= 0.9,
            "constant err " + fmt(cerr) + " (1e-10), route gap " + fmt(lin.method_disagreement) +
                " (10h = 1e-2), order " + fmt(order) + " (>= 0.9)");
}

void c7_flux_identity() {
  const FBPSolution coarse = solve_fbp(kLinear, uniform_grid(0.5, 1e-3));
  const double r1 = flux_identity_residual(coarse, {0.25}, 1e-3);
  const FBPSolution fine = solve_fbp(kLinear, uniform_grid(0.5, 5e-4));
  const double r2 = flux_identity_residual(fine, {0.25}, 5e-4);
  criterion(7, "boundary flux identity", r1 < 5e-3 && r2 < r1,
            "residual = " + fmt(r1) + " (tol 5e-3), refined = " + fmt(r2));
}

void c8_hydro_limit() {
  ExperimentConfig cfg;
  apply_config_entry(cfg, "experiment", "hydro-convergence", 0);
  finalize_config(cfg);
  const ExperimentReport rep = run_hydro_convergence(cfg);
  double e400 = 0.0;
  for (const auto& row : rep.rows)
    if (row.N == 400 && row.metric == "e_interior") e400 = std::max(e400, row.value);
  std::string msg = "e_400 = " + fmt(e400) + " (tol 0.02), monotone over N = 50..400";
  if (!rep.pass()) msg += "; " + rep.failures.front();
  criterion(8, "hydrodynamic limit", rep.pass(), msg);
}

void c9_chaos() {
  ExperimentConfig cfg;
  apply_config_entry(cfg, "experiment", "chaos-decay", 0);
  finalize_config(cfg);
  const ExperimentReport rep = run_chaos_decay(cfg);
  double z = 0.0, first = 0.0, last = 0.0;
  for (const auto& row : rep.rows) {
    if (row.N == 8 && row.metric.rfind("cov_z_", 0) == 0) z = std::max(z, row.value);
    if (row.metric == "max_abs_cov") {
      if (row.N == cfg.N_list.front()) first = row.value;
      if (row.N == cfg.N_list.back()) last = row.value;
    }
  }
  std::string msg = "exact-branch max z = " + fmt(z) + " (<= 4), max|cov| " + fmt(first) +
                    " -> " + fmt(last);
  if (!rep.pass()) msg += "; " + rep.failures.front();
  criterion(9, "propagation of chaos", rep.pass(), msg);
}

void c10_liggett() {
  double worst = -1e300;
  int cases = 0;
  for (int N : {4, 5}) {
    const LatticeSpec spec(N);
    const SigmaLayout lay{N};
    auto subsets = interval_subsets(spec);
    const auto extra = random_subsets(spec, 100, 555);
    subsets.insert(subsets.end(), extra.begin(), extra.end());
    const std::vector<std::pair<int, int>> pairs = {{lay.channel(1), lay.channel(2)},
                                                    {lay.channel(1), lay.channel(N)},
                                                    {lay.left(0), lay.channel(1)},
                                                    {lay.channel(N), lay.right(0)},
                                                    {lay.left(1), lay.right(2)}};
    for (double t : {0.1, 1.0, 5.0}) {
      const LiggettReport rep = liggett_inequality_check(spec, t, pairs, subsets);
      worst = std::max(worst, rep.max_violation);
      cases += rep.cases;
    }
  }
  criterion(10, "Liggett inequality", worst <= 1e-10,
            "max violation = " + fmt(worst) + " over " + std::to_string(cases) +
                " cases (tol 1e-10)");
}

void c11_long_time() {
  const FBPSolution sol = solve_fbp(kLinear, uniform_grid(10.0, 1e-3));
  double ferr = std::fabs(sol.volterra.v_minus_at(10.0) - 0.5);
  ferr = std::max(ferr, std::fabs(sol.volterra.v_plus_at(10.0) - 0.5));
  ferr = std::max(ferr, std::fabs(sol.u(0.5, 10.0) - 0.5));

  const LatticeSpec spec(200);
  const MeanTrajectory traj = evolve_mean_ode(spec, discretize_initial(spec, kLinear), {10.0});
  double merr = 0.0;
  for (double v : traj.profiles[0]) merr = std::max(merr, std::fabs(v - 0.5));
  criterion(11, "long-time equilibrium", ferr <= 5e-3 && merr <= 5e-3,
            "fbp err = " + fmt(ferr) + ", N=200 ODE err = " + fmt(merr) + " (tol 5e-3)");
}

}  // namespace

int main() {
  std::printf("acceptance suite\n");
  c1_duality();
  c2_conservation();
  c3_selfadjoint_balance();
  c4_sticky_walk();
  c5_theta_identities();
  c6_fbp_stationarity_uniqueness();
  c7_flux_identity();
  c8_hydro_limit();
  c9_chaos();
  c10_liggett();
  c11_long_time();
  std::printf("ACCEPTANCE: %d/11 criteria passed\n", 11 - g_failures);
  return g_failures == 0 ? 0 : 1;
}

#include "sticky/mean_ode.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace sticky {

DensityProfile sticky_evolve(const LatticeSpec& spec, DensityProfile rho, double t_micro) {
  if (t_micro < 0.0) throw std::domain_error("sticky_evolve: t must be >= 0");
  if (static_cast<int>(rho.size()) != spec.num_sites())
    throw std::invalid_argument("sticky_evolve: profile size mismatch");
  if (t_micro == 0.0) return rho;

  // Uniformization at rate 1 (the channel exit rate).  The jump kernel is
  // tridiagonal: interior sites split 1/2 left + 1/2 right, boundary slots
  // keep mass 1 - a and push a = 1/(2N) inward.
  const int N = spec.N;
  const double a = 1.0 / (2.0 * N);
  const double lt = t_micro;
  const double log_lt = std::log(lt);
  const long k_cap = static_cast<long>(lt + 12.0 * std::sqrt(lt + 1.0) + 60.0);

  DensityProfile cur = std::move(rho), nxt(cur.size()), out(cur.size(), 0.0);
  double cum = 0.0;
  for (long k = 0;; ++k) {
    const double w =
        std::exp(-lt + static_cast<double>(k) * log_lt - std::lgamma(static_cast<double>(k) + 1.0));
    if (w > 0.0) {
      for (std::size_t i = 0; i < cur.size(); ++i) out[i] += w * cur[i];
      cum += w;
    }
    if (cum >= 1.0 - 1e-14 || k >= k_cap) break;
    nxt[0] = (1.0 - a) * cur[0] + a * cur[1];
    for (int x = 1; x <= N; ++x) nxt[x] = 0.5 * (cur[x - 1] + cur[x + 1]);
    nxt[N + 1] = (1.0 - a) * cur[N + 1] + a * cur[N];
    cur.swap(nxt);
  }
  return out;
}

MeanTrajectory evolve_mean_ode(const LatticeSpec& spec, const DensityProfile& initial,
                               const std::vector<double>& tau_grid) {
  if (static_cast<int>(initial.size()) != spec.num_sites())
    throw std::invalid_argument("evolve_mean_ode: profile size mismatch");
  for (double v : initial)
    if (!(v >= 0.0 && v <= 1.0))
      throw std::invalid_argument("evolve_mean_ode: initial entries must be in [0,1]");
  for (std::size_t i = 0; i < tau_grid.size(); ++i)
    if (tau_grid[i] < 0.0 || (i > 0 && tau_grid[i] <= tau_grid[i - 1]))
      throw std::invalid_argument("evolve_mean_ode: tau grid must be increasing, >= 0");

  MeanTrajectory traj{spec, initial, tau_grid, {}};
  traj.profiles.reserve(tau_grid.size());
  DensityProfile cur = initial;
  double prev_tau = 0.0;
  const double scale = static_cast<double>(spec.N) * spec.N;
  for (double tau : tau_grid) {
    cur = sticky_evolve(spec, std::move(cur), (tau - prev_tau) * scale);
    prev_tau = tau;
    traj.profiles.push_back(cur);
  }
  return traj;
}

double conservation_drift(const MeanTrajectory& traj) {
  if (traj.profiles.empty()) throw std::invalid_argument("conservation_drift: empty trajectory");
  const double m0 = total_mass(traj.initial);
  if (m0 == 0.0) return 0.0;
  double worst = 0.0;
  for (const auto& p : traj.profiles)
    worst = std::max(worst, std::fabs(total_mass(p) - m0) / m0);
  return worst;
}

double boundary_modulus(const MeanTrajectory& traj) {
  const double eps = traj.spec.eps();
  const double scale = static_cast<double>(traj.spec.N) * traj.spec.N;
  const int last = traj.spec.N + 1;

  std::vector<double> t;
  std::vector<double> bm, bp;
  t.push_back(0.0);
  bm.push_back(traj.initial[0]);
  bp.push_back(traj.initial[last]);
  for (std::size_t i = 0; i < traj.tau.size(); ++i) {
    t.push_back(traj.tau[i] * scale);
    bm.push_back(traj.profiles[i][0]);
    bp.push_back(traj.profiles[i][last]);
  }

  double c = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i)
    for (std::size_t j = i + 1; j < t.size(); ++j) {
      const double dt = t[j] - t[i];
      if (dt <= 0.0) continue;
      const double den = eps * std::sqrt(dt);
      c = std::max(c, std::fabs(bm[j] - bm[i]) / den);
      c = std::max(c, std::fabs(bp[j] - bp[i]) / den);
    }
  return c;
}

void write_trajectory_csv(const MeanTrajectory& traj, std::ostream& os) {
  os << "t,site,value\n";
  char buf[64];
  for (std::size_t i = 0; i < traj.tau.size(); ++i)
    for (std::size_t x = 0; x < traj.profiles[i].size(); ++x) {
      std::snprintf(buf, sizeof(buf), "%.12g,%zu,%.12g", traj.tau[i], x, traj.profiles[i][x]);
      os << buf << '\n';
    }
}

}  // namespace sticky

#pragma once

#include <ostream>
#include <vector>

#include "sticky/lattice.hpp"

namespace sticky {

// Mean occupation profiles along a trajectory of the first-moment system:
// d/dt rho(x) = (rho(x-1) + rho(x+1) - 2 rho(x))/2 in the channel and
// d/dt rho_± = (rho(1 or N) - rho_±)/(2M) at the boundary slots, which is
// exactly the sticky-walk semigroup acting on the initial profile.
struct MeanTrajectory {
  LatticeSpec spec;
  DensityProfile initial;
  std::vector<double> tau;  // macroscopic sample times, t = N^2 tau
  std::vector<DensityProfile> profiles;
};

// e^{Lt} rho for the sticky generator, evaluated by uniformization with the
// tridiagonal jump kernel; exact up to the 1e-14 Poisson tail at any N.
DensityProfile sticky_evolve(const LatticeSpec& spec, DensityProfile rho, double t_micro);

MeanTrajectory evolve_mean_ode(const LatticeSpec& spec, const DensityProfile& initial,
                               const std::vector<double>& tau_grid);

// max_t |mass(t) - mass(0)| / mass(0)  (0 for zero initial mass)
double conservation_drift(const MeanTrajectory& traj);

// Empirical Holder-1/2 constant of the boundary trajectories:
// sup_{s != t} |rho_b(t) - rho_b(s)| / (eps |t - s|^{1/2}) over both
// boundary slots, with t, s microscopic.
double boundary_modulus(const MeanTrajectory& traj);

// CSV export (t, site, value); t is the macroscopic sample time.
void write_trajectory_csv(const MeanTrajectory& traj, std::ostream& os);

}  // namespace sticky

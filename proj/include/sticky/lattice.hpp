#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace sticky {

// Channel sites 1..N with a mean-field reservoir of size M = N coupled to
// each end.  Everything that carries a per-site value lives on the extended
// lattice {0,..,N+1}: slot 0 holds the left reservoir density, slot N+1 the
// right one.  eps = 1/N is the lattice spacing.
struct LatticeSpec {
  int N;

  explicit LatticeSpec(int n) : N(n) {
    if (n < 2) throw std::invalid_argument("LatticeSpec: N must be >= 2");
  }

  int M() const { return N; }  // reservoir size, fixed M = N
  double eps() const { return 1.0 / N; }
  int num_sites() const { return N + 2; }  // extended lattice size
};

// Mean occupations over the extended lattice, indexed 0..N+1, entries in [0,1].
using DensityProfile = std::vector<double>;

// Macroscopic initial datum: u0 on [0,1] for the channel, v0_{-,+} for the
// reservoir densities.
struct InitialData {
  std::function<double(double)> u0;
  double v0_minus = 0.0;
  double v0_plus = 0.0;
};

inline int profile_channel_size(const DensityProfile& p) {
  if (p.size() < 4)
    throw std::invalid_argument("DensityProfile: needs at least N+2 = 4 entries");
  return static_cast<int>(p.size()) - 2;
}

// <f,g> = sum_{x=1}^{N} f(x) g(x) + (1/eps) (f(0) g(0) + f(N+1) g(N+1))
inline double inner_product(const DensityProfile& f, const DensityProfile& g) {
  if (f.size() != g.size())
    throw std::invalid_argument("inner_product: profiles have different lattices");
  const int n = profile_channel_size(f);
  double s = 0.0;
  for (int x = 1; x <= n; ++x) s += f[x] * g[x];
  return s + static_cast<double>(n) * (f[0] * g[0] + f[n + 1] * g[n + 1]);
}

// Conserved functional: sum_{x=1}^{N} p(x) + (1/eps) (p(0) + p(N+1)).
inline double total_mass(const DensityProfile& p) {
  const int n = profile_channel_size(p);
  double s = 0.0;
  for (int x = 1; x <= n; ++x) s += p[x];
  return s + static_cast<double>(n) * (p[0] + p[n + 1]);
}

// Reversible probability measure of the sticky walk: weight 1 on the channel,
// 1/eps at the two boundary slots, normalized by 1/(3N).
inline DensityProfile sticky_measure(const LatticeSpec& spec) {
  DensityProfile mu(spec.num_sites(), 1.0 / (3.0 * spec.N));
  mu[0] = mu[spec.N + 1] = 1.0 / 3.0;
  return mu;
}

// Profile with rho(x) = u0(eps x) on the channel and v0 at the boundary slots.
inline DensityProfile discretize_initial(const LatticeSpec& spec, const InitialData& init) {
  if (!init.u0) throw std::invalid_argument("discretize_initial: missing u0");
  if (init.v0_minus < 0.0 || init.v0_minus > 1.0 || init.v0_plus < 0.0 || init.v0_plus > 1.0)
    throw std::invalid_argument("discretize_initial: v0 outside [0,1]");
  DensityProfile p(spec.num_sites());
  p[0] = init.v0_minus;
  p[spec.N + 1] = init.v0_plus;
  for (int x = 1; x <= spec.N; ++x) {
    const double v = init.u0(spec.eps() * x);
    if (!(v >= -1e-12 && v <= 1.0 + 1e-12))
      throw std::invalid_argument("discretize_initial: u0 outside [0,1]");
    p[x] = std::min(1.0, std::max(0.0, v));
  }
  return p;
}

}  // namespace sticky

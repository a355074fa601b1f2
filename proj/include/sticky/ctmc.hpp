#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "sticky/lattice.hpp"

namespace sticky {

// Dense generator of a finite-state CTMC.  Off-diagonal entries are jump
// rates, the diagonal is minus the row sum, so rows sum to zero.
struct GeneratorMatrix {
  Eigen::MatrixXd Q;
  int size() const { return static_cast<int>(Q.rows()); }
};

// Indexing of Sigma_N = S_- u {1..N} u S_+ shared by the reservoir walk and
// the stirring pair process: [0..N) left reservoir sites, [N..2N) channel
// sites 1..N, [2N..3N) right reservoir sites.
struct SigmaLayout {
  int N;

  int size() const { return 3 * N; }
  int left(int k) const { return k; }
  int channel(int x) const { return N + x - 1; }  // x in 1..N
  int right(int k) const { return 2 * N + k; }
  bool is_left(int s) const { return s < N; }
  bool is_channel(int s) const { return s >= N && s < 2 * N; }
  bool is_right(int s) const { return s >= 2 * N; }
  int channel_site(int s) const { return s - N + 1; }
};

// Ordered pairs (a,b) with a != b over n base states, indexed densely; the
// stirring pair process never creates coincident pairs, so the diagonal is
// excluded from the state space.
struct PairLayout {
  int n;

  int size() const { return n * (n - 1); }
  int index(int a, int b) const { return a * (n - 1) + (b > a ? b - 1 : b); }
  std::pair<int, int> state(int idx) const {
    const int a = idx / (n - 1);
    const int r = idx % (n - 1);
    return {a, r >= a ? r + 1 : r};
  }
};

// Sticky walk on {0,..,N+1}: rate 1/2 per direction in the channel, rate
// 1/(2N) inward from the boundary sites.
GeneratorMatrix build_sticky_generator(const LatticeSpec& spec);

// Walk Y on Sigma_N: each reservoir site exchanges with the adjacent channel
// end at rate 1/(2N); channel moves at rate 1/2 per direction.
GeneratorMatrix build_reservoir_walk_generator(const LatticeSpec& spec);

// Two stirring walks on Sigma_N: every bond swap (channel bonds at 1/2,
// reservoir bonds at 1/(2N)) is applied to both coordinates simultaneously.
GeneratorMatrix build_pair_stirring_generator(const LatticeSpec& spec);

// Row `from` of e^{Qt}, computed by uniformization (Poisson mixture of powers
// of the jump kernel at the max-exit rate), entries accurate to ~1e-12.
Eigen::VectorXd transition_probabilities(const GeneratorMatrix& gen, double t, int from);

// e^{Qt} f for a function f on the state space (column action).
Eigen::VectorXd apply_semigroup(const GeneratorMatrix& gen, double t, const Eigen::VectorXd& f);

// P_x(tau_0 <= t, tau_0 < tau_{N+1}) and the mirror quantity, computed by
// absorbing the sticky walk at 0 and N+1.
struct HittingSplit {
  std::vector<double> t_grid;
  std::vector<double> F;  // absorbed at 0 by time t
  std::vector<double> G;  // absorbed at N+1 by time t
};

HittingSplit hitting_split_distributions(const LatticeSpec& spec, int x,
                                         const std::vector<double>& t_grid);

// P((X1,X2) in AxA) for the stirring pair vs the product of independent
// walks, both sides exact.  Violations of left <= right are reported; they
// should not exceed numerical noise.
struct LiggettCase {
  std::pair<int, int> start;
  int subset_id = -1;
  double lhs = 0.0, rhs = 0.0;
};

struct LiggettReport {
  double max_violation = -1e300;  // max over cases of lhs - rhs
  LiggettCase worst;
  int cases = 0;
};

LiggettReport liggett_inequality_check(const LatticeSpec& spec, double t,
                                       const std::vector<std::pair<int, int>>& pairs,
                                       const std::vector<std::vector<int>>& subsets);

// All contiguous ranges of Sigma_N in layout order, plus uniformly random
// subsets at a fixed seed.
std::vector<std::vector<int>> interval_subsets(const LatticeSpec& spec);
std::vector<std::vector<int>> random_subsets(const LatticeSpec& spec, int count,
                                             std::uint64_t seed);

// Exact covariance E[eta(x1) eta(x2)] - E[eta(x1)] E[eta(x2)] of the
// bit-reservoir process at macroscopic time tau, channel sites x1 != x2.
// Initial law: product Bernoulli(u0(eps x)) on the channel, exactly
// round(M v0) particles placed uniformly in each reservoir.
double exact_pair_covariance(const LatticeSpec& spec, const InitialData& init,
                             int x1, int x2, double tau);

}  // namespace sticky

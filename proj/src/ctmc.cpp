#include "sticky/ctmc.hpp"

#include <cmath>
#include <stdexcept>

#include "sticky/rng.hpp"

namespace sticky {

namespace {

constexpr double kPoissonTailCutoff = 1e-14;

// e^{Qt} v via uniformization: out = sum_k Poisson_k(lambda t) M^k v where
// M = I + Q/lambda (or its transpose for distribution rows).  Weights are
// evaluated in log space so large lambda*t does not underflow the mixture.
Eigen::VectorXd uniformized_apply(const Eigen::MatrixXd& M, double lambda, double t,
                                  Eigen::VectorXd v) {
  const double lt = lambda * t;
  if (lt <= 0.0) return v;
  const double log_lt = std::log(lt);
  const long k_cap = static_cast<long>(lt + 12.0 * std::sqrt(lt + 1.0) + 60.0);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(v.size());
  double cum = 0.0;
  for (long k = 0;; ++k) {
    const double w =
        std::exp(-lt + static_cast<double>(k) * log_lt - std::lgamma(static_cast<double>(k) + 1.0));
    if (w > 0.0) {
      out += w * v;
      cum += w;
    }
    if (cum >= 1.0 - kPoissonTailCutoff || k >= k_cap) break;
    v = M * v;
  }
  return out;
}

double uniformization_rate(const GeneratorMatrix& gen) {
  return gen.Q.diagonal().cwiseAbs().maxCoeff();
}

Eigen::MatrixXd jump_kernel(const GeneratorMatrix& gen, double lambda) {
  Eigen::MatrixXd P = gen.Q / lambda;
  P.diagonal().array() += 1.0;
  return P;
}

void set_rate(Eigen::MatrixXd& Q, int from, int to, double rate) {
  Q(from, to) += rate;
  Q(from, from) -= rate;
}

}  // namespace

GeneratorMatrix build_sticky_generator(const LatticeSpec& spec) {
  const int N = spec.N;
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(N + 2, N + 2);
  for (int x = 1; x <= N; ++x) {
    set_rate(Q, x, x - 1, 0.5);
    set_rate(Q, x, x + 1, 0.5);
  }
  const double boundary = 1.0 / (2.0 * N);
  set_rate(Q, 0, 1, boundary);
  set_rate(Q, N + 1, N, boundary);
  return {std::move(Q)};
}

GeneratorMatrix build_reservoir_walk_generator(const LatticeSpec& spec) {
  const int N = spec.N;
  const SigmaLayout lay{N};
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(lay.size(), lay.size());
  const double res_rate = 1.0 / (2.0 * N);
  for (int k = 0; k < N; ++k) {
    set_rate(Q, lay.left(k), lay.channel(1), res_rate);
    set_rate(Q, lay.channel(1), lay.left(k), res_rate);
    set_rate(Q, lay.right(k), lay.channel(N), res_rate);
    set_rate(Q, lay.channel(N), lay.right(k), res_rate);
  }
  for (int x = 1; x < N; ++x) {
    set_rate(Q, lay.channel(x), lay.channel(x + 1), 0.5);
    set_rate(Q, lay.channel(x + 1), lay.channel(x), 0.5);
  }
  return {std::move(Q)};
}

GeneratorMatrix build_pair_stirring_generator(const LatticeSpec& spec) {
  const int N = spec.N;
  const SigmaLayout lay{N};
  const PairLayout pl{lay.size()};
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(pl.size(), pl.size());

  // bonds of the stirring process: (endpoint a, endpoint b, rate)
  std::vector<std::tuple<int, int, double>> bonds;
  const double res_rate = 1.0 / (2.0 * N);
  for (int k = 0; k < N; ++k) {
    bonds.emplace_back(lay.left(k), lay.channel(1), res_rate);
    bonds.emplace_back(lay.channel(N), lay.right(k), res_rate);
  }
  for (int x = 1; x < N; ++x) bonds.emplace_back(lay.channel(x), lay.channel(x + 1), 0.5);

  for (int idx = 0; idx < pl.size(); ++idx) {
    const auto [x1, x2] = pl.state(idx);
    for (const auto& [a, b, rate] : bonds) {
      int y1 = x1 == a ? b : (x1 == b ? a : x1);
      int y2 = x2 == a ? b : (x2 == b ? a : x2);
      if (y1 == x1 && y2 == x2) continue;  // bond does not touch the pair
      set_rate(Q, idx, pl.index(y1, y2), rate);
    }
  }
  return {std::move(Q)};
}

Eigen::VectorXd transition_probabilities(const GeneratorMatrix& gen, double t, int from) {
  if (t < 0.0) throw std::domain_error("transition_probabilities: t must be >= 0");
  if (from < 0 || from >= gen.size())
    throw std::invalid_argument("transition_probabilities: state out of range");
  Eigen::VectorXd v = Eigen::VectorXd::Zero(gen.size());
  v(from) = 1.0;
  const double lambda = uniformization_rate(gen);
  if (lambda == 0.0 || t == 0.0) return v;
  const Eigen::MatrixXd Pt = jump_kernel(gen, lambda).transpose();
  return uniformized_apply(Pt, lambda, t, std::move(v));
}

Eigen::VectorXd apply_semigroup(const GeneratorMatrix& gen, double t, const Eigen::VectorXd& f) {
  if (t < 0.0) throw std::domain_error("apply_semigroup: t must be >= 0");
  if (f.size() != gen.size()) throw std::invalid_argument("apply_semigroup: size mismatch");
  const double lambda = uniformization_rate(gen);
  if (lambda == 0.0 || t == 0.0) return f;
  return uniformized_apply(jump_kernel(gen, lambda), lambda, t, f);
}

HittingSplit hitting_split_distributions(const LatticeSpec& spec, int x,
                                         const std::vector<double>& t_grid) {
  const int N = spec.N;
  if (x < 0 || x > N + 1)
    throw std::invalid_argument("hitting_split_distributions: state out of range");
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (t_grid[i] < 0.0 || (i > 0 && t_grid[i] <= t_grid[i - 1]))
      throw std::invalid_argument("hitting_split_distributions: grid must be increasing, >= 0");
  }

  HittingSplit out;
  out.t_grid = t_grid;
  out.F.assign(t_grid.size(), 0.0);
  out.G.assign(t_grid.size(), 0.0);
  if (x == 0 || x == N + 1) {  // degenerate split: already absorbed at t = 0
    for (std::size_t i = 0; i < t_grid.size(); ++i) (x == 0 ? out.F : out.G)[i] = 1.0;
    return out;
  }

  GeneratorMatrix gen = build_sticky_generator(spec);
  gen.Q.row(0).setZero();      // absorb at 0
  gen.Q.row(N + 1).setZero();  // absorb at N+1
  const double lambda = uniformization_rate(gen);
  const Eigen::MatrixXd Pt = jump_kernel(gen, lambda).transpose();

  Eigen::VectorXd v = Eigen::VectorXd::Zero(gen.size());
  v(x) = 1.0;
  double prev = 0.0;
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    v = uniformized_apply(Pt, lambda, t_grid[i] - prev, std::move(v));
    prev = t_grid[i];
    out.F[i] = v(0);
    out.G[i] = v(N + 1);
  }
  return out;
}

std::vector<std::vector<int>> interval_subsets(const LatticeSpec& spec) {
  const int n = 3 * spec.N;
  std::vector<std::vector<int>> out;
  for (int a = 0; a < n; ++a) {
    std::vector<int> cur;
    for (int b = a; b < n; ++b) {
      cur.push_back(b);
      out.push_back(cur);
    }
  }
  return out;
}

std::vector<std::vector<int>> random_subsets(const LatticeSpec& spec, int count,
                                             std::uint64_t seed) {
  const int n = 3 * spec.N;
  std::vector<std::vector<int>> out;
  out.reserve(count);
  auto rng = make_stream(seed, 0);
  for (int c = 0; c < count; ++c) {
    std::vector<int> sub;
    for (int s = 0; s < n; ++s)
      if (bernoulli(rng, 0.5)) sub.push_back(s);
    out.push_back(std::move(sub));
  }
  return out;
}

LiggettReport liggett_inequality_check(const LatticeSpec& spec, double t,
                                       const std::vector<std::pair<int, int>>& pairs,
                                       const std::vector<std::vector<int>>& subsets) {
  if (spec.N > 6)
    throw std::runtime_error("liggett_inequality_check: N > 6 exceeds the exact pair budget");
  const SigmaLayout lay{spec.N};
  const PairLayout pl{lay.size()};
  const GeneratorMatrix pair_gen = build_pair_stirring_generator(spec);
  const GeneratorMatrix walk_gen = build_reservoir_walk_generator(spec);

  std::vector<char> in_set(lay.size());
  LiggettReport rep;
  for (const auto& [x1, x2] : pairs) {
    if (x1 == x2 || x1 < 0 || x2 < 0 || x1 >= lay.size() || x2 >= lay.size())
      throw std::invalid_argument("liggett_inequality_check: bad start pair");
    const Eigen::VectorXd pair_row = transition_probabilities(pair_gen, t, pl.index(x1, x2));
    const Eigen::VectorXd row1 = transition_probabilities(walk_gen, t, x1);
    const Eigen::VectorXd row2 = transition_probabilities(walk_gen, t, x2);

    for (std::size_t si = 0; si < subsets.size(); ++si) {
      std::fill(in_set.begin(), in_set.end(), 0);
      double m1 = 0.0, m2 = 0.0;
      for (int s : subsets[si]) {
        in_set[s] = 1;
        m1 += row1(s);
        m2 += row2(s);
      }
      double lhs = 0.0;
      for (int idx = 0; idx < pl.size(); ++idx) {
        const auto [a, b] = pl.state(idx);
        if (in_set[a] && in_set[b]) lhs += pair_row(idx);
      }
      const double rhs = m1 * m2;
      ++rep.cases;
      if (lhs - rhs > rep.max_violation) {
        rep.max_violation = lhs - rhs;
        rep.worst = {{x1, x2}, static_cast<int>(si), lhs, rhs};
      }
    }
  }
  return rep;
}

double exact_pair_covariance(const LatticeSpec& spec, const InitialData& init,
                             int x1, int x2, double tau) {
  const int N = spec.N, M = spec.M();
  if (x1 == x2 || x1 < 1 || x2 < 1 || x1 > N || x2 > N)
    throw std::invalid_argument("exact_pair_covariance: needs distinct channel sites");
  const SigmaLayout lay{N};
  const PairLayout pl{lay.size()};
  const double t = tau * N * N;

  const long n0m = std::lround(M * init.v0_minus);
  const long n0p = std::lround(M * init.v0_plus);

  // first and second moments of the initial occupation field
  Eigen::VectorXd m(lay.size());
  for (int s = 0; s < lay.size(); ++s) {
    if (lay.is_left(s))
      m(s) = static_cast<double>(n0m) / M;
    else if (lay.is_right(s))
      m(s) = static_cast<double>(n0p) / M;
    else
      m(s) = init.u0(spec.eps() * lay.channel_site(s));
  }
  auto m2 = [&](int a, int b) {
    // hypergeometric pair inside one reservoir, product otherwise
    if (lay.is_left(a) && lay.is_left(b))
      return static_cast<double>(n0m) * (n0m - 1) / (static_cast<double>(M) * (M - 1));
    if (lay.is_right(a) && lay.is_right(b))
      return static_cast<double>(n0p) * (n0p - 1) / (static_cast<double>(M) * (M - 1));
    return m(a) * m(b);
  };

  const GeneratorMatrix pair_gen = build_pair_stirring_generator(spec);
  const GeneratorMatrix walk_gen = build_reservoir_walk_generator(spec);
  const Eigen::VectorXd pair_row =
      transition_probabilities(pair_gen, t, pl.index(lay.channel(x1), lay.channel(x2)));
  const Eigen::VectorXd row1 = transition_probabilities(walk_gen, t, lay.channel(x1));
  const Eigen::VectorXd row2 = transition_probabilities(walk_gen, t, lay.channel(x2));

  double second = 0.0;
  for (int idx = 0; idx < pl.size(); ++idx) {
    const auto [a, b] = pl.state(idx);
    second += pair_row(idx) * m2(a, b);
  }
  return second - row1.dot(m) * row2.dot(m);
}

}  // namespace sticky

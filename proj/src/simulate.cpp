#include "sticky/simulate.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "sticky/rng.hpp"

namespace sticky {

int default_worker_count() {
  if (const char* env = std::getenv("STICKY_HYDRO_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

namespace {

struct ReplicaState {
  std::vector<std::uint8_t> eta;             // channel bits, index x-1 for site x
  std::vector<std::uint8_t> res_l, res_r;    // reservoir bits (OmegaStar only)
  int n_minus = 0, n_plus = 0;
};

void fill_uniform_reservoir(std::vector<std::uint8_t>& bits, int M, int count,
                            std::mt19937_64& rng) {
  // exactly `count` particles on a uniformly random subset (partial shuffle)
  std::vector<int> idx(M);
  for (int i = 0; i < M; ++i) idx[i] = i;
  bits.assign(M, 0);
  for (int i = 0; i < count; ++i) {
    const int j = i + static_cast<int>(uniform_below(rng, M - i));
    std::swap(idx[i], idx[j]);
    bits[idx[i]] = 1;
  }
}

void init_replica(ReplicaState& st, const SimConfig& cfg, std::mt19937_64& rng) {
  const int N = cfg.spec.N, M = cfg.spec.M();
  st.eta.resize(N);
  for (int x = 1; x <= N; ++x) st.eta[x - 1] = bernoulli(rng, cfg.initial.u0(cfg.spec.eps() * x));
  st.n_minus = static_cast<int>(std::lround(M * cfg.initial.v0_minus));
  st.n_plus = static_cast<int>(std::lround(M * cfg.initial.v0_plus));
  if (cfg.kind == ProcessKind::OmegaStar) {
    fill_uniform_reservoir(st.res_l, M, st.n_minus, rng);
    fill_uniform_reservoir(st.res_r, M, st.n_plus, rng);
  }
}

void validate(const SimConfig& cfg, ProcessKind expected) {
  if (cfg.kind != expected) throw std::invalid_argument("simulate: wrong process kind");
  if (cfg.replicas < 1) throw std::invalid_argument("simulate: replicas must be >= 1");
  if (!(cfg.horizon_tau > 0.0)) throw std::invalid_argument("simulate: horizon must be positive");
  if (cfg.sample_taus.empty()) throw std::invalid_argument("simulate: no sample times");
  for (std::size_t i = 0; i < cfg.sample_taus.size(); ++i) {
    const double tau = cfg.sample_taus[i];
    if (tau < 0.0 || tau > cfg.horizon_tau ||
        (i > 0 && tau <= cfg.sample_taus[i - 1]))
      throw std::invalid_argument("simulate: sample times must be increasing within [0, T]");
  }
  for (const auto& [x1, x2] : cfg.pairs)
    if (x1 < 1 || x2 < 1 || x1 > cfg.spec.N || x2 > cfg.spec.N || x1 == x2)
      throw std::invalid_argument("simulate: pair sites must be distinct channel sites");
}

void run_replica(const SimConfig& cfg, int rep, TrajectorySamples& out) {
  const int N = cfg.spec.N, M = cfg.spec.M();
  const bool star = cfg.kind == ProcessKind::OmegaStar;
  auto rng = make_stream(cfg.seed, static_cast<std::uint64_t>(rep));
  ReplicaState st;
  init_replica(st, cfg, rng);

  // Aggregated event rates: N-1 channel bonds at 1/2 and one group of M
  // reservoir bonds per side, each group totalling M * 1/(2M) = 1/2.  A group
  // event picks a uniform reservoir slot; for Omega the slot k is occupied
  // iff k < n (exchangeable reservoir), which realizes the mean-field rates.
  const double lam_int = 0.5 * (N - 1);
  const double lam = lam_int + 1.0;
  const double tscale = static_cast<double>(N) * N;

  const std::size_t n_taus = cfg.sample_taus.size();
  auto record = [&](std::size_t si) {
    if (out.has_profiles) {
      double* p = &out.profiles[(static_cast<std::size_t>(rep) * n_taus + si) *
                                cfg.spec.num_sites()];
      p[0] = static_cast<double>(st.n_minus) / M;
      for (int x = 1; x <= N; ++x) p[x] = st.eta[x - 1];
      p[N + 1] = static_cast<double>(st.n_plus) / M;
    }
    if (!cfg.pairs.empty()) {
      std::uint8_t* b =
          &out.pair_bits[((static_cast<std::size_t>(rep) * n_taus + si) * cfg.pairs.size()) * 2];
      for (const auto& [x1, x2] : cfg.pairs) {
        *b++ = st.eta[x1 - 1];
        *b++ = st.eta[x2 - 1];
      }
    }
  };

  double t = 0.0;
  std::size_t si = 0;
  while (si < n_taus) {
    const double t_next = t + rand_exp(rng, lam);
    while (si < n_taus && cfg.sample_taus[si] * tscale < t_next) {
      record(si);
      ++si;
    }
    if (si >= n_taus) break;
    t = t_next;

    const double u = uniform01(rng) * lam;
    if (u < lam_int) {
      const int b = static_cast<int>(uniform_below(rng, static_cast<std::uint32_t>(N - 1)));
      std::swap(st.eta[b], st.eta[b + 1]);
    } else {
      const bool left = u < lam_int + 0.5;
      const int k = static_cast<int>(uniform_below(rng, static_cast<std::uint32_t>(M)));
      std::uint8_t& site = left ? st.eta[0] : st.eta[N - 1];
      int& count = left ? st.n_minus : st.n_plus;
      if (star) {
        std::uint8_t& slot = (left ? st.res_l : st.res_r)[k];
        if (site != slot) {
          count += site ? 1 : -1;
          std::swap(site, slot);
        }
      } else {
        const bool occupied = k < count;
        if (site && !occupied) {
          site = 0;
          ++count;
        } else if (!site && occupied) {
          site = 1;
          --count;
        }
      }
    }
  }
}

TrajectorySamples simulate(const SimConfig& cfg) {
  TrajectorySamples out;
  out.spec = cfg.spec;
  out.sample_taus = cfg.sample_taus;
  out.replicas = cfg.replicas;
  out.pairs = cfg.pairs;
  out.has_profiles = cfg.record_profiles;
  const std::size_t n_taus = cfg.sample_taus.size();
  if (out.has_profiles)
    out.profiles.assign(static_cast<std::size_t>(cfg.replicas) * n_taus * cfg.spec.num_sites(),
                        0.0);
  if (!cfg.pairs.empty())
    out.pair_bits.assign(static_cast<std::size_t>(cfg.replicas) * n_taus * cfg.pairs.size() * 2,
                         0);

  const int workers = std::min(cfg.workers > 0 ? cfg.workers : default_worker_count(),
                               cfg.replicas);
  if (workers <= 1) {
    for (int r = 0; r < cfg.replicas; ++r) run_replica(cfg, r, out);
    return out;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (int r = w; r < cfg.replicas; r += workers) run_replica(cfg, r, out);
    });
  for (auto& th : pool) th.join();
  return out;
}

}  // namespace

TrajectorySamples simulate_omega(const SimConfig& cfg) {
  validate(cfg, ProcessKind::Omega);
  return simulate(cfg);
}

TrajectorySamples simulate_omega_star(const SimConfig& cfg) {
  validate(cfg, ProcessKind::OmegaStar);
  return simulate(cfg);
}

int StickyWalkPath::state_at(double t) const {
  const auto it = std::upper_bound(jump_times.begin(), jump_times.end(), t);
  return positions[it - jump_times.begin()];
}

StickyWalkPath simulate_sticky_walk(const LatticeSpec& spec, int x0, double horizon_micro,
                                    std::uint64_t seed) {
  const int N = spec.N;
  if (x0 < 0 || x0 > N + 1) throw std::invalid_argument("simulate_sticky_walk: x0 out of range");
  auto rng = make_stream(seed, 0);

  StickyWalkPath path;
  path.positions.push_back(x0);
  int pos = x0;
  double t = 0.0;
  while (t < horizon_micro) {
    const double hold = rand_exp(rng, 1.0);
    if (pos == 0 || pos == N + 1) {
      const double stretched = 2.0 * N * hold;  // reflected sojourn amplified
      path.boundary_sojourns.emplace_back(pos, stretched);
      t += stretched;
      pos = pos == 0 ? 1 : N;
    } else {
      t += hold;
      pos += bernoulli(rng, 0.5) ? 1 : -1;
    }
    path.jump_times.push_back(t);
    path.positions.push_back(pos);
  }
  return path;
}

DensityEstimate estimate_density(const TrajectorySamples& s) {
  if (s.replicas < 2) throw std::invalid_argument("estimate_density: needs >= 2 replicas");
  if (!s.has_profiles || s.sample_taus.empty())
    throw std::invalid_argument("estimate_density: samples carry no profiles");
  const int R = s.replicas, K = static_cast<int>(s.sample_taus.size()), S = s.spec.num_sites();

  DensityEstimate est;
  est.taus = s.sample_taus;
  est.mean.assign(K, DensityProfile(S, 0.0));
  est.se.assign(K, DensityProfile(S, 0.0));
  for (int k = 0; k < K; ++k) {
    for (int x = 0; x < S; ++x) {
      double m = 0.0;
      for (int r = 0; r < R; ++r) m += s.profile_at(r, k, x);
      m /= R;
      double v = 0.0;
      for (int r = 0; r < R; ++r) {
        const double d = s.profile_at(r, k, x) - m;
        v += d * d;
      }
      est.mean[k][x] = m;
      est.se[k][x] = std::sqrt(v / (static_cast<double>(R) * (R - 1)));
    }
  }
  return est;
}

TwoPointEstimate estimate_two_point(const TrajectorySamples& s,
                                    const std::vector<std::pair<int, int>>& pairs) {
  if (s.replicas < 2) throw std::invalid_argument("estimate_two_point: needs >= 2 replicas");
  const int R = s.replicas, K = static_cast<int>(s.sample_taus.size());

  TwoPointEstimate est;
  est.taus = s.sample_taus;
  est.pairs = pairs;
  est.cov.assign(static_cast<std::size_t>(K) * pairs.size(), 0.0);
  est.se.assign(static_cast<std::size_t>(K) * pairs.size(), 0.0);

  std::vector<double> jack(R);
  for (std::size_t pi = 0; pi < pairs.size(); ++pi) {
    const auto [x1, x2] = pairs[pi];
    if (x1 == x2) throw std::invalid_argument("estimate_two_point: coincident pair");
    // locate the recorded bits, or fall back to stored profiles
    int rec = -1;
    for (std::size_t q = 0; q < s.pairs.size(); ++q)
      if (s.pairs[q] == pairs[pi]) rec = static_cast<int>(q);
    if (rec < 0 && !s.has_profiles)
      throw std::invalid_argument("estimate_two_point: pair not recorded");

    for (int k = 0; k < K; ++k) {
      double s1 = 0.0, s2 = 0.0, s12 = 0.0;
      for (int r = 0; r < R; ++r) {
        double b1, b2;
        if (rec >= 0) {
          const std::uint8_t* b = s.pair_at(r, k, rec);
          b1 = b[0];
          b2 = b[1];
        } else {
          b1 = s.profile_at(r, k, x1);
          b2 = s.profile_at(r, k, x2);
        }
        s1 += b1;
        s2 += b2;
        s12 += b1 * b2;
      }
      est.cov[k * pairs.size() + pi] = s12 / R - (s1 / R) * (s2 / R);

      // jackknife over replicas
      double jm = 0.0;
      for (int r = 0; r < R; ++r) {
        double b1, b2;
        if (rec >= 0) {
          const std::uint8_t* b = s.pair_at(r, k, rec);
          b1 = b[0];
          b2 = b[1];
        } else {
          b1 = s.profile_at(r, k, x1);
          b2 = s.profile_at(r, k, x2);
        }
        const double r1 = (s1 - b1) / (R - 1), r2 = (s2 - b2) / (R - 1);
        jack[r] = (s12 - b1 * b2) / (R - 1) - r1 * r2;
        jm += jack[r];
      }
      jm /= R;
      double jv = 0.0;
      for (int r = 0; r < R; ++r) jv += (jack[r] - jm) * (jack[r] - jm);
      est.se[k * pairs.size() + pi] = std::sqrt(jv * (R - 1) / R);
    }
  }
  return est;
}

void dump_samples_csv(const TrajectorySamples& s, const std::string& path) {
  if (!s.has_profiles) throw std::invalid_argument("dump_samples_csv: samples carry no profiles");
  const bool gz = path.size() > 3 && path.substr(path.size() - 3) == ".gz";
  std::string text = "replica,tau,site,value\n";
  char buf[96];
  for (int r = 0; r < s.replicas; ++r)
    for (std::size_t k = 0; k < s.sample_taus.size(); ++k)
      for (int x = 0; x < s.spec.num_sites(); ++x) {
        std::snprintf(buf, sizeof(buf), "%d,%.12g,%d,%.12g\n", r, s.sample_taus[k], x,
                      s.profile_at(r, static_cast<int>(k), x));
        text += buf;
      }
  if (gz) {
    gzFile f = gzopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("dump_samples_csv: cannot open " + path);
    gzwrite(f, text.data(), static_cast<unsigned>(text.size()));
    gzclose(f);
  } else {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("dump_samples_csv: cannot open " + path);
    f << text;
  }
}

}  // namespace sticky

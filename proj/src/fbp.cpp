#include "sticky/fbp.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <cstdio>
#include <functional>
#include <stdexcept>

namespace sticky {

namespace {

// Fold the even, 2-periodic argument into [0,1].
double fold_even(double r) {
  double x = std::fmod(std::fabs(r), 2.0);
  return x > 1.0 ? 2.0 - x : x;
}

// Fold for odd derivatives: returns x in [0,1] and the orientation sign.
double fold_odd(double r, double& sign) {
  double x = std::fmod(r, 2.0);
  if (x < 0.0) x += 2.0;
  sign = 1.0;
  if (x > 1.0) {
    x = 2.0 - x;
    sign = -1.0;
  }
  return x;
}

int image_count(double t, const ThetaParams& p) {
  const double n = std::ceil(std::sqrt(0.5 * t * std::log(1.0 / p.tail_tol))) + 2.0;
  return std::min(static_cast<double>(p.n_max_cap), n);
}

// Composite fixed Gauss-Legendre on [0,1].  The panel count follows the
// kernel width sqrt(scale) so small-t integrands stay resolved; fixed nodes
// keep the result a smooth function of any parameters of f.
double integrate01(const std::function<double(double)>& f, double scale) {
  const int panels =
      std::clamp(static_cast<int>(std::ceil(3.0 / std::sqrt(std::max(scale, 1e-5)))), 8, 1024);
  const double w = 1.0 / panels;
  double s = 0.0;
  for (int i = 0; i < panels; ++i)
    s += boost::math::quadrature::gauss<double, 16>::integrate(f, i * w, (i + 1) * w);
  return s;
}

// int e^{-c/x^2} dx = x e^{-c/x^2} - sqrt(pi c) erfc(sqrt(c)/x),  x > 0
double gauss_inv_sq_antideriv(double c, double x) {
  if (x <= 0.0) return 0.0;
  return x * std::exp(-c / (x * x)) - std::sqrt(M_PI * c) * std::erfc(std::sqrt(c) / x);
}

void check_time_interval(double a, double b, const char* who) {
  if (!(a >= 0.0) || !(b >= a)) throw std::domain_error(std::string(who) + ": need 0 <= a <= b");
}

const double kSqrt2OverPi = std::sqrt(2.0 / M_PI);

}  // namespace

double theta(double r, double t, const ThetaParams& p) {
  if (t <= 0.0) throw std::domain_error("theta: t must be positive");
  const double x = fold_even(r);
  const int K = image_count(t, p);
  double s = 0.0;
  for (int n = -K; n <= K; ++n) {
    const double a = x + 2.0 * n;
    s += std::exp(-a * a / (2.0 * t));
  }
  return s / std::sqrt(2.0 * M_PI * t);
}

double theta_dr(double r, double t, const ThetaParams& p) {
  if (t <= 0.0) throw std::domain_error("theta_dr: t must be positive");
  double sign = 1.0;
  const double x = fold_odd(r, sign);
  if (x == 0.0 || x == 1.0) return 0.0;  // odd about both endpoints
  const int K = image_count(t, p);
  double s = 0.0;
  for (int n = -K; n <= K; ++n) {
    const double a = x + 2.0 * n;
    s -= a / t * std::exp(-a * a / (2.0 * t));
  }
  return sign * s / std::sqrt(2.0 * M_PI * t);
}

double theta0_time_integral(double a, double b) {
  check_time_interval(a, b, "theta0_time_integral");
  if (b == a) return 0.0;
  const double sa = std::sqrt(a), sb = std::sqrt(b);
  // n = 0 image is the bare (2 pi s)^{-1/2} singularity
  double s = sb - sa;
  for (int n = 1; n <= 64; ++n) {
    const double c = 2.0 * n * n;
    const double inc = gauss_inv_sq_antideriv(c, sb) - gauss_inv_sq_antideriv(c, sa);
    s += 2.0 * inc;
    if (std::exp(-c / b) < 1e-18) break;
  }
  return kSqrt2OverPi * s;
}

double theta1_time_integral(double a, double b) {
  check_time_interval(a, b, "theta1_time_integral");
  if (b == a) return 0.0;
  const double sa = std::sqrt(a), sb = std::sqrt(b);
  double s = 0.0;
  for (int n = 0; n <= 64; ++n) {
    const double c = 0.5 * (2.0 * n + 1.0) * (2.0 * n + 1.0);
    const double inc = gauss_inv_sq_antideriv(c, sb) - gauss_inv_sq_antideriv(c, sa);
    s += 2.0 * inc;
    if (std::exp(-c / b) < 1e-18) break;
  }
  return kSqrt2OverPi * s;
}

double theta_dr_time_integral(double r, double a, double b, const ThetaParams& p) {
  check_time_interval(a, b, "theta_dr_time_integral");
  double sign = 1.0;
  const double x = fold_odd(r, sign);
  if (x == 0.0 || x == 1.0 || b == a) return 0.0;
  // int_a^b (c/s) phi_s(c) ds = sgn(c) [erfc(|c|/sqrt(2a)) - erfc(|c|/sqrt(2b))]
  const double sa2 = std::sqrt(2.0 * a), sb2 = std::sqrt(2.0 * b);
  const int K = image_count(b, p);
  double s = 0.0;
  for (int n = -K; n <= K; ++n) {
    const double c = x + 2.0 * n;
    const double ac = std::fabs(c);
    const double eb = std::erfc(ac / sb2);
    const double ea = a > 0.0 ? std::erfc(ac / sa2) : 0.0;
    s -= (c > 0.0 ? 1.0 : -1.0) * (eb - ea);
  }
  return sign * s;
}

// int_a^b sigma dTheta/dr (r,sigma) dsigma; the image terms reduce to
// -c int phi_sigma(c) dsigma, again an erfc antiderivative after sigma = xi^2.
double theta_dr_sigma_moment(double r, double a, double b, const ThetaParams& p) {
  check_time_interval(a, b, "theta_dr_sigma_moment");
  double sign = 1.0;
  const double x = fold_odd(r, sign);
  if (x == 0.0 || x == 1.0 || b == a) return 0.0;
  const double sa = std::sqrt(a), sb = std::sqrt(b);
  const int K = image_count(b, p);
  double s = 0.0;
  for (int n = -K; n <= K; ++n) {
    const double c = x + 2.0 * n;
    const double cc = 0.5 * c * c;
    s -= c * (gauss_inv_sq_antideriv(cc, sb) - gauss_inv_sq_antideriv(cc, sa));
  }
  return sign * kSqrt2OverPi * s;
}

std::pair<double, double> hitting_split_continuum(double r, double s, const ThetaParams& p) {
  if (r < 0.0 || r > 1.0) throw std::domain_error("hitting_split_continuum: r must be in [0,1]");
  if (r == 0.0) return {s >= 0.0 ? 1.0 : 0.0, 0.0};
  if (r == 1.0) return {0.0, s >= 0.0 ? 1.0 : 0.0};
  if (s <= 0.0) return {0.0, 0.0};
  // dF_r/ds = -dTheta/dr (r,s): flux of the absorbed kernel into 0
  const double F = -theta_dr_time_integral(r, 0.0, s, p);
  const double G = -theta_dr_time_integral(1.0 - r, 0.0, s, p);
  return {F, G};
}

std::pair<double, double> f_prime(const InitialData& init, double t, const ThetaParams& p) {
  if (t <= 0.0) throw std::domain_error("f_prime: t must be positive");
  const double fm =
      -integrate01([&](double rp) { return init.u0(rp) * theta_dr(rp, t, p); }, t);
  const double fp =
      -integrate01([&](double rp) { return init.u0(rp) * theta_dr(1.0 - rp, t, p); }, t);
  return {fm, fp};
}

std::pair<double, double> forcing_integral(const InitialData& init, double t,
                                           const ThetaParams& p) {
  if (t <= 0.0) return {init.v0_minus, init.v0_plus};
  const double fm = init.v0_minus + integrate01(
      [&](double rp) { return init.u0(rp) * (-theta_dr_time_integral(rp, 0.0, t, p)); }, t);
  const double fp = init.v0_plus + integrate01(
      [&](double rp) { return init.u0(rp) * (-theta_dr_time_integral(1.0 - rp, 0.0, t, p)); }, t);
  return {fm, fp};
}

std::vector<double> uniform_grid(double T, double h) {
  if (!(T > 0.0) || !(h > 0.0) || h > T)
    throw std::invalid_argument("uniform_grid: need 0 < h <= T");
  const int n = static_cast<int>(std::llround(T / h));
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = (i + 1) * h;
  return g;
}

namespace {

double check_uniform(const std::vector<double>& t_grid) {
  if (t_grid.empty()) throw std::invalid_argument("solve_volterra: empty grid");
  const double h = t_grid[0];
  if (!(h > 0.0)) throw std::invalid_argument("solve_volterra: grid must start at t1 = h > 0");
  for (std::size_t i = 0; i < t_grid.size(); ++i)
    if (std::fabs(t_grid[i] - (i + 1) * h) > 1e-9 * h)
      throw std::invalid_argument("solve_volterra: grid must be uniform");
  return h;
}

// Step moments of the kernel matrix entries: km[m] = int K_-, kp[m] = int K_+
// over [m h, (m+1) h].
void kernel_moments(double h, int n, std::vector<double>& km, std::vector<double>& kp) {
  km.resize(n);
  kp.resize(n);
  for (int m = 0; m < n; ++m) {
    km[m] = -theta0_time_integral(m * h, (m + 1) * h);
    kp[m] = theta1_time_integral(m * h, (m + 1) * h);
  }
}

double piecewise_linear_at(const std::vector<double>& grid_vals, double v0, double h, double t) {
  if (t <= 0.0) return v0;
  const int n = static_cast<int>(grid_vals.size());
  const double pos = t / h;  // grid point i sits at pos = i+1
  if (pos >= n) return grid_vals[n - 1];
  const int j = static_cast<int>(pos);  // interval [j h, (j+1) h]
  const double lo = (j == 0) ? v0 : grid_vals[j - 1];
  const double hi = grid_vals[j];
  return lo + (pos - j) * (hi - lo);
}

}  // namespace

double VolterraSolution::v_minus_at(double t) const {
  return piecewise_linear_at(v_minus, v0m_, h, t);
}
double VolterraSolution::v_plus_at(double t) const {
  return piecewise_linear_at(v_plus, v0p_, h, t);
}

VolterraSolution solve_volterra(const InitialData& init, const std::vector<double>& t_grid,
                                const ThetaParams& p, double residual_flag_tol) {
  const double h = check_uniform(t_grid);
  const int n = static_cast<int>(t_grid.size());
  const double v0m = init.v0_minus, v0p = init.v0_plus;

  std::vector<double> km, kp;
  kernel_moments(h, n, km, kp);

  VolterraSolution sol;
  sol.h = h;
  sol.t_grid = t_grid;
  sol.v0m_ = v0m;
  sol.v0p_ = v0p;
  sol.V_minus.assign(n, 0.0);
  sol.V_plus.assign(n, 0.0);
  sol.v_minus.assign(n, 0.0);
  sol.v_plus.assign(n, 0.0);

  // March V as piecewise constant per step; the self-coupling through the
  // current step gives a 2x2 solve with the exact first-step moments.
  const double d = 1.0 - km[0];
  const double det = d * d - kp[0] * kp[0];
  double vm = v0m, vp = v0p;
  for (int i = 1; i <= n; ++i) {
    const double t = t_grid[i - 1];
    const auto [fpm, fpp] = f_prime(init, t, p);
    const double Km = -theta(0.0, t, p), Kp = theta(1.0, t, p);
    double rm = fpm + Km * v0m + Kp * v0p;
    double rp = fpp + Kp * v0m + Km * v0p;
    for (int j = 1; j < i; ++j) {
      rm += km[i - j] * sol.V_minus[j - 1] + kp[i - j] * sol.V_plus[j - 1];
      rp += kp[i - j] * sol.V_minus[j - 1] + km[i - j] * sol.V_plus[j - 1];
    }
    sol.V_minus[i - 1] = (d * rm + kp[0] * rp) / det;
    sol.V_plus[i - 1] = (kp[0] * rm + d * rp) / det;
    vm += h * sol.V_minus[i - 1];
    vp += h * sol.V_plus[i - 1];
    sol.v_minus[i - 1] = vm;
    sol.v_plus[i - 1] = vp;
  }

  // Residual of the integrated identities
  // v_-(t) = f_-(t) + int K_-(t-s) v_-(s) + K_+(t-s) v_+(s) ds (and mirror),
  // with v taken piecewise linear (midpoint values per step).
  double res = 0.0;
  for (int i = 1; i <= n; ++i) {
    const auto [fm, fp] = forcing_integral(init, t_grid[i - 1], p);
    double cm = fm, cp = fp;
    for (int j = 1; j <= i; ++j) {
      const double am = 0.5 * ((j == 1 ? v0m : sol.v_minus[j - 2]) + sol.v_minus[j - 1]);
      const double ap = 0.5 * ((j == 1 ? v0p : sol.v_plus[j - 2]) + sol.v_plus[j - 1]);
      cm += km[i - j] * am + kp[i - j] * ap;
      cp += kp[i - j] * am + km[i - j] * ap;
    }
    res = std::max(res, std::fabs(sol.v_minus[i - 1] - cm));
    res = std::max(res, std::fabs(sol.v_plus[i - 1] - cp));
  }
  sol.identity_residual = res;
  const double tol = residual_flag_tol > 0.0 ? residual_flag_tol : 10.0 * h;
  sol.flagged = res > tol;
  return sol;
}

namespace {

double evaluate_u_interior(double r, double t, const VolterraSolution& vol,
                           const InitialData& init, const ThetaParams& p) {
  double u = integrate01(
      [&](double rp) { return init.u0(rp) * (theta(r - rp, t, p) - theta(r + rp, t, p)); }, t);

  // Boundary convolutions int dTheta/dr (r, sigma) v(t - sigma) dsigma with v
  // piecewise linear, integrated exactly per step: on the s-step [t_{j-1},
  // t_j] (sigma = t - s in [lo, hi]) v(t - sigma) = v_j + (t - t_j - sigma) *
  // slope, so the step needs the 0th and 1st sigma-moments of the kernel.
  // Exactness here matters: near r = 0 the kernel is close to a point mass at
  // sigma = 0 and a midpoint rule would smear v by O(V h).
  const double h = vol.h;
  const int n = static_cast<int>(vol.t_grid.size());
  if (t > (n + 1e-9) * h)
    throw std::invalid_argument("evaluate_u: t beyond the solved Volterra range");
  const int full = std::min(n, static_cast<int>(t / h + 1e-12));
  double conv_m = 0.0, conv_p = 0.0;
  for (int j = 1; j <= full; ++j) {
    const double vm0 = j == 1 ? vol.v0m_ : vol.v_minus[j - 2], vm1 = vol.v_minus[j - 1];
    const double vp0 = j == 1 ? vol.v0p_ : vol.v_plus[j - 2], vp1 = vol.v_plus[j - 1];
    const double lo = t - j * h, hi = t - (j - 1) * h;
    const double m0m = theta_dr_time_integral(r, lo, hi, p);
    const double m1m = theta_dr_sigma_moment(r, lo, hi, p);
    const double m0p = theta_dr_time_integral(r - 1.0, lo, hi, p);
    const double m1p = theta_dr_sigma_moment(r - 1.0, lo, hi, p);
    const double sm = (vm1 - vm0) / h, sp = (vp1 - vp0) / h;
    conv_m += (vm1 + (t - j * h) * sm) * m0m - sm * m1m;
    conv_p += (vp1 + (t - j * h) * sp) * m0p - sp * m1p;
  }
  if (t > full * h + 1e-12 * h) {  // partial step between the last grid time and t
    const double width = t - full * h;
    const double vend_m = vol.v_minus_at(t), vend_p = vol.v_plus_at(t);
    const double sm = (vend_m - (full == 0 ? vol.v0m_ : vol.v_minus[full - 1])) / width;
    const double sp = (vend_p - (full == 0 ? vol.v0p_ : vol.v_plus[full - 1])) / width;
    conv_m += vend_m * theta_dr_time_integral(r, 0.0, width, p) -
              sm * theta_dr_sigma_moment(r, 0.0, width, p);
    conv_p += vend_p * theta_dr_time_integral(r - 1.0, 0.0, width, p) -
              sp * theta_dr_sigma_moment(r - 1.0, 0.0, width, p);
  }
  return u - conv_m + conv_p;
}

}  // namespace

double evaluate_u(double r, double t, const VolterraSolution& vol, const InitialData& init,
                  const ThetaParams& p) {
  if (t < 0.0) throw std::domain_error("evaluate_u: t must be >= 0");
  if (r <= 0.0) return t == 0.0 ? vol.v0m_ : vol.v_minus_at(t);
  if (r >= 1.0) return t == 0.0 ? vol.v0p_ : vol.v_plus_at(t);
  if (t == 0.0) return init.u0(r);

  // Inside the 2h boundary layer the dTheta/dr convolution concentrates at
  // s -> t and loses accuracy; interpolate from the boundary value instead.
  const double edge = 2.0 * vol.h;
  if (r < edge && edge < 0.5) {
    const double ui = evaluate_u_interior(edge, t, vol, init, p);
    return vol.v_minus_at(t) + (r / edge) * (ui - vol.v_minus_at(t));
  }
  if (r > 1.0 - edge && edge < 0.5) {
    const double ui = evaluate_u_interior(1.0 - edge, t, vol, init, p);
    return vol.v_plus_at(t) + ((1.0 - r) / edge) * (ui - vol.v_plus_at(t));
  }
  return evaluate_u_interior(r, t, vol, init, p);
}

FBPSolution solve_fbp(const InitialData& init, const std::vector<double>& t_grid,
                      const ThetaParams& p, double agreement_tol) {
  FBPSolution sol;
  sol.initial = init;
  sol.params = p;
  sol.volterra = solve_volterra(init, t_grid, p);

  const double h = sol.volterra.h;
  const int n = static_cast<int>(t_grid.size());
  const double v0m = init.v0_minus, v0p = init.v0_plus;

  std::vector<double> km, kp;
  kernel_moments(h, n, km, kp);
  std::vector<double> fm(n), fp(n);
  for (int i = 0; i < n; ++i) {
    const auto f = forcing_integral(init, t_grid[i], p);
    fm[i] = f.first;
    fp[i] = f.second;
  }

  // Window length with kernel L1 mass below the contraction threshold.
  int wsteps = n;
  while (wsteps > 1 &&
         theta0_time_integral(0.0, wsteps * h) + theta1_time_integral(0.0, wsteps * h) > 0.35)
    wsteps = (wsteps + 1) / 2;
  if (theta0_time_integral(0.0, wsteps * h) + theta1_time_integral(0.0, wsteps * h) > 0.45)
    throw std::runtime_error("solve_fbp: step too coarse for the Picard route");

  std::vector<double>& pm = sol.picard_v_minus;
  std::vector<double>& pp = sol.picard_v_plus;
  pm.assign(n, v0m);
  pp.assign(n, v0p);
  std::vector<double> nm(n), np(n), hm(n), hp(n);

  auto midpoint = [&](const std::vector<double>& v, double v0, int j) {
    return 0.5 * ((j == 1 ? v0 : v[j - 2]) + v[j - 1]);
  };

  for (int a = 0; a < n; a += wsteps) {
    const int b = std::min(n, a + wsteps);
    // history part over the already-converged prefix [0, t_a]
    for (int i = a + 1; i <= b; ++i) {
      double sm = 0.0, sp = 0.0;
      for (int j = 1; j <= a; ++j) {
        const double am = midpoint(pm, v0m, j), ap = midpoint(pp, v0p, j);
        sm += km[i - j] * am + kp[i - j] * ap;
        sp += kp[i - j] * am + km[i - j] * ap;
      }
      hm[i - 1] = sm;
      hp[i - 1] = sp;
    }
    double prev_change = 1e300;
    bool damped = false;
    int iter = 0;
    for (;; ++iter) {
      if (iter >= 200)
        throw std::runtime_error("solve_fbp: Picard iteration did not converge in 200 sweeps");
      double change = 0.0;
      for (int i = a + 1; i <= b; ++i) {
        double sm = fm[i - 1] + hm[i - 1];
        double sp = fp[i - 1] + hp[i - 1];
        for (int j = a + 1; j <= i; ++j) {
          const double am = midpoint(pm, v0m, j), ap = midpoint(pp, v0p, j);
          sm += km[i - j] * am + kp[i - j] * ap;
          sp += kp[i - j] * am + km[i - j] * ap;
        }
        nm[i - 1] = sm;
        np[i - 1] = sp;
        change = std::max(change, std::fabs(sm - pm[i - 1]));
        change = std::max(change, std::fabs(sp - pp[i - 1]));
      }
      if (change > prev_change) damped = true;  // oscillation: average the update
      const double mix = damped ? 0.5 : 1.0;
      for (int i = a + 1; i <= b; ++i) {
        pm[i - 1] += mix * (nm[i - 1] - pm[i - 1]);
        pp[i - 1] += mix * (np[i - 1] - pp[i - 1]);
      }
      if (change < 1e-11) break;
      prev_change = change;
    }
  }

  double dis = 0.0;
  for (int i = 0; i < n; ++i) {
    dis = std::max(dis, std::fabs(pm[i] - sol.volterra.v_minus[i]));
    dis = std::max(dis, std::fabs(pp[i] - sol.volterra.v_plus[i]));
  }
  sol.method_disagreement = dis;
  sol.flagged = dis > (agreement_tol > 0.0 ? agreement_tol : 10.0 * h);
  return sol;
}

double flux_identity_residual(const FBPSolution& sol, const std::vector<double>& t_check,
                              double diff_step) {
  const VolterraSolution& vol = sol.volterra;
  const double h = vol.h;
  double worst = 0.0;
  for (double t : t_check) {
    const int i = static_cast<int>(std::llround(t / h)) - 1;
    if (i < 0 || i >= static_cast<int>(vol.t_grid.size()) ||
        std::fabs(vol.t_grid[i] - t) > 1e-9 * h)
      throw std::invalid_argument("flux_identity_residual: t must lie on the Volterra grid");
    const double urm = (sol.u(diff_step, t) - vol.v_minus_at(t)) / diff_step;
    const double urp = (vol.v_plus_at(t) - sol.u(1.0 - diff_step, t)) / diff_step;
    worst = std::max(worst, std::fabs(vol.V_minus[i] - 0.5 * urm));
    worst = std::max(worst, std::fabs(vol.V_plus[i] + 0.5 * urp));
  }
  return worst;
}

void write_boundary_csv(const VolterraSolution& vol, std::ostream& os) {
  os << "t,v_minus,v_plus\n";
  char buf[96];
  for (std::size_t i = 0; i < vol.t_grid.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.12g,%.12g,%.12g", vol.t_grid[i], vol.v_minus[i],
                  vol.v_plus[i]);
    os << buf << '\n';
  }
}

void write_field_csv(const FBPSolution& sol, const std::vector<double>& r_grid,
                     const std::vector<double>& t_list, std::ostream& os) {
  os << "r,t,u\n";
  char buf[96];
  for (double t : t_list)
    for (double r : r_grid) {
      std::snprintf(buf, sizeof(buf), "%.12g,%.12g,%.12g", r, t, sol.u(r, t));
      os << buf << '\n';
    }
}

}  // namespace sticky

#pragma once

#include <ostream>
#include <utility>
#include <vector>

#include "sticky/lattice.hpp"

namespace sticky {

// Truncation control for the periodized Gaussian (method-of-images) kernel
// Theta(r,t) = sum_n (2 pi t)^{-1/2} exp(-(r+2n)^2 / (2t)).
struct ThetaParams {
  double tail_tol = 1e-14;  // absolute truncation target for the image sum
  int n_max_cap = 64;       // hard cap on the image count (plenty for t <= ~200)
};

double theta(double r, double t, const ThetaParams& params = {});
double theta_dr(double r, double t, const ThetaParams& params = {});

// Exact time moments of the kernels; the sqrt-singularity of Theta(0, ·) at
// 0 and all image terms integrate in closed form through erfc.
double theta0_time_integral(double a, double b);  // int_a^b Theta(0,s) ds
double theta1_time_integral(double a, double b);  // int_a^b Theta(1,s) ds
// int_a^b dTheta/dr (r,s) ds
double theta_dr_time_integral(double r, double a, double b, const ThetaParams& params = {});
// int_a^b s dTheta/dr (r,s) ds, used for exact product integration against
// piecewise-linear boundary values
double theta_dr_sigma_moment(double r, double a, double b, const ThetaParams& params = {});

// Split hitting distributions of Brownian motion on [0,1] started at r:
// F_r(s) = P_r(tau_0 <= s, tau_0 < tau_1) and the mirror G_r(s).
std::pair<double, double> hitting_split_continuum(double r, double s,
                                                  const ThetaParams& params = {});

// Derivatives of the no-flux forcing: f'_-(t) = -int u0(r') dTheta/dr(r',t) dr'
// and f'_+(t) = -int u0(r') dTheta/dr(1-r',t) dr'.
std::pair<double, double> f_prime(const InitialData& init, double t,
                                  const ThetaParams& params = {});

// Forcing itself, via the absorbed-flux identity
// f_-(t) = v0_- + int u0(r') F_{r'}(t) dr'   (mirror for f_+).
std::pair<double, double> forcing_integral(const InitialData& init, double t,
                                           const ThetaParams& params = {});

// Boundary derivatives V_± = v'_± on a uniform grid t_i = (i+1) h, solved by
// product integration of the 2x2 Volterra system with kernels
// K_-(t) = -Theta(0,t), K_+(t) = Theta(1,t), plus the integrated boundary
// values v_±(t_i) = v0_± + int_0^{t_i} V_±.
struct VolterraSolution {
  double h = 0.0;
  std::vector<double> t_grid;
  std::vector<double> V_minus, V_plus;
  std::vector<double> v_minus, v_plus;
  double identity_residual = 0.0;  // defect of the direct integral identities
  bool flagged = false;            // residual exceeded its tolerance

  double v_minus_at(double t) const;
  double v_plus_at(double t) const;
  double v0_minus() const { return v0m_; }
  double v0_plus() const { return v0p_; }
  double v0m_ = 0.0, v0p_ = 0.0;
};

VolterraSolution solve_volterra(const InitialData& init, const std::vector<double>& t_grid,
                                const ThetaParams& params = {},
                                double residual_flag_tol = -1.0);

std::vector<double> uniform_grid(double T, double h);

// u(r,t) from the representation formula: absorbed-kernel integral of u0 plus
// the two boundary convolutions against v_±.  For r outside (0,1) the
// boundary values are returned directly; inside a 2h layer the value is
// interpolated between the boundary and the nearest interior evaluation.
double evaluate_u(double r, double t, const VolterraSolution& vol, const InitialData& init,
                  const ThetaParams& params = {});

struct FBPSolution {
  InitialData initial;
  ThetaParams params;
  VolterraSolution volterra;              // product-integration route
  std::vector<double> picard_v_minus;     // fixed-point route on the same grid
  std::vector<double> picard_v_plus;
  double method_disagreement = 0.0;
  bool flagged = false;  // routes differ by more than the agreement tolerance

  double u(double r, double t) const { return evaluate_u(r, t, volterra, initial, params); }
};

// Solves the system twice (product integration and windowed Picard iteration
// on the integral identities) and records the disagreement; tolerance
// defaults to 10 h.
FBPSolution solve_fbp(const InitialData& init, const std::vector<double>& t_grid,
                      const ThetaParams& params = {}, double agreement_tol = -1.0);

// max over t_check and both endpoints of |v'_± (t) -/+ u_r(0 or 1, t)/2|
// with a one-sided difference of step diff_step.
double flux_identity_residual(const FBPSolution& sol, const std::vector<double>& t_check,
                              double diff_step = 1e-3);

// CSV exports: (t, v_minus, v_plus) and (r, t, u).
void write_boundary_csv(const VolterraSolution& vol, std::ostream& os);
void write_field_csv(const FBPSolution& sol, const std::vector<double>& r_grid,
                     const std::vector<double>& t_list, std::ostream& os);

}  // namespace sticky

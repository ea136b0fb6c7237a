#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sgacs/action.hpp"
#include "sgacs/background.hpp"
#include "sgacs/grid.hpp"

namespace sgacs {

// Static coefficients of
//   theta_tt = u.D pi + D.(u pi) + D.((c^2 I - u u^T) D theta) - (V0 lambda / hbar) sin(2 theta / hbar)
// which is the Euler-Lagrange equation of
//   L = sum dV [ (pi - u.D theta)^2 / 2V0 - c^2 |D theta|^2 / 2V0 - lambda/2 (1 - cos(2 theta / hbar)) ].
struct SgParams {
  ScalarField cs2;
  VectorField u;
  ScalarField lambda;  // 2 V0 n_H0 n_L0
  double V0 = 1.0;
  double hbar = 1.0;
  double cfl = 0.4;    // must not exceed 0.5
  ScalarField sponge;  // damping rate; nonzero only within 8 cells of fixed-value walls

  const Grid& grid() const { return cs2.grid(); }
  // Squared small-amplitude mass 2 V0 lambda / hbar^2 (cell 0).
  double mass2() const { return 2.0 * V0 * lambda[0] / (hbar * hbar); }
};

SgParams sg_params(const Background& bg, double cfl = 0.4);
// Uniform coefficients without flow.
SgParams sg_params_uniform(const Grid& g, double cs2, double lambda, double V0 = 1.0, double hbar = 1.0,
                           double cfl = 0.4);

struct SgState {
  ScalarField theta;         // at time t
  ScalarField pi;            // rate at t - dt/2
  std::vector<double> jump;  // theta(x + L) = theta(x) + jump per periodic axis
  double t = 0.0;
  double dt = 0.0;
  long steps = 0;
};

// Raised when a step produces a nonfinite value; holds the state before it.
class SgBlowUpError : public NumericError {
 public:
  SgBlowUpError(const std::string& what, SgState last_good) : NumericError(what), last_good(std::move(last_good)) {}
  SgState last_good;
};

double max_stable_dt(const SgParams& p);

// Semi-discrete right-hand side (sponge included).
ScalarField sg_acceleration(const SgParams& p, const ScalarField& theta, const ScalarField& pi,
                            std::span<const double> jump);

// One leapfrog step; the kick averages pi across the half steps and is
// solved by fixed-point iteration when u != 0.
void step(SgState& s, const SgParams& p, double dt);
// Rate synchronized to time t by a half kick.
ScalarField synchronized_rate(const SgState& s, const SgParams& p);
// Discrete first integral (static background, sponge ignored):
//   sum dV [ (pi^2 - (u.D theta)^2 + c^2 |D theta|^2) / 2V0 + lambda/2 (1 - cos) ]
// with pi^2 taken as the staggered product pi(t - dt/2) pi(t + dt/2).
double energy(const SgState& s, const SgParams& p);
double energy_at(const SgParams& p, const ScalarField& theta, const ScalarField& pi, std::span<const double> jump);
// Winding of phi = 2 theta / hbar along axis 0 in units of 2 pi, averaged over transverse lines.
double charge(const SgState& s, const SgParams& p);
// Full kick to t + dt/2 and negated rate: stepping again retraces the path (u = 0).
void reverse(SgState& s, const SgParams& p);

// phi = 2 theta / hbar = 4 atan(exp(gamma mu (x - x0 - v t))) along axis 0,
// mu = M / c; quasi-periodic with one unit of charge.
SgState kink_initial_condition(const SgParams& p, double velocity, double x0, double dt);
ScalarField kink_profile(const SgParams& p, double velocity, double x0, double t);
// RMS of the wrapped phi difference against the analytic kink, divided by 2 pi.
double kink_shape_error(const SgState& s, const SgParams& p, double velocity, double x0);

// theta = A cos(k x) cos(omega t), k = 2 pi mode / L along axis 0 and
// omega^2 = c^2 k_eff^2 + M^2 with k_eff = sin(k dx) / dx.
SgState standing_wave_initial_condition(const SgParams& p, int mode, double amplitude, double dt);
double standing_wave_omega(const SgParams& p, int mode);

// Packed [theta..., rate...] Lagrangian for the oracle.
Functional sg_lagrangian(const SgParams& p, std::vector<double> jump = {});

// Max over random directions d of
//   |H_{rr}(d, a) + H_{r theta}(d, rate) - dL/dtheta . d| / scale
// with a the solver acceleration: the discrete Euler-Lagrange residual.
double sg_consistency_residual(const SgParams& p, const ScalarField& theta, const ScalarField& rate, int directions = 6,
                               std::uint64_t seed = 1);

// ---- tunnel-coupled planes ----

struct PlanesParams {
  SgParams left, right;
  ScalarField amplitude;  // t_perp sqrt(n_L n_R)
  double gamma0 = 0.0;
};

// Per-cell potential A [ -cos g0 (1 - cos g) + sin g0 (g - sin g) ], g = (theta_L - theta_R)/hbar.
double planes_potential(double amplitude, double gamma0, double gamma);

struct PlanesState {
  SgState left, right;
};

void planes_accelerations(const PlanesParams& p, const PlanesState& s, const ScalarField& pi_left,
                          const ScalarField& pi_right, ScalarField& acc_left, ScalarField& acc_right);
void planes_step(PlanesState& s, const PlanesParams& p, double dt);
double planes_energy(const PlanesState& s, const PlanesParams& p);
double plane_energy(const SgState& s, const SgParams& p);  // free part only (lambda ignored)
// Small-oscillation frequency^2 of uniform gamma about gamma0 = pi: 2 V0 A / hbar^2.
double planes_gamma_omega2(const PlanesParams& p);
Functional planes_lagrangian(const PlanesParams& p);
double planes_consistency_residual(const PlanesParams& p, const PlanesState& s, int directions = 6,
                                   std::uint64_t seed = 1);

struct SeriesRow {
  double t, energy, charge, min, max;
};
void write_time_series(std::ostream& os, const std::vector<SeriesRow>& rows);

}  // namespace sgacs

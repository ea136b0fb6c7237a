#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "sgacs/grid.hpp"

namespace sgacs {

// Background tuple the metric and coupling fields are built from. All
// fields live on one spatial grid. `mask[i] != 0` marks cells excluded
// from every downstream computation (vortex cores, empty TF regions).
struct Background {
  Grid grid;
  ScalarField n_L0, theta_L0, n_H0, theta_H0;
  VectorField v;
  ScalarField V_ext;
  double V0 = 1.0;
  double mu = 0.0;
  double m = 1.0;
  double hbar = 1.0;
  // When nonzero, theta_H0 is only defined modulo this period and is
  // differentiated with wrapped differences.
  double phase_period = 0.0;
  std::vector<std::uint8_t> mask;
  std::map<std::string, std::string> meta;  // family, alpha, w, k, ...

  bool masked(std::size_t i) const { return !mask.empty() && mask[i] != 0; }
  std::size_t masked_count() const;
  // grad theta_H0, masked cells NaN
  VectorField phase_gradient() const;
  // u = v - (1/m) grad theta_H0
  VectorField flow() const;
  // c_s^2 = V0 n_H0 / m
  ScalarField cs2() const;
};

// Background with constant densities, theta_L0 = 0 and theta_H0 phase
// matched with index k. `flow` is a constant u realized through v.
Background uniform_background(const Grid& g, double n_H0, double n_L0, double V0, double m = 1.0,
                              double hbar = 1.0, std::vector<double> flow = {}, int k = 0);

// Marks cell i masked and writes NaN into every per-cell field.
void mask_cell(Background& bg, std::size_t i);

// Throws PreconditionError naming the first violated invariant: finite
// fields off-mask, n >= 0, c_s^2 > 0.
void check_background(const Background& bg);

// ---- imaginary-time Gross-Pitaevskii ground state ----

struct GpeOptions {
  double dtau = 0.0;          // 0 selects a step from the spectral bound
  double tol = 1e-10;         // relative residual ||H psi - mu psi|| / (|mu| ||psi||)
  long max_steps = 400000;
  int max_outer = 50;
  double damping = 0.5;
  double outer_tol = 1e-8;
  bool self_consistent = false;
  double mu_H = 0.0;          // chemical potential of the TF estimate for n_H
  double m = 1.0;
  double hbar = 1.0;
};

struct GpeResult {
  ComplexField psi;
  ScalarField n, theta;
  double mu = 0.0;            // converged Lagrange multiplier
  double energy = 0.0;        // E[psi] / N
  double residual = 0.0;
  long steps = 0;
  int outer_iterations = 0;
  long clamped = 0;           // negative-density excursions of the n_H estimate clamped to 0
  std::vector<double> energy_history;   // per accepted step
  std::vector<double> outer_changes;    // sup-norm change of n_H per outer iteration
  ScalarField n_H;                      // final n_H estimate (self-consistent runs)
};

// Largest allowed dtau: min(0.4, 0.8/d) * min dx^2 * m / hbar.
double gpe_stability_bound(const Grid& g, double m = 1.0, double hbar = 1.0);

// Normalized gradient flow of
//   E = sum dV [ hbar^2/2m |D psi|^2 + (m V_ext + V0 n_H) |psi|^2 + V0/2 |psi|^4 ]
// with a nearest-neighbour covariant stencil (Peierls phases from v).
// Fixed-value axes hold psi = 0 just outside the grid; zero-normal axes
// drop the wall link.
GpeResult solve_gpe_imaginary_time(const Grid& g, const ScalarField& V_ext, double V0, const VectorField* v,
                                   double N_target, const GpeOptions& opt = {},
                                   const ScalarField* n_H = nullptr);

// Applies the single-particle part of the GPE operator (no |psi|^2 term).
ComplexField gpe_linear_apply(const ComplexField& psi, const ScalarField& potential, const VectorField* v,
                              double m, double hbar);

// n_H0 = (mu - m V_ext - V0 n_L0) / (2 V0); negative cells come back masked (NaN).
ScalarField thomas_fermi_density(double mu, const ScalarField& V_ext, double V0, const ScalarField& n_L0,
                                 double m = 1.0);
// Single-component profile (mu - m V_ext) / V0, clamped at 0.
ScalarField thomas_fermi_conventional(double mu, const ScalarField& V_ext, double V0, double m = 1.0);

// ---- analytic phases ----

// A e^{i n atan2(x2, x1)} (1 - n^2/r^2)^{1/2}; r <= |n| masked.
ComplexField vortex_wavefunction(int n, double A, const Grid& g);

// grad Arg(psi) using wrapped differences; masked where psi is.
VectorField phase_gradient(const ComplexField& psi);

// Sum of wrapped Arg increments of psi (bilinearly interpolated) around a
// circle. Returns the winding angle, an integer multiple of 2 pi.
double loop_phase_winding(const ComplexField& psi, double cx, double cy, double radius, int samples = 720);

struct PhaseField {
  ScalarField theta;                  // NaN inside the core
  std::vector<std::uint8_t> singular; // cells touching the branch cut of the raw arctangent
  std::vector<std::uint8_t> core;     // r <= 1
};

// theta = 1/2 atan2(2 w^2 (r^2 - 1) x1 x2, (1 - w^2) x1^2 + (1 + w^2) x2^2 + w^2 (x1^4 - x2^4))
PhaseField vortnovort_phase(double w, const Grid& g);
double vortnovort_value(double w, double x1, double x2);
// 1/2 Arg(phi0^2 + w^2 phi1^2) for an n = 1 vortex phi0 and constant phi1 = 1.
PhaseField superposition_phase(double w, const Grid& g);

// theta_H0 = theta_L0 + (2k + 1) pi hbar / 2
ScalarField phase_match(const ScalarField& theta_L0, int k, double hbar = 1.0);

// ---- validity checks ----

struct CheckRow {
  std::string check;
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct ValidityReport {
  std::vector<CheckRow> rows;
  std::vector<std::string> notes;
  bool all_pass() const;
  const CheckRow* find(const std::string& name) const;
};

struct ValidityOptions {
  double tolerance = 1e-2;
  double fluctuation_amplitude = 1e-2;  // delta in theta_d = delta hbar sin(x / xi0)
  double bulk_fraction = 0.05;          // quantum pressure ratio evaluated where n >= fraction * max n
  double kT = 0.0;
  double temperature_ratio = 0.1;
};

ValidityReport validate_assumptions(const Background& bg, const ValidityOptions& opt = {});

// Pointwise hbar^2 |grad n|^2 / (8 m n) / (V0 n^2 / 2).
ScalarField quantum_pressure_ratio(const ScalarField& n, double V0, double m = 1.0, double hbar = 1.0);

struct TemperatureCheck {
  bool valid = false;
  double ratio = 0.0;
};

// ratio = kT / (V0 min n_H0 n_L0); valid iff ratio < threshold.
TemperatureCheck temperature_bound(const Background& bg, double kT, double threshold = 0.1);

void write_report_csv(std::ostream& os, const ValidityReport& r);

// ---- serialization ----

// Writes n_L0.dump, theta_L0.dump, n_H0.dump, theta_H0.dump, V_ext.dump,
// v<j>.dump, mask.dump and manifest.txt (key=value) into `dir`.
void write_background_bundle(const std::string& dir, const Background& bg);
Background read_background_bundle(const std::string& dir);

}  // namespace sgacs

#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "sgacs/background.hpp"
#include "sgacs/grid.hpp"

namespace sgacs {

using cplx = std::complex<double>;

// High-energy sector fields on a space x tau grid. The background supplies
// everything else (n_L0, theta_L0, v, V_ext, mu).
struct FieldConfiguration {
  ScalarField n_H, theta_H;
  // Quasi-periodic winding of theta_H per spatial axis (theta(x + L) = theta(x) + jump).
  std::vector<double> theta_jump;

  const Grid& grid() const { return n_H.grid(); }
  std::vector<double> pack() const;  // [n_H..., theta_H...]
  void unpack(std::span<const double> x);
};

// n_H0 and theta_H0 of `bg` copied onto every tau slice.
FieldConfiguration background_configuration(const Background& bg, const TauAxis& tau);

struct ActionOptions {
  bool quantum_pressure = false;
};

// Polar-form high-energy action with measure dtau/hbar dV. The Berry term
// i n dtau(theta) makes the value complex.
cplx action_SH(const FieldConfiguration& cfg, const Background& bg, const ActionOptions& opt = {});

// Energy functional of the low-energy stationary field psi_L0 (space x tau grid),
// with D = grad - i (m/hbar) v.
cplx action_SL0(const ComplexField& psi_L0, const Background& bg);

// (t/2) int (conj(psi_L) psi_R + c.c.) dtau dV in polar variables.
double action_tunneling(const ScalarField& theta_L, const ScalarField& theta_R, const ScalarField& n_L,
                        const ScalarField& n_R, double t_perp, double hbar = 1.0);

// S_H values with theta_H0 shifted by j pi hbar / offsets, j = 0..offsets-1.
std::vector<double> phase_offset_scan(const Background& bg, const TauAxis& tau, int offsets = 32);

// ---- numeric functional-derivative oracle ----

using Functional = std::function<cplx(std::span<const double>)>;

struct OracleEstimate {
  cplx value;
  double error = 0.0;  // spread between the two Richardson levels
};

// Directional derivative by central differences with a three-step
// Richardson sweep. eps = 0 selects max(1e-6, 1e-7 |x|_inf).
OracleEstimate functional_gradient(const Functional& S, std::span<const double> x, std::span<const double> d,
                                   double eps = 0.0);
// Bilinear second difference d1^T H d2, Richardson-extrapolated. h = 0 selects 1e-3 max(1, |x|_inf).
OracleEstimate functional_hessian_apply(const Functional& S, std::span<const double> x, std::span<const double> d1,
                                        std::span<const double> d2, double h = 0.0);
// Mixed third derivative with a separate step per direction.
OracleEstimate functional_third(const Functional& S, std::span<const double> x, std::span<const double> d1,
                                std::span<const double> d2, std::span<const double> d3, double h1, double h2,
                                double h3);
// Plain fourth difference along d (no extrapolation); zero for quadratic functionals.
cplx fourth_difference(const Functional& S, std::span<const double> x, std::span<const double> d, double h);

// Wraps action_SH as a function of the packed configuration.
Functional sh_functional(const FieldConfiguration& cfg, const Background& bg, const ActionOptions& opt = {});

// ---- analytic kernels on the same stencil ----

// d1^T H d2 from the Hessian kernels of S_H evaluated at cfg (quantum pressure off).
cplx hessian_kernel(const FieldConfiguration& cfg, const Background& bg, const FieldConfiguration& d1,
                    const FieldConfiguration& d2);
// One-loop quadratic model 1/2 d^T H d.
cplx quadratic_model(const FieldConfiguration& cfg, const Background& bg, const FieldConfiguration& d);
// (theta, theta, n) third derivative:
//   (1/m) int dn grad dth1 . grad dth2 - (4 V0 / hbar^2) int n_L0 cos(2 (theta - theta_L0)/hbar) dn dth1 dth2
double third_kernel_thth_n(const FieldConfiguration& cfg, const Background& bg, const ScalarField& dth1,
                           const ScalarField& dth2, const ScalarField& dn);

struct ThirdDirections {
  ScalarField n1, n2, theta1, theta2;
};

// Rows: third_nnn, third_nn_theta, third_n_theta_n, third_theta_theta_n,
// fourth_quadratic_theta.
ValidityReport third_derivative_check(const FieldConfiguration& cfg, const Background& bg,
                                      const ThirdDirections& dirs);

// Smooth random field: a few low Fourier modes with unit-scale amplitude.
ScalarField random_smooth_field(const Grid& g, std::uint64_t seed, int modes = 3);

}  // namespace sgacs

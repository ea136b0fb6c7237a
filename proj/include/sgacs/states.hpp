#pragma once

#include <complex>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sgacs/grid.hpp"

namespace sgacs {

using cplx = std::complex<double>;

enum class StateFamily { coherent, even_cat, two_mode };

std::string to_string(StateFamily f);
StateFamily parse_state_family(const std::string& name);

// Truncated one- or two-mode Fock state. Amplitude of |j0, j1> lives at
// j0 * (cutoff + 1) + j1; single-mode states have j1 = 0 only.
struct FockState {
  int modes = 1;
  int cutoff = 0;
  std::vector<cplx> amp;
  StateFamily family = StateFamily::coherent;
  cplx alpha{0.0, 0.0};
  std::optional<cplx> w;

  std::size_t index(int j0, int j1 = 0) const { return modes == 1 ? j0 : j0 * (cutoff + 1) + j1; }
  cplx at(int j0, int j1 = 0) const { return amp[index(j0, j1)]; }
  double norm2() const;
};

// ceil(10 + 6|alpha|^2)
int default_cutoff(cplx alpha);

// Probability the untruncated even cat puts beyond `cutoff`.
double even_cat_tail_mass(double abs_alpha, int cutoff);

FockState coherent(cplx alpha, int cutoff);
FockState even_coherent(cplx alpha, int cutoff);
FockState two_mode_superposition(cplx alpha, cplx w, int cutoff);

// Unnormalized amplitudes of the two-branch superposition, including the
// e^{-|alpha|^2/2} prefactor. Kept separate so tests can check the norm.
std::vector<cplx> two_mode_raw_amplitudes(cplx alpha, cplx w, int cutoff);

// 4 e^{-|a|^2} ((1 + |w|^2) cosh|a|^2 + 2 Re w)
double two_mode_norm(cplx w, cplx alpha);

enum class Observable { a0, a0_squared, n0, n1 };

cplx expectation(const FockState& s, Observable o);

// || a0^2 psi - alpha^2 psi || restricted to j0 <= cutoff - 2, where the
// truncated operator is exact.
double a0_squared_residual(const FockState& s);

cplx overlap(const FockState& a, const FockState& b);
FockState swap_modes(const FockState& s);

// CSV `j0,j1,re,im`, one row per stored amplitude.
void write_amplitudes_csv(std::ostream& os, const FockState& s);

// Coefficients of the compressed high-mode Hamiltonian. Fields are masked
// wherever an input wavefunction is masked.
struct CompressedCoefficients {
  StateFamily family = StateFamily::even_cat;
  double norm_factor = 1.0;         // N(w, alpha); 1 for single-mode families
  double intermode_energy = 0.0;    // integral of intermode_density
  ScalarField intermode_density;    // 2V0|a|^4 e^{-|a|^2}/N (w phi1^2 conj(phi0)^2 + c.c.)
  ScalarField one_body;             // G or 2V0|phi0|^2|a|^2 tanh^2|a|^2
  ScalarField one_body_fock;        // 2V0 <a0+ a0>|phi0|^2 from the truncated state
  ScalarField pair_magnitude;
  ScalarField pair_phase;           // xi
  ScalarField coupling;             // lambda(x)
};

CompressedCoefficients compressed_coefficients(StateFamily family, const ComplexField& phi0,
                                               const ComplexField* phi1, double V0, cplx alpha,
                                               cplx w = {0.0, 0.0});

}  // namespace sgacs

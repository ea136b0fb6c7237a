#include "sgacs/states.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace sgacs {

namespace {

constexpr double kTailLimit = 1e-12;

// log cosh without overflow
double log_cosh(double x) {
  x = std::abs(x);
  return x + std::log1p(std::exp(-2.0 * x)) - std::log(2.0);
}

// Sum over j > cutoff (with the given parity step) of exp(log term).
double tail_sum(double abs_alpha, int cutoff, int step, double log_norm) {
  if (abs_alpha == 0.0) return 0.0;
  const double la = std::log(abs_alpha);
  int j = cutoff + 1;
  if (step == 2 && j % 2 != 0) ++j;
  double s = 0.0;
  for (;; j += step) {
    const double lp = 2.0 * j * la - std::lgamma(j + 1.0) - log_norm;
    const double p = std::exp(lp);
    s += p;
    // terms decrease monotonically once j exceeds |alpha|^2
    if (j > abs_alpha * abs_alpha && p < 1e-30 * std::max(s, 1e-300)) break;
    if (j > cutoff + 100000) break;
  }
  return s;
}

double poisson_tail(double abs_alpha, int cutoff) {
  return tail_sum(abs_alpha, cutoff, 1, abs_alpha * abs_alpha);
}

// c_j = alpha^j / sqrt(j!) for j = 0..cutoff, by recursion.
std::vector<cplx> coherent_series(cplx alpha, int cutoff) {
  std::vector<cplx> c(cutoff + 1);
  c[0] = 1.0;
  for (int j = 1; j <= cutoff; ++j) c[j] = c[j - 1] * alpha / std::sqrt(static_cast<double>(j));
  return c;
}

void normalize(std::vector<cplx>& a) {
  double n = 0.0;
  for (const cplx& v : a) n += std::norm(v);
  if (n == 0.0) throw DegenerateInputError("state has zero norm");
  const double s = 1.0 / std::sqrt(n);
  for (cplx& v : a) v *= s;
}

void check_cutoff(int cutoff) {
  if (cutoff < 2) throw PreconditionError("Fock cutoff must be at least 2, got " + std::to_string(cutoff));
}

void check_even_tail(cplx alpha, int cutoff) {
  const double tail = even_cat_tail_mass(std::abs(alpha), cutoff);
  if (tail > kTailLimit) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "cutoff %d too small for |alpha| = %g (tail mass %.3g > 1e-12)", cutoff,
                  std::abs(alpha), tail);
    throw TruncationError(buf);
  }
}

}  // namespace

std::string to_string(StateFamily f) {
  switch (f) {
    case StateFamily::coherent: return "coherent";
    case StateFamily::even_cat: return "even_cat";
    case StateFamily::two_mode: return "two_mode";
  }
  return "?";
}

StateFamily parse_state_family(const std::string& name) {
  if (name == "coherent") return StateFamily::coherent;
  if (name == "even_cat") return StateFamily::even_cat;
  if (name == "two_mode") return StateFamily::two_mode;
  throw ConfigError("unknown state family '" + name + "' (expected coherent, even_cat or two_mode)");
}

double FockState::norm2() const {
  double n = 0.0;
  for (const cplx& v : amp) n += std::norm(v);
  return n;
}

int default_cutoff(cplx alpha) { return static_cast<int>(std::ceil(10.0 + 6.0 * std::norm(alpha))); }

double even_cat_tail_mass(double abs_alpha, int cutoff) {
  return tail_sum(abs_alpha, cutoff, 2, log_cosh(abs_alpha * abs_alpha));
}

FockState coherent(cplx alpha, int cutoff) {
  check_cutoff(cutoff);
  const double tail = poisson_tail(std::abs(alpha), cutoff);
  if (tail > kTailLimit) throw TruncationError("cutoff " + std::to_string(cutoff) + " too small for coherent state");
  FockState s;
  s.modes = 1;
  s.cutoff = cutoff;
  s.family = StateFamily::coherent;
  s.alpha = alpha;
  s.amp = coherent_series(alpha, cutoff);
  normalize(s.amp);
  return s;
}

FockState even_coherent(cplx alpha, int cutoff) {
  check_cutoff(cutoff);
  check_even_tail(alpha, cutoff);
  FockState s;
  s.modes = 1;
  s.cutoff = cutoff;
  s.family = StateFamily::even_cat;
  s.alpha = alpha;
  s.amp = coherent_series(alpha, cutoff);
  for (int j = 1; j <= cutoff; j += 2) s.amp[j] = 0.0;
  normalize(s.amp);
  return s;
}

std::vector<cplx> two_mode_raw_amplitudes(cplx alpha, cplx w, int cutoff) {
  check_cutoff(cutoff);
  const auto c = coherent_series(alpha, cutoff);
  const int n = cutoff + 1;
  std::vector<cplx> amp(static_cast<std::size_t>(n) * n, 0.0);
  const double pre = std::exp(-0.5 * std::norm(alpha));
  for (int j = 0; j <= cutoff; j += 2) {
    amp[j * n] += pre * 2.0 * c[j];      // |j, 0>
    amp[j] += w * pre * 2.0 * c[j];      // |0, j>
  }
  return amp;
}

FockState two_mode_superposition(cplx alpha, cplx w, int cutoff) {
  check_cutoff(cutoff);
  check_even_tail(alpha, cutoff);
  FockState s;
  s.modes = 2;
  s.cutoff = cutoff;
  s.family = StateFamily::two_mode;
  s.alpha = alpha;
  s.w = w;
  s.amp = two_mode_raw_amplitudes(alpha, w, cutoff);
  normalize(s.amp);
  return s;
}

double two_mode_norm(cplx w, cplx alpha) {
  const double a2 = std::norm(alpha);
  return 4.0 * std::exp(-a2) * ((1.0 + std::norm(w)) * std::cosh(a2) + 2.0 * w.real());
}

cplx expectation(const FockState& s, Observable o) {
  const int n = s.cutoff;
  const int n1max = s.modes == 2 ? n : 0;
  if (o == Observable::n1 && s.modes != 2) throw PreconditionError("n1 requested on a single-mode state");
  cplx r = 0.0;
  for (int j0 = 0; j0 <= n; ++j0) {
    for (int j1 = 0; j1 <= n1max; ++j1) {
      const cplx c = s.at(j0, j1);
      switch (o) {
        case Observable::a0:
          if (j0 >= 1) r += std::conj(s.at(j0 - 1, j1)) * std::sqrt(double(j0)) * c;
          break;
        case Observable::a0_squared:
          if (j0 >= 2) r += std::conj(s.at(j0 - 2, j1)) * std::sqrt(double(j0) * (j0 - 1)) * c;
          break;
        case Observable::n0: r += double(j0) * std::norm(c); break;
        case Observable::n1: r += double(j1) * std::norm(c); break;
      }
    }
  }
  return r;
}

double a0_squared_residual(const FockState& s) {
  const int n1max = s.modes == 2 ? s.cutoff : 0;
  const cplx a2 = s.alpha * s.alpha;
  double r = 0.0;
  for (int j0 = 0; j0 + 2 <= s.cutoff; ++j0) {
    for (int j1 = 0; j1 <= n1max; ++j1) {
      const cplx lowered = std::sqrt(double(j0 + 1) * (j0 + 2)) * s.at(j0 + 2, j1);
      r += std::norm(lowered - a2 * s.at(j0, j1));
    }
  }
  return std::sqrt(r);
}

cplx overlap(const FockState& a, const FockState& b) {
  if (a.modes != b.modes || a.cutoff != b.cutoff) throw SizeError("overlap of states with different truncations");
  cplx r = 0.0;
  for (std::size_t i = 0; i < a.amp.size(); ++i) r += std::conj(a.amp[i]) * b.amp[i];
  return r;
}

FockState swap_modes(const FockState& s) {
  if (s.modes != 2) throw PreconditionError("swap_modes needs a two-mode state");
  FockState out = s;
  for (int j0 = 0; j0 <= s.cutoff; ++j0)
    for (int j1 = 0; j1 <= s.cutoff; ++j1) out.amp[out.index(j1, j0)] = s.at(j0, j1);
  return out;
}

void write_amplitudes_csv(std::ostream& os, const FockState& s) {
  os << "j0,j1,re,im\n";
  const int n1max = s.modes == 2 ? s.cutoff : 0;
  char buf[96];
  for (int j0 = 0; j0 <= s.cutoff; ++j0) {
    for (int j1 = 0; j1 <= n1max; ++j1) {
      const cplx c = s.at(j0, j1);
      std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g\n", j0, j1, c.real(), c.imag());
      os << buf;
    }
  }
}

CompressedCoefficients compressed_coefficients(StateFamily family, const ComplexField& phi0,
                                               const ComplexField* phi1, double V0, cplx alpha, cplx w) {
  const Grid& g = phi0.grid();
  const double n0 = std::sqrt(std::abs(inner(phi0, phi0)));
  if (n0 == 0.0) throw DegenerateInputError("phi0 has zero norm");

  const bool two = family == StateFamily::two_mode;
  if (two) {
    if (!phi1) throw PreconditionError("two-mode family needs phi1");
    phi0.check_same(*phi1);
    const double n1 = std::sqrt(std::abs(inner(*phi1, *phi1)));
    if (n1 == 0.0) throw DegenerateInputError("phi1 has zero norm");
    const double ov = std::abs(inner(phi0, *phi1));
    if (ov > 1e-8 * n0 * n1) {
      throw PreconditionError("phi0 and phi1 are not orthogonal (|<phi0,phi1>| / norms = " +
                              std::to_string(ov / (n0 * n1)) + ")");
    }
  }

  const double a2 = std::norm(alpha);
  CompressedCoefficients c;
  c.family = family;
  c.norm_factor = two ? two_mode_norm(w, alpha) : 1.0;
  if (c.norm_factor <= 0.0) throw DegenerateInputError("superposition normalization N(w, alpha) vanishes");

  // Fock-side <a+a> per mode, from the truncated state itself.
  double occ0 = 0.0, occ1 = 0.0;
  if (a2 > 0.0) {
    const int cut = default_cutoff(alpha);
    if (family == StateFamily::coherent) {
      occ0 = expectation(coherent(alpha, cut), Observable::n0).real();
    } else if (family == StateFamily::even_cat) {
      occ0 = expectation(even_coherent(alpha, cut), Observable::n0).real();
    } else {
      const auto s = two_mode_superposition(alpha, w, cut);
      occ0 = expectation(s, Observable::n0).real();
      occ1 = expectation(s, Observable::n1).real();
    }
  }

  const double th = std::tanh(a2);
  c.intermode_density = ScalarField(g, 0.0);
  c.one_body = ScalarField(g);
  c.one_body_fock = ScalarField(g);
  c.pair_magnitude = ScalarField(g);
  c.pair_phase = ScalarField(g);
  c.coupling = ScalarField(g);

  for (std::size_t i = 0; i < phi0.size(); ++i) {
    const cplx p0 = phi0[i];
    const cplx p1 = two ? (*phi1)[i] : cplx{};
    if (phi0.masked(i) || (two && phi1->masked(i))) {
      c.intermode_density[i] = c.one_body[i] = c.one_body_fock[i] = kMasked;
      c.pair_magnitude[i] = c.pair_phase[i] = c.coupling[i] = kMasked;
      continue;
    }
    if (!two) {
      const double rho = std::norm(p0);
      c.one_body[i] = family == StateFamily::even_cat ? 2.0 * V0 * rho * a2 * th * th : 2.0 * V0 * rho * a2;
      c.one_body_fock[i] = 2.0 * V0 * occ0 * rho;
      c.pair_magnitude[i] = V0 * a2 * rho;
      c.pair_phase[i] = rho > 0.0 ? 2.0 * std::arg(p0) : kMasked;
      c.coupling[i] = 2.0 * V0 * a2 * rho;
    } else {
      const double N = c.norm_factor;
      const cplx s = p0 * p0 + std::norm(w) * p1 * p1;
      c.one_body[i] = 2.0 * V0 * a2 * th * (std::norm(p0) + std::norm(w * p1)) / N;
      c.one_body_fock[i] = 2.0 * V0 * (occ0 * std::norm(p0) + occ1 * std::norm(p1));
      c.pair_magnitude[i] = V0 * a2 * std::abs(s) / N;
      c.pair_phase[i] = std::abs(s) > 0.0 ? std::arg(s) : kMasked;
      c.coupling[i] = c.pair_magnitude[i];
      const cplx cross = w * p1 * p1 * std::conj(p0) * std::conj(p0);
      c.intermode_density[i] = 2.0 * V0 * a2 * a2 * std::exp(-a2) / N * 2.0 * cross.real();
    }
  }
  c.intermode_energy = integrate(c.intermode_density);
  return c;
}

}  // namespace sgacs

#include "sgacs/background.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>

namespace sgacs {

namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void require_2d(const Grid& g, const char* what) {
  if (g.dims() != 2) throw DimensionError(std::string(what) + " needs a 2-D grid, got d=" + std::to_string(g.dims()));
}

double sup_diff(const ScalarField& a, const ScalarField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = std::abs(a[i] - b[i]);
    if (!std::isnan(d)) m = std::max(m, d);
  }
  return m;
}

}  // namespace

// ---------------------------------------------------------------- Background

std::size_t Background::masked_count() const {
  return static_cast<std::size_t>(std::count_if(mask.begin(), mask.end(), [](std::uint8_t b) { return b != 0; }));
}

VectorField Background::phase_gradient() const {
  return phase_period > 0.0 ? gradient_wrapped(theta_H0, phase_period) : gradient(theta_H0);
}

VectorField Background::flow() const {
  VectorField gt = phase_gradient();
  VectorField u(grid, grid.dims());
  for (int a = 0; a < grid.dims(); ++a) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      u[a][i] = masked(i) ? kMasked : v[a][i] - gt[a][i] / m;
    }
  }
  return u;
}

ScalarField Background::cs2() const {
  ScalarField c(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) c[i] = masked(i) ? kMasked : V0 * n_H0[i] / m;
  return c;
}

Background uniform_background(const Grid& g, double n_H0, double n_L0, double V0, double m, double hbar,
                              std::vector<double> flow, int k) {
  Background bg;
  bg.grid = g;
  bg.n_H0 = ScalarField(g, n_H0);
  bg.n_L0 = ScalarField(g, n_L0);
  bg.theta_L0 = ScalarField(g, 0.0);
  bg.theta_H0 = phase_match(bg.theta_L0, k, hbar);
  bg.V_ext = ScalarField(g, 0.0);
  bg.v = VectorField(g, g.dims());
  for (int a = 0; a < g.dims(); ++a) bg.v[a] = ScalarField(g, a < static_cast<int>(flow.size()) ? flow[a] : 0.0);
  bg.V0 = V0;
  bg.m = m;
  bg.hbar = hbar;
  // Uniform stationary point of S_H at phase matching; the flow adds m v^2 / 2.
  double v2 = 0.0;
  for (double f : flow) v2 += f * f;
  bg.mu = V0 * (n_L0 + n_H0) + 0.5 * m * v2;
  bg.mask.assign(g.size(), 0);
  bg.meta["family"] = "uniform";
  bg.meta["k"] = std::to_string(k);
  return bg;
}

void mask_cell(Background& bg, std::size_t i) {
  if (bg.mask.empty()) bg.mask.assign(bg.grid.size(), 0);
  bg.mask[i] = 1;
  for (ScalarField* f : {&bg.n_L0, &bg.theta_L0, &bg.n_H0, &bg.theta_H0}) (*f)[i] = kMasked;
}

void check_background(const Background& bg) {
  if (!(bg.V0 > 0.0)) throw PreconditionError("background needs V0 > 0");
  if (!(bg.m > 0.0) || !(bg.hbar > 0.0)) throw PreconditionError("background needs m > 0 and hbar > 0");
  if (bg.v.components() != bg.grid.dims()) throw PreconditionError("background flow v needs one component per axis");
  for (std::size_t i = 0; i < bg.grid.size(); ++i) {
    if (bg.masked(i)) continue;
    const double vals[] = {bg.n_L0[i], bg.theta_L0[i], bg.n_H0[i], bg.theta_H0[i], bg.V_ext[i]};
    for (double x : vals) {
      if (!std::isfinite(x)) throw PreconditionError("background has a non-finite value at unmasked cell " + std::to_string(i));
    }
    if (bg.n_L0[i] < 0.0 || bg.n_H0[i] < 0.0) throw PreconditionError("negative density at cell " + std::to_string(i));
    if (!(bg.V0 * bg.n_H0[i] / bg.m > 0.0)) {
      throw PreconditionError("c_s^2 = V0 n_H0 / m is not positive at unmasked cell " + std::to_string(i));
    }
  }
}

// ---------------------------------------------------------------- GPE

double gpe_stability_bound(const Grid& g, double m, double hbar) {
  double dx = g.axis(0).dx;
  for (const Axis& a : g.axes()) dx = std::min(dx, a.dx);
  return std::min(0.4, 0.8 / g.dims()) * dx * dx * m / hbar;
}

ComplexField gpe_linear_apply(const ComplexField& psi, const ScalarField& potential, const VectorField* v, double m,
                              double hbar) {
  const Grid& g = psi.grid();
  ComplexField out(g);
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = potential[i] * psi[i];
  for (int a = 0; a < g.dims(); ++a) {
    const Axis& ax = g.axis(a);
    const double hop = hbar * hbar / (2.0 * m * ax.dx * ax.dx);
    const std::size_t st = g.stride(a);
    for (std::size_t s = 0; s < g.size(); ++s) {
      const int i = static_cast<int>((s / st) % static_cast<std::size_t>(ax.n));
      // forward link s -> s + e_a
      for (int dir : {+1, -1}) {
        int j = i + dir;
        bool ghost = false;
        if (j < 0 || j >= ax.n) {
          if (ax.bc == Boundary::periodic) j = (j + ax.n) % ax.n;
          else if (ax.bc == Boundary::fixed_value) ghost = true;
          else continue;  // zero-normal wall: no link
        }
        if (ghost) {
          out[s] += hop * psi[s];
          continue;
        }
        const std::size_t t = s + (static_cast<std::ptrdiff_t>(j) - i) * static_cast<std::ptrdiff_t>(st);
        double phase = 0.0;
        if (v) phase = (m / hbar) * 0.5 * ((*v)[a][s] + (*v)[a][t]) * ax.dx * dir;
        out[s] += hop * (psi[s] - std::polar(1.0, -phase) * psi[t]);
      }
    }
  }
  return out;
}

namespace {

double norm2(const ComplexField& f) {
  double s = 0.0;
  for (const auto& z : f.values()) s += std::norm(z);
  return s * f.grid().cell_volume();
}

struct InnerSolve {
  ComplexField psi;
  double mu = 0.0, energy = 0.0, residual = 0.0;
  long steps = 0;
};

InnerSolve gradient_flow(ComplexField psi, const ScalarField& P, double V0, const VectorField* v, double N,
                         const GpeOptions& opt, double dtau, std::vector<double>& history) {
  const double dV = psi.grid().cell_volume();
  auto rescale = [&](ComplexField& f) {
    const double s = std::sqrt(N / norm2(f));
    for (auto& z : f.values()) z *= s;
  };
  rescale(psi);
  InnerSolve r;
  for (long step = 0;; ++step) {
    ComplexField lin = gpe_linear_apply(psi, P, v, opt.m, opt.hbar);
    double e = 0.0, mu = 0.0;
    for (std::size_t i = 0; i < psi.size(); ++i) {
      const double rho = std::norm(psi[i]);
      const double kin_pot = std::real(std::conj(psi[i]) * lin[i]);
      e += kin_pot + 0.5 * V0 * rho * rho;
      mu += kin_pot + V0 * rho * rho;
      lin[i] += V0 * rho * psi[i];
    }
    e *= dV / N;
    mu *= dV / N;
    history.push_back(e);
    double res = 0.0, gn = 0.0;
    for (std::size_t i = 0; i < psi.size(); ++i) {
      res += std::norm(lin[i] - mu * psi[i]);
      gn += std::norm(lin[i]);
    }
    res = std::sqrt(res / std::max(gn, 1e-300));
    r.mu = mu;
    r.energy = e;
    r.residual = res;
    r.steps = step;
    if (res < opt.tol) break;
    if (step >= opt.max_steps) {
      throw ConvergenceError("imaginary-time GPE did not converge in " + std::to_string(opt.max_steps) +
                                 " steps (residual " + fmt(res) + ")",
                             res);
    }
    for (std::size_t i = 0; i < psi.size(); ++i) psi[i] -= (dtau / opt.hbar) * (lin[i] - mu * psi[i]);
    rescale(psi);
    for (const auto& z : psi.values()) {
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
        throw NumericError("imaginary-time GPE produced a non-finite field; reduce dtau");
      }
    }
  }
  r.psi = std::move(psi);
  return r;
}

}  // namespace

GpeResult solve_gpe_imaginary_time(const Grid& g, const ScalarField& V_ext, double V0, const VectorField* v,
                                   double N_target, const GpeOptions& opt, const ScalarField* n_H) {
  if (!(N_target > 0.0)) throw PreconditionError("GPE needs N_target > 0");
  if (!V_ext.grid().same_space(g)) throw GridError("V_ext lives on a different grid");
  if (g.has_tau()) throw GridError("GPE ground state is solved on a spatial grid");
  const double bound = gpe_stability_bound(g, opt.m, opt.hbar);
  if (opt.dtau > bound) {
    throw PreconditionError("dtau " + fmt(opt.dtau) + " exceeds the explicit stability bound " + fmt(bound));
  }

  GpeResult out;
  ScalarField nH = n_H ? *n_H : ScalarField(g, 0.0);
  if (opt.self_consistent && !n_H) {
    nH = unmask(thomas_fermi_density(opt.mu_H, V_ext, V0, ScalarField(g, 0.0), opt.m), 0.0);
  }

  // Initial guess decays where the potential is high.
  double vmin = 1e300;
  for (double x : V_ext.values()) vmin = std::min(vmin, opt.m * x);
  ComplexField psi(g);
  for (std::size_t i = 0; i < g.size(); ++i) psi[i] = 1.0 / std::sqrt(1.0 + (opt.m * V_ext[i] - vmin));

  auto potential = [&](const ScalarField& nh) {
    ScalarField P(g);
    for (std::size_t i = 0; i < g.size(); ++i) P[i] = opt.m * V_ext[i] + V0 * nh[i];
    return P;
  };
  auto pick_dtau = [&](const ScalarField& P) {
    if (opt.dtau > 0.0) return opt.dtau;
    double lam = 0.0;
    for (const Axis& a : g.axes()) lam += 2.0 * opt.hbar * opt.hbar / (opt.m * a.dx * a.dx);
    double pmax = 0.0;
    for (double x : P.values()) pmax = std::max(pmax, std::abs(x));
    // V0 |psi|^2 cannot exceed N / dV
    double dens = N_target / (g.cell_volume() * g.size());
    lam += pmax + 8.0 * V0 * dens;
    return std::min(bound, 0.5 * opt.hbar / lam);
  };

  const int outer_max = opt.self_consistent ? opt.max_outer : 1;
  for (int it = 0; it < outer_max; ++it) {
    const ScalarField P = potential(nH);
    InnerSolve s = gradient_flow(psi, P, V0, v, N_target, opt, pick_dtau(P), out.energy_history);
    psi = s.psi;
    out.mu = s.mu;
    out.energy = s.energy;
    out.residual = s.residual;
    out.steps += s.steps;
    out.outer_iterations = it + 1;
    if (!opt.self_consistent) break;

    ScalarField nL(g);
    for (std::size_t i = 0; i < g.size(); ++i) nL[i] = std::norm(psi[i]);
    ScalarField target = thomas_fermi_density(opt.mu_H, V_ext, V0, nL, opt.m);
    for (double& x : target.values()) {
      if (std::isnan(x)) {
        x = 0.0;
        ++out.clamped;
      }
    }
    const double change = sup_diff(target, nH);
    out.outer_changes.push_back(change);
    for (std::size_t i = 0; i < g.size(); ++i) nH[i] = (1.0 - opt.damping) * nH[i] + opt.damping * target[i];
    if (change < opt.outer_tol * std::max(1.0, max_abs(nH))) break;
    if (it + 1 == outer_max) {
      throw ConvergenceError("self-consistent n_H loop did not settle in " + std::to_string(outer_max) +
                                 " iterations (last change " + fmt(change) + ")",
                             change);
    }
  }

  out.psi = psi;
  out.n = ScalarField(g);
  out.theta = ScalarField(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    out.n[i] = std::norm(psi[i]);
    out.theta[i] = opt.hbar * std::arg(psi[i]);
  }
  out.n_H = nH;
  return out;
}

ScalarField thomas_fermi_density(double mu, const ScalarField& V_ext, double V0, const ScalarField& n_L0, double m) {
  V_ext.check_same(n_L0);
  ScalarField n(V_ext.grid());
  for (std::size_t i = 0; i < n.size(); ++i) {
    const double x = (mu - m * V_ext[i] - V0 * n_L0[i]) / (2.0 * V0);
    n[i] = x < 0.0 ? kMasked : x;
  }
  return n;
}

ScalarField thomas_fermi_conventional(double mu, const ScalarField& V_ext, double V0, double m) {
  ScalarField n(V_ext.grid());
  for (std::size_t i = 0; i < n.size(); ++i) n[i] = std::max(0.0, (mu - m * V_ext[i]) / V0);
  return n;
}

// ---------------------------------------------------------------- phases

ComplexField vortex_wavefunction(int n, double A, const Grid& g) {
  require_2d(g, "vortex_wavefunction");
  ComplexField f(g);
  const double core = std::abs(n);
  for (std::size_t s = 0; s < g.size(); ++s) {
    const double x = g.coord(0, s), y = g.coord(1, s);
    const double r = std::hypot(x, y);
    if (r <= core) {
      f[s] = std::complex<double>(kMasked, kMasked);
      continue;
    }
    f[s] = std::polar(A * std::sqrt(1.0 - double(n) * n / (r * r)), n * std::atan2(y, x));
  }
  return f;
}

VectorField phase_gradient(const ComplexField& psi) {
  ScalarField th(psi.grid());
  for (std::size_t i = 0; i < psi.size(); ++i) th[i] = psi.masked(i) ? kMasked : std::arg(psi[i]);
  return gradient_wrapped(th, 2.0 * kPi);
}

double loop_phase_winding(const ComplexField& psi, double cx, double cy, double radius, int samples) {
  const Grid& g = psi.grid();
  require_2d(g, "loop_phase_winding");
  const Axis &ax = g.axis(0), &ay = g.axis(1);
  auto sample = [&](double x, double y) {
    const double fx = (x - ax.origin) / ax.dx, fy = (y - ay.origin) / ay.dx;
    const int i = static_cast<int>(std::floor(fx)), j = static_cast<int>(std::floor(fy));
    if (i < 0 || j < 0 || i + 1 >= ax.n || j + 1 >= ay.n) throw GridError("winding loop leaves the grid");
    const double tx = fx - i, ty = fy - j;
    auto at = [&](int a, int b) { return psi[g.flatten({a, b, 0})]; };
    return (1 - tx) * (1 - ty) * at(i, j) + tx * (1 - ty) * at(i + 1, j) + (1 - tx) * ty * at(i, j + 1) +
           tx * ty * at(i + 1, j + 1);
  };
  double total = 0.0;
  double prev = std::arg(sample(cx + radius, cy));
  for (int k = 1; k <= samples; ++k) {
    const double t = 2.0 * kPi * k / samples;
    const double cur = std::arg(sample(cx + radius * std::cos(t), cy + radius * std::sin(t)));
    total += wrap_to(cur - prev, 2.0 * kPi);
    prev = cur;
  }
  return total;
}

double vortnovort_value(double w, double x1, double x2) {
  const double w2 = w * w, r2 = x1 * x1 + x2 * x2;
  const double num = 2.0 * w2 * (r2 - 1.0) * x1 * x2;
  const double den = (1.0 - w2) * x1 * x1 + (1.0 + w2) * x2 * x2 + w2 * (x1 * x1 * x1 * x1 - x2 * x2 * x2 * x2);
  return 0.5 * std::atan2(num, den);
}

namespace {

// Builds theta = raw / 2 from a raw arctangent field and flags both cells of
// every neighbouring pair whose raw values straddle the branch cut.
PhaseField half_angle_field(const Grid& g, auto raw_at) {
  require_2d(g, "phase field");
  PhaseField p;
  p.theta = ScalarField(g);
  p.singular.assign(g.size(), 0);
  p.core.assign(g.size(), 0);
  std::vector<double> raw(g.size());
  for (std::size_t s = 0; s < g.size(); ++s) {
    const double x = g.coord(0, s), y = g.coord(1, s);
    raw[s] = raw_at(x, y);
    // cells on the unit circle count as core whichever way the coordinates round
    if (std::hypot(x, y) <= 1.0 + 1e-9) {
      p.core[s] = 1;
      p.theta[s] = kMasked;
    } else {
      p.theta[s] = 0.5 * raw[s];
    }
  }
  for (int a = 0; a < 2; ++a) {
    const std::size_t st = g.stride(a);
    for (std::size_t s = 0; s < g.size(); ++s) {
      const int i = static_cast<int>((s / st) % static_cast<std::size_t>(g.axis(a).n));
      if (i + 1 >= g.axis(a).n) continue;
      const std::size_t t = s + st;
      if (p.core[s] || p.core[t]) continue;
      if (std::abs(raw[t] - raw[s]) > kPi) p.singular[s] = p.singular[t] = 1;
    }
  }
  return p;
}

}  // namespace

PhaseField vortnovort_phase(double w, const Grid& g) {
  return half_angle_field(g, [w](double x, double y) { return 2.0 * vortnovort_value(w, x, y); });
}

PhaseField superposition_phase(double w, const Grid& g) {
  return half_angle_field(g, [w](double x, double y) {
    const double r2 = x * x + y * y;
    const std::complex<double> phi0_sq = std::polar(1.0 - 1.0 / r2, 2.0 * std::atan2(y, x));
    return std::arg(phi0_sq + w * w);
  });
}

ScalarField phase_match(const ScalarField& theta_L0, int k, double hbar) {
  ScalarField out = theta_L0;
  const double shift = (2.0 * k + 1.0) * kPi * hbar / 2.0;
  for (double& x : out.values()) x += shift;
  return out;
}

// ---------------------------------------------------------------- validity

bool ValidityReport::all_pass() const {
  return std::all_of(rows.begin(), rows.end(), [](const CheckRow& r) { return r.pass; });
}

const CheckRow* ValidityReport::find(const std::string& name) const {
  for (const auto& r : rows)
    if (r.check == name) return &r;
  return nullptr;
}

ScalarField quantum_pressure_ratio(const ScalarField& n, double V0, double m, double hbar) {
  const VectorField gn = gradient(n);
  ScalarField r(n.grid());
  for (std::size_t i = 0; i < n.size(); ++i) {
    const double qp = hbar * hbar * gn.norm2_at(i) / (8.0 * m * n[i]);
    r[i] = qp / (0.5 * V0 * n[i] * n[i]);
  }
  return r;
}

TemperatureCheck temperature_bound(const Background& bg, double kT, double threshold) {
  double mn = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < bg.grid.size(); ++i) {
    if (bg.masked(i)) continue;
    const double p = bg.n_H0[i] * bg.n_L0[i];
    if (!std::isnan(p)) mn = std::min(mn, p);
  }
  TemperatureCheck t;
  const double scale = bg.V0 * mn;
  if (!(mn > 0.0) || !std::isfinite(scale)) {
    t.ratio = std::numeric_limits<double>::infinity();
    t.valid = false;
    return t;
  }
  t.ratio = kT / scale;
  t.valid = t.ratio < threshold;
  return t;
}

ValidityReport validate_assumptions(const Background& bg, const ValidityOptions& opt) {
  ValidityReport rep;
  const Grid& g = bg.grid;
  auto masked_copy = [&](const ScalarField& f) {
    ScalarField c = f;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (bg.masked(i)) c[i] = kMasked;
    return c;
  };
  auto add = [&](std::string name, double residual, double tol) {
    rep.rows.push_back(CheckRow{std::move(name), residual, tol, residual <= tol});
  };

  // 1: div v relative to the size of the velocity gradients
  {
    double div = 0.0, scale = 0.0;
    bool any = false;
    for (int a = 0; a < g.dims(); ++a) any = any || max_abs(bg.v[a]) > 0.0;
    if (any && g.dims() == bg.v.components()) {
      std::vector<ScalarField> comps;
      for (int a = 0; a < g.dims(); ++a) comps.push_back(masked_copy(bg.v[a]));
      const VectorField vm(std::move(comps));
      div = max_abs(divergence(vm));
      for (int a = 0; a < g.dims(); ++a)
        for (int b = 0; b < g.dims(); ++b) scale = std::max(scale, max_abs(derivative(vm[a], b)));
      if (scale > 0.0) div /= scale;
    }
    add("assumption1_div_v", div, opt.tolerance);
  }
  // 2: harmonic theta_H0, laplacian relative to the unmixed second derivatives
  if (std::all_of(g.axes().begin(), g.axes().end(), [](const Axis& a) { return a.n >= 4; })) {
    const VectorField gt = bg.phase_gradient();
    std::vector<ScalarField> comps;
    for (int a = 0; a < g.dims(); ++a) comps.push_back(masked_copy(gt[a]));
    const VectorField gm(std::move(comps));
    const ScalarField lap = divergence(gm);
    double num = 0.0, den = 0.0;
    std::vector<ScalarField> second;
    for (int a = 0; a < g.dims(); ++a) {
      DerivativeOptions o;
      o.odd_mirror = true;
      second.push_back(derivative(gm[a], a, o));
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (std::isnan(lap[i])) continue;
      num = std::max(num, std::abs(lap[i]));
      double s = 0.0;
      for (const auto& d : second) s += std::abs(d[i]);
      den = std::max(den, s);
    }
    add("assumption2_harmonic", den > 0.0 ? num / den : num, opt.tolerance);
  }
  // 3: quantum pressure against the interaction energy density, bulk cells
  {
    const ScalarField n = masked_copy(bg.n_H0);
    const double nmax = max_abs(n);
    const ScalarField r = quantum_pressure_ratio(n, bg.V0, bg.m, bg.hbar);
    double worst = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (std::isnan(r[i]) || n[i] < opt.bulk_fraction * nmax) continue;
      worst = std::max(worst, r[i]);
    }
    add("assumption3_quantum_pressure", worst, opt.tolerance);
  }
  // 3': two-loop integrand against the quadratic action density
  if (std::all_of(g.axes().begin(), g.axes().end(), [](const Axis& a) { return a.n >= 4; })) {
    const double d = opt.fluctuation_amplitude;
    const ScalarField n0 = masked_copy(bg.n_H0);
    double nbar = 0.0;
    std::size_t cnt = 0;
    for (double x : n0.values())
      if (!std::isnan(x)) {
        nbar += x;
        ++cnt;
      }
    nbar = cnt ? nbar / cnt : 0.0;
    ScalarField th(g), nd(g);
    for (std::size_t s = 0; s < g.size(); ++s) {
      const double x = g.coord(0, s);
      th[s] = d * bg.hbar * std::sin(x);
      nd[s] = d * nbar * std::cos(x);
    }
    const VectorField gth = gradient(th);
    const ScalarField lth = laplacian(th);
    double two = 0.0, quad = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (std::isnan(n0[i])) continue;
      const double g2 = gth.norm2_at(i);
      two += std::abs(nd[i] * (g2 - th[i] * lth[i]) / (6.0 * bg.m));
      quad += std::abs(0.5 * (bg.V0 * nd[i] * nd[i] + n0[i] * g2 / bg.m));
    }
    add("assumption3p_two_loop", quad > 0.0 ? two / quad : 0.0, opt.tolerance);
  }
  {
    const TemperatureCheck t = temperature_bound(bg, opt.kT, opt.temperature_ratio);
    rep.rows.push_back(CheckRow{"temperature_bound", t.ratio, opt.temperature_ratio, t.valid});
  }
  auto fam = bg.meta.find("family");
  if (fam != bg.meta.end() && (fam->second == "thomas_fermi" || fam->second == "gpe")) {
    rep.notes.push_back("n_H0 follows the Thomas-Fermi relation with the 1/(2 V0) factor; the single-component "
                        "profile (mu - m V_ext)/V0 is larger by a factor of about 2");
  }
  return rep;
}

void write_report_csv(std::ostream& os, const ValidityReport& r) {
  os << "check,residual,tolerance,pass\n";
  for (const auto& row : r.rows) {
    os << row.check << ',' << fmt(row.residual) << ',' << fmt(row.tolerance) << ',' << (row.pass ? "true" : "false")
       << '\n';
  }
}

// ---------------------------------------------------------------- bundles

void write_background_bundle(const std::string& dir, const Background& bg) {
  fs::create_directories(dir);
  const fs::path d(dir);
  write_dump((d / "n_L0.dump").string(), bg.n_L0);
  write_dump((d / "theta_L0.dump").string(), bg.theta_L0);
  write_dump((d / "n_H0.dump").string(), bg.n_H0);
  write_dump((d / "theta_H0.dump").string(), bg.theta_H0);
  write_dump((d / "V_ext.dump").string(), bg.V_ext);
  for (int a = 0; a < bg.v.components(); ++a) write_dump((d / ("v" + std::to_string(a) + ".dump")).string(), bg.v[a]);
  ScalarField mk(bg.grid, 0.0);
  for (std::size_t i = 0; i < bg.grid.size(); ++i) mk[i] = bg.masked(i) ? 1.0 : 0.0;
  write_dump((d / "mask.dump").string(), mk);

  std::map<std::string, std::string> kv = bg.meta;
  kv["V0"] = fmt(bg.V0);
  kv["mu"] = fmt(bg.mu);
  kv["m"] = fmt(bg.m);
  kv["hbar"] = fmt(bg.hbar);
  kv["phase_period"] = fmt(bg.phase_period);
  std::ofstream os(d / "manifest.txt");
  for (const auto& [k, v] : kv) os << k << '=' << v << '\n';
}

Background read_background_bundle(const std::string& dir) {
  const fs::path d(dir);
  std::ifstream is(d / "manifest.txt");
  if (!is) throw InputError("no manifest.txt in '" + dir + "'");
  Background bg;
  std::string line;
  while (std::getline(is, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    bg.meta[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto take = [&](const char* key, double& dst) {
    auto it = bg.meta.find(key);
    if (it == bg.meta.end()) throw InputError(std::string("manifest lacks '") + key + "'");
    dst = std::stod(it->second);
    bg.meta.erase(it);
  };
  take("V0", bg.V0);
  take("mu", bg.mu);
  take("m", bg.m);
  take("hbar", bg.hbar);
  take("phase_period", bg.phase_period);
  bg.n_L0 = read_dump((d / "n_L0.dump").string());
  bg.grid = bg.n_L0.grid();
  bg.theta_L0 = read_dump((d / "theta_L0.dump").string());
  bg.n_H0 = read_dump((d / "n_H0.dump").string());
  bg.theta_H0 = read_dump((d / "theta_H0.dump").string());
  bg.V_ext = read_dump((d / "V_ext.dump").string());
  std::vector<ScalarField> comps;
  for (int a = 0; a < bg.grid.dims(); ++a) comps.push_back(read_dump((d / ("v" + std::to_string(a) + ".dump")).string()));
  bg.v = VectorField(std::move(comps));
  const ScalarField mk = read_dump((d / "mask.dump").string());
  bg.mask.assign(bg.grid.size(), 0);
  for (std::size_t i = 0; i < mk.size(); ++i) bg.mask[i] = mk[i] != 0.0 ? 1 : 0;
  return bg;
}

}  // namespace sgacs

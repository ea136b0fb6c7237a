#include "sgacs/sgsolver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <random>

namespace sgacs {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kSpongeCells = 8;

std::vector<ScalarField> grad_theta(const ScalarField& th, std::span<const double> jump) {
  std::vector<ScalarField> g;
  for (int a = 0; a < th.grid().dims(); ++a) {
    DerivativeOptions o;
    o.jump = a < static_cast<int>(jump.size()) ? jump[a] : 0.0;
    g.push_back(derivative(th, a, o));
  }
  return g;
}

ScalarField div_flux(const std::vector<ScalarField>& flux) {
  DerivativeOptions odd;
  odd.odd_mirror = true;
  ScalarField out = derivative(flux[0], 0, odd);
  for (std::size_t a = 1; a < flux.size(); ++a) out += derivative(flux[a], static_cast<int>(a), odd);
  return out;
}

bool has_flow(const SgParams& p) {
  for (int a = 0; a < p.u.components(); ++a)
    if (max_abs(p.u[a]) > 0.0) return true;
  return false;
}

// D.((c^2 I - u u^T) D theta)
ScalarField wave_force(const SgParams& p, const ScalarField& th, std::span<const double> jump) {
  const auto g = grad_theta(th, jump);
  const int d = th.grid().dims();
  std::vector<ScalarField> flux(d, ScalarField(th.grid()));
  for (std::size_t c = 0; c < th.size(); ++c) {
    double ug = 0.0;
    for (int a = 0; a < d; ++a) ug += p.u[a][c] * g[a][c];
    for (int a = 0; a < d; ++a) flux[a][c] = p.cs2[c] * g[a][c] - p.u[a][c] * ug;
  }
  return div_flux(flux);
}

ScalarField mass_force(const SgParams& p, const ScalarField& th) {
  ScalarField f(th.grid());
  for (std::size_t c = 0; c < th.size(); ++c) f[c] = -p.V0 * p.lambda[c] / p.hbar * std::sin(2.0 * th[c] / p.hbar);
  return f;
}

// u.D pi + D.(u pi)
ScalarField flow_term(const SgParams& p, const ScalarField& pi) {
  const int d = pi.grid().dims();
  ScalarField out(pi.grid(), 0.0);
  std::vector<ScalarField> flux;
  for (int a = 0; a < d; ++a) {
    const ScalarField dp = derivative(pi, a);
    ScalarField f(pi.grid());
    for (std::size_t c = 0; c < pi.size(); ++c) {
      out[c] += p.u[a][c] * dp[c];
      f[c] = p.u[a][c] * pi[c];
    }
    flux.push_back(std::move(f));
  }
  return out + div_flux(flux);
}

std::vector<std::uint8_t> wall_cells(const Grid& g) {
  std::vector<std::uint8_t> w(g.size(), 0);
  for (std::size_t c = 0; c < g.size(); ++c) {
    const Index3 idx = g.unflatten(c);
    for (int a = 0; a < g.dims(); ++a)
      if (g.axis(a).bc == Boundary::fixed_value && (idx[a] == 0 || idx[a] == g.axis(a).n - 1)) w[c] = 1;
  }
  return w;
}

// Solves pi_new = pi_old + h (F + B(w pi_new + (1 - w) pi_old)) - h sigma (pi_new + pi_old)/2.
ScalarField kick(const SgParams& p, const ScalarField& pi_old, const ScalarField& F, double h, double w,
                 bool sponge) {
  const std::size_t n = pi_old.size();
  ScalarField out(pi_old.grid());
  auto update = [&](const ScalarField* b) {
    for (std::size_t c = 0; c < n; ++c) {
      const double s = sponge ? 0.5 * h * p.sponge[c] : 0.0;
      out[c] = (pi_old[c] * (1.0 - s) + h * (F[c] + (b ? (*b)[c] : 0.0))) / (1.0 + s);
    }
  };
  if (!has_flow(p)) {
    update(nullptr);
    return out;
  }
  out = pi_old;
  const double scale = 1.0 + max_abs(pi_old) + h * max_abs(F);
  for (int it = 0; it < 200; ++it) {
    ScalarField mix(pi_old.grid());
    for (std::size_t c = 0; c < n; ++c) mix[c] = w * out[c] + (1.0 - w) * pi_old[c];
    const ScalarField b = flow_term(p, mix);
    const ScalarField prev = out;
    update(&b);
    double change = 0.0;
    for (std::size_t c = 0; c < n; ++c) change = std::max(change, std::abs(out[c] - prev[c]));
    if (change <= 1e-15 * scale) return out;
  }
  throw ConvergenceError("implicit kick did not converge", 0.0);
}

void zero_walls(ScalarField& f, const std::vector<std::uint8_t>& walls) {
  for (std::size_t c = 0; c < f.size(); ++c)
    if (walls[c]) f[c] = 0.0;
}

bool all_finite(const ScalarField& f) {
  for (double v : f.values())
    if (!std::isfinite(v)) return false;
  return true;
}

double free_lagrangian(const SgParams& p, std::span<const double> th, std::span<const double> r,
                       std::span<const double> jump, bool with_mass) {
  const Grid& g = p.grid();
  const ScalarField theta(g, std::vector<double>(th.begin(), th.end()));
  const auto gr = grad_theta(theta, jump);
  const int d = g.dims();
  double sum = 0.0;
  for (std::size_t c = 0; c < g.size(); ++c) {
    double ug = 0.0, g2 = 0.0;
    for (int a = 0; a < d; ++a) {
      ug += p.u[a][c] * gr[a][c];
      g2 += gr[a][c] * gr[a][c];
    }
    const double k = r[c] - ug;
    sum += (k * k - p.cs2[c] * g2) / (2.0 * p.V0);
    if (with_mass) sum -= 0.5 * p.lambda[c] * (1.0 - std::cos(2.0 * th[c] / p.hbar));
  }
  return sum * g.cell_volume();
}

// Discrete Euler-Lagrange residual for a Lagrangian of packed [q, r].
double el_residual(const Functional& L, const std::vector<double>& q, const std::vector<double>& r,
                   const std::vector<double>& acc, int directions, std::uint64_t seed) {
  const std::size_t n = q.size();
  std::vector<double> x(q);
  x.insert(x.end(), r.begin(), r.end());
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto pack = [&](const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> v(a);
    v.insert(v.end(), b.begin(), b.end());
    return v;
  };
  const std::vector<double> zero(n, 0.0);
  double worst = 0.0;
  for (int k = 0; k < directions; ++k) {
    std::vector<double> e(n);
    for (double& v : e) v = u(rng);
    const cplx hrr = functional_hessian_apply(L, x, pack(zero, e), pack(zero, acc)).value;
    const cplx hrq = functional_hessian_apply(L, x, pack(zero, e), pack(r, zero)).value;
    const cplx gq = functional_gradient(L, x, pack(e, zero)).value;
    const double scale = std::abs(hrr) + std::abs(hrq) + std::abs(gq);
    if (scale == 0.0) continue;
    worst = std::max(worst, std::abs(hrr + hrq - gq) / scale);
  }
  return worst;
}

ScalarField sponge_profile(const Grid& g, const ScalarField& cs2) {
  ScalarField s(g, 0.0);
  double dxmin = g.axis(0).dx;
  for (int a = 1; a < g.dims(); ++a) dxmin = std::min(dxmin, g.axis(a).dx);
  const double smax = std::sqrt(max_abs(cs2)) / dxmin;
  for (std::size_t c = 0; c < g.size(); ++c) {
    const Index3 idx = g.unflatten(c);
    for (int a = 0; a < g.dims(); ++a) {
      if (g.axis(a).bc != Boundary::fixed_value) continue;
      const int dist = std::min(idx[a], g.axis(a).n - 1 - idx[a]);
      if (dist < kSpongeCells) {
        const double r = double(kSpongeCells - dist) / kSpongeCells;
        s[c] = std::max(s[c], smax * r * r);
      }
    }
  }
  return s;
}

}  // namespace

SgParams sg_params(const Background& bg, double cfl) {
  SgParams p;
  p.cs2 = bg.cs2();
  p.u = bg.flow();
  p.lambda = ScalarField(bg.grid);
  for (std::size_t c = 0; c < bg.grid.size(); ++c) p.lambda[c] = 2.0 * bg.V0 * bg.n_H0[c] * bg.n_L0[c];
  for (std::size_t c = 0; c < bg.grid.size(); ++c) {
    bool ok = std::isfinite(p.cs2[c]) && p.cs2[c] > 0.0 && std::isfinite(p.lambda[c]);
    for (int a = 0; a < p.u.components(); ++a) ok = ok && std::isfinite(p.u[a][c]);
    if (!ok) throw PreconditionError("sine-Gordon evolution needs an unmasked background with c_s^2 > 0 (cell " +
                                     std::to_string(c) + ")");
  }
  p.V0 = bg.V0;
  p.hbar = bg.hbar;
  p.cfl = cfl;
  p.sponge = sponge_profile(bg.grid, p.cs2);
  return p;
}

SgParams sg_params_uniform(const Grid& g, double cs2, double lambda, double V0, double hbar, double cfl) {
  SgParams p;
  p.cs2 = ScalarField(g, cs2);
  p.u = VectorField(g, g.dims());
  p.lambda = ScalarField(g, lambda);
  p.V0 = V0;
  p.hbar = hbar;
  p.cfl = cfl;
  p.sponge = sponge_profile(g, p.cs2);
  return p;
}

double max_stable_dt(const SgParams& p) {
  const Grid& g = p.grid();
  double dxmin = g.axis(0).dx;
  for (int a = 1; a < g.dims(); ++a) dxmin = std::min(dxmin, g.axis(a).dx);
  double vmax = 0.0;
  for (std::size_t c = 0; c < g.size(); ++c) vmax = std::max(vmax, std::sqrt(p.cs2[c]) + std::sqrt(p.u.norm2_at(c)));
  return p.cfl * dxmin / vmax;
}

ScalarField sg_acceleration(const SgParams& p, const ScalarField& theta, const ScalarField& pi,
                            std::span<const double> jump) {
  ScalarField a = wave_force(p, theta, jump) + mass_force(p, theta);
  if (has_flow(p)) a += flow_term(p, pi);
  for (std::size_t c = 0; c < a.size(); ++c) a[c] -= p.sponge[c] * pi[c];
  return a;
}

void step(SgState& s, const SgParams& p, double dt) {
  if (!(p.cfl > 0.0) || p.cfl > 0.5) throw PreconditionError("CFL number must lie in (0, 0.5]");
  const double lim = max_stable_dt(p);
  if (!(dt > 0.0) || dt > lim * (1.0 + 1e-12)) {
    throw CflError("time step " + std::to_string(dt) + " exceeds the CFL limit " + std::to_string(lim));
  }
  const ScalarField F = wave_force(p, s.theta, s.jump) + mass_force(p, s.theta);
  ScalarField pi = kick(p, s.pi, F, dt, 0.5, true);
  const auto walls = wall_cells(p.grid());
  zero_walls(pi, walls);
  ScalarField th = s.theta;
  for (std::size_t c = 0; c < th.size(); ++c) th[c] += dt * pi[c];
  if (!all_finite(pi) || !all_finite(th)) {
    throw SgBlowUpError("nonfinite field after step " + std::to_string(s.steps + 1) + " at t = " + std::to_string(s.t),
                        s);
  }
  s.theta = std::move(th);
  s.pi = std::move(pi);
  s.t += dt;
  s.dt = dt;
  ++s.steps;
}

ScalarField synchronized_rate(const SgState& s, const SgParams& p) {
  if (s.dt <= 0.0) return s.pi;
  const ScalarField F = wave_force(p, s.theta, s.jump) + mass_force(p, s.theta);
  ScalarField pi = kick(p, s.pi, F, 0.5 * s.dt, 1.0, false);
  zero_walls(pi, wall_cells(p.grid()));
  return pi;
}

namespace {

// Kinetic term pa.pb: the staggered product pi(t - dt/2).pi(t + dt/2) is what
// leapfrog conserves on linear problems.
double energy_terms(const SgParams& p, const ScalarField& theta, const ScalarField& pa, const ScalarField& pb,
                    std::span<const double> jump, bool with_mass) {
  const auto g = grad_theta(theta, jump);
  const int d = theta.grid().dims();
  double sum = 0.0;
  for (std::size_t c = 0; c < theta.size(); ++c) {
    double ug = 0.0, g2 = 0.0;
    for (int a = 0; a < d; ++a) {
      ug += p.u[a][c] * g[a][c];
      g2 += g[a][c] * g[a][c];
    }
    sum += (pa[c] * pb[c] - ug * ug + p.cs2[c] * g2) / (2.0 * p.V0);
    if (with_mass) sum += 0.5 * p.lambda[c] * (1.0 - std::cos(2.0 * theta[c] / p.hbar));
  }
  return sum * theta.grid().cell_volume();
}

}  // namespace

double energy_at(const SgParams& p, const ScalarField& theta, const ScalarField& pi, std::span<const double> jump) {
  return energy_terms(p, theta, pi, pi, jump, true);
}

double energy(const SgState& s, const SgParams& p) {
  if (s.dt <= 0.0) return energy_at(p, s.theta, s.pi, s.jump);
  const ScalarField F = wave_force(p, s.theta, s.jump) + mass_force(p, s.theta);
  ScalarField next = kick(p, s.pi, F, s.dt, 0.5, false);
  zero_walls(next, wall_cells(p.grid()));
  return energy_terms(p, s.theta, s.pi, next, s.jump, true);
}

double charge(const SgState& s, const SgParams& p) {
  const Grid& g = s.theta.grid();
  const Axis& ax = g.axis(0);
  const std::size_t st = g.stride(0), lines = g.size() / ax.n;
  const double j = s.jump.empty() ? 0.0 : s.jump[0];
  double total = 0.0;
  for (std::size_t l = 0; l < lines; ++l) {
    // l enumerates the transverse index; axis 0 is the slowest spatial axis
    const std::size_t base = l;
    double w = 0.0;
    for (int i = 0; i + 1 < ax.n; ++i)
      w += wrap_to(2.0 * (s.theta[base + (i + 1) * st] - s.theta[base + i * st]) / p.hbar, 2.0 * kPi);
    if (ax.bc == Boundary::periodic)
      w += wrap_to(2.0 * (s.theta[base] + j - s.theta[base + (ax.n - 1) * st]) / p.hbar, 2.0 * kPi);
    total += w / (2.0 * kPi);
  }
  return total / static_cast<double>(lines);
}

void reverse(SgState& s, const SgParams& p) {
  if (s.dt <= 0.0) throw PreconditionError("reverse needs a state that has been stepped");
  const ScalarField F = wave_force(p, s.theta, s.jump) + mass_force(p, s.theta);
  ScalarField pi = kick(p, s.pi, F, s.dt, 0.5, true);
  zero_walls(pi, wall_cells(p.grid()));
  for (double& v : pi.values()) v = -v;
  s.pi = std::move(pi);
}

namespace {

struct KinkShape {
  double mu, gamma;
};

KinkShape kink_shape(const SgParams& p, double velocity) {
  const double c2 = p.cs2[0], lam = p.lambda[0];
  for (std::size_t c = 0; c < p.cs2.size(); ++c) {
    if (std::abs(p.cs2[c] - c2) > 1e-12 * c2 || std::abs(p.lambda[c] - lam) > 1e-12 * std::abs(lam))
      throw PreconditionError("kink initial condition needs uniform c_s^2 and lambda");
    if (p.u.norm2_at(c) > 0.0) throw PreconditionError("kink initial condition needs u = 0");
  }
  if (!(lam > 0.0)) throw PreconditionError("kink needs a positive coupling lambda");
  if (std::abs(velocity) >= std::sqrt(c2)) throw PreconditionError("kink velocity must be below c_s");
  return {std::sqrt(p.mass2() / c2), 1.0 / std::sqrt(1.0 - velocity * velocity / c2)};
}

// phi and dphi/dt at time t.
void kink_fields(const SgParams& p, double velocity, double x0, double t, ScalarField& phi, ScalarField& phit) {
  const auto [mu, gamma] = kink_shape(p, velocity);
  const Grid& g = p.grid();
  const Axis& ax = g.axis(0);
  const bool periodic = ax.bc == Boundary::periodic;
  const double L = ax.length();
  phi = ScalarField(g);
  phit = ScalarField(g);
  for (std::size_t c = 0; c < g.size(); ++c) {
    const double s = g.coord(0, c) - x0 - velocity * t;
    const double n = periodic ? std::floor((s + 0.5 * L) / L) : 0.0;
    const double xi = gamma * mu * (s - n * L);
    phi[c] = 4.0 * std::atan(std::exp(xi)) + 2.0 * kPi * n;
    phit[c] = -velocity * gamma * mu * 2.0 / std::cosh(xi);
  }
}

}  // namespace

ScalarField kink_profile(const SgParams& p, double velocity, double x0, double t) {
  ScalarField phi, phit;
  kink_fields(p, velocity, x0, t, phi, phit);
  return phi;
}

SgState kink_initial_condition(const SgParams& p, double velocity, double x0, double dt) {
  ScalarField phi, phit, dummy;
  kink_fields(p, velocity, x0, 0.0, phi, dummy);
  kink_fields(p, velocity, x0, -0.5 * dt, dummy, phit);
  SgState s;
  s.theta = phi * (0.5 * p.hbar);
  s.pi = phit * (0.5 * p.hbar);
  s.jump.assign(p.grid().dims(), 0.0);
  if (p.grid().axis(0).bc == Boundary::periodic) s.jump[0] = kPi * p.hbar;
  s.dt = dt;
  return s;
}

double kink_shape_error(const SgState& s, const SgParams& p, double velocity, double x0) {
  const ScalarField ex = kink_profile(p, velocity, x0, s.t);
  double sum = 0.0;
  for (std::size_t c = 0; c < ex.size(); ++c) {
    const double e = wrap_to(2.0 * s.theta[c] / p.hbar - ex[c], 2.0 * kPi);
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(ex.size())) / (2.0 * kPi);
}

double standing_wave_omega(const SgParams& p, int mode) {
  const Axis& ax = p.grid().axis(0);
  const double k = 2.0 * kPi * mode / ax.length();
  const double keff = std::sin(k * ax.dx) / ax.dx;
  return std::sqrt(p.cs2[0] * keff * keff + p.mass2());
}

SgState standing_wave_initial_condition(const SgParams& p, int mode, double amplitude, double dt) {
  const Grid& g = p.grid();
  const Axis& ax = g.axis(0);
  const double k = 2.0 * kPi * mode / ax.length();
  const double w = standing_wave_omega(p, mode);
  SgState s;
  s.theta = ScalarField(g);
  s.pi = ScalarField(g);
  for (std::size_t c = 0; c < g.size(); ++c) {
    const double cx = std::cos(k * (g.coord(0, c) - ax.origin));
    s.theta[c] = amplitude * cx;
    s.pi[c] = amplitude * cx * w * std::sin(0.5 * w * dt);
  }
  s.jump.assign(g.dims(), 0.0);
  s.dt = dt;
  return s;
}

Functional sg_lagrangian(const SgParams& p, std::vector<double> jump) {
  return [&p, jump](std::span<const double> x) {
    const std::size_t n = x.size() / 2;
    return cplx(free_lagrangian(p, x.subspan(0, n), x.subspan(n), jump, true), 0.0);
  };
}

double sg_consistency_residual(const SgParams& p, const ScalarField& theta, const ScalarField& rate, int directions,
                               std::uint64_t seed) {
  std::vector<double> jump(theta.grid().dims(), 0.0);
  const ScalarField a = sg_acceleration(p, theta, rate, jump);
  return el_residual(sg_lagrangian(p, jump), theta.data(), rate.data(), a.data(), directions, seed);
}

// ---- planes ----

double planes_potential(double amplitude, double gamma0, double gamma) {
  return amplitude * (-std::cos(gamma0) * (1.0 - std::cos(gamma)) + std::sin(gamma0) * (gamma - std::sin(gamma)));
}

namespace {

// dU/dgamma per cell
ScalarField planes_dU(const PlanesParams& p, const ScalarField& tl, const ScalarField& tr) {
  ScalarField f(tl.grid());
  const double hb = p.left.hbar;
  for (std::size_t c = 0; c < f.size(); ++c) {
    const double g = (tl[c] - tr[c]) / hb;
    f[c] = p.amplitude[c] * (-std::cos(p.gamma0) * std::sin(g) + std::sin(p.gamma0) * (1.0 - std::cos(g)));
  }
  return f;
}

void planes_forces(const PlanesParams& p, const PlanesState& s, ScalarField& fl, ScalarField& fr) {
  const ScalarField dU = planes_dU(p, s.left.theta, s.right.theta);
  fl = wave_force(p.left, s.left.theta, s.left.jump);
  fr = wave_force(p.right, s.right.theta, s.right.jump);
  const double hb = p.left.hbar;
  for (std::size_t c = 0; c < fl.size(); ++c) {
    fl[c] -= p.left.V0 * dU[c] / hb;
    fr[c] += p.right.V0 * dU[c] / hb;
  }
}

double coupling_energy(const PlanesParams& p, const ScalarField& tl, const ScalarField& tr) {
  double sum = 0.0;
  for (std::size_t c = 0; c < tl.size(); ++c)
    sum += planes_potential(p.amplitude[c], p.gamma0, (tl[c] - tr[c]) / p.left.hbar);
  return sum * tl.grid().cell_volume();
}

}  // namespace

void planes_accelerations(const PlanesParams& p, const PlanesState& s, const ScalarField& pi_left,
                          const ScalarField& pi_right, ScalarField& acc_left, ScalarField& acc_right) {
  planes_forces(p, s, acc_left, acc_right);
  if (has_flow(p.left)) acc_left += flow_term(p.left, pi_left);
  if (has_flow(p.right)) acc_right += flow_term(p.right, pi_right);
  for (std::size_t c = 0; c < acc_left.size(); ++c) {
    acc_left[c] -= p.left.sponge[c] * pi_left[c];
    acc_right[c] -= p.right.sponge[c] * pi_right[c];
  }
}

void planes_step(PlanesState& s, const PlanesParams& p, double dt) {
  if (!s.left.theta.grid().same_space(s.right.theta.grid())) throw GridError("planes must share one grid");
  const double lim = std::min(max_stable_dt(p.left), max_stable_dt(p.right));
  if (!(dt > 0.0) || dt > lim * (1.0 + 1e-12)) {
    throw CflError("time step " + std::to_string(dt) + " exceeds the CFL limit " + std::to_string(lim));
  }
  ScalarField fl, fr;
  planes_forces(p, s, fl, fr);
  ScalarField pl = kick(p.left, s.left.pi, fl, dt, 0.5, true);
  ScalarField pr = kick(p.right, s.right.pi, fr, dt, 0.5, true);
  const auto walls = wall_cells(p.left.grid());
  zero_walls(pl, walls);
  zero_walls(pr, walls);
  ScalarField tl = s.left.theta, tr = s.right.theta;
  for (std::size_t c = 0; c < tl.size(); ++c) {
    tl[c] += dt * pl[c];
    tr[c] += dt * pr[c];
  }
  if (!all_finite(tl) || !all_finite(tr) || !all_finite(pl) || !all_finite(pr)) {
    throw SgBlowUpError("nonfinite plane field after step " + std::to_string(s.left.steps + 1), s.left);
  }
  for (auto* st : {&s.left, &s.right}) {
    st->t += dt;
    st->dt = dt;
    ++st->steps;
  }
  s.left.theta = std::move(tl);
  s.right.theta = std::move(tr);
  s.left.pi = std::move(pl);
  s.right.pi = std::move(pr);
}

double plane_energy(const SgState& s, const SgParams& p) {
  if (s.dt <= 0.0) return energy_terms(p, s.theta, s.pi, s.pi, s.jump, false);
  ScalarField next = kick(p, s.pi, wave_force(p, s.theta, s.jump), s.dt, 0.5, false);
  zero_walls(next, wall_cells(p.grid()));
  return energy_terms(p, s.theta, s.pi, next, s.jump, false);
}

double planes_energy(const PlanesState& s, const PlanesParams& p) {
  ScalarField nl = s.left.pi, nr = s.right.pi;
  if (s.left.dt > 0.0) {
    ScalarField fl, fr;
    planes_forces(p, s, fl, fr);
    nl = kick(p.left, s.left.pi, fl, s.left.dt, 0.5, false);
    nr = kick(p.right, s.right.pi, fr, s.right.dt, 0.5, false);
    const auto walls = wall_cells(p.left.grid());
    zero_walls(nl, walls);
    zero_walls(nr, walls);
  }
  return energy_terms(p.left, s.left.theta, s.left.pi, nl, s.left.jump, false) +
         energy_terms(p.right, s.right.theta, s.right.pi, nr, s.right.jump, false) +
         coupling_energy(p, s.left.theta, s.right.theta);
}

double planes_gamma_omega2(const PlanesParams& p) {
  const double hb = p.left.hbar;
  return (p.left.V0 + p.right.V0) * p.amplitude[0] / (hb * hb);
}

Functional planes_lagrangian(const PlanesParams& p) {
  return [&p](std::span<const double> x) {
    const std::size_t n = x.size() / 4;
    const std::vector<double> none;
    double L = free_lagrangian(p.left, x.subspan(0, n), x.subspan(2 * n, n), none, false) +
               free_lagrangian(p.right, x.subspan(n, n), x.subspan(3 * n, n), none, false);
    const Grid& g = p.left.grid();
    const ScalarField tl(g, std::vector<double>(x.begin(), x.begin() + n));
    const ScalarField tr(g, std::vector<double>(x.begin() + n, x.begin() + 2 * n));
    return cplx(L - coupling_energy(p, tl, tr), 0.0);
  };
}

double planes_consistency_residual(const PlanesParams& p, const PlanesState& s, int directions, std::uint64_t seed) {
  ScalarField al, ar;
  planes_accelerations(p, s, s.left.pi, s.right.pi, al, ar);
  auto cat = [](const ScalarField& a, const ScalarField& b) {
    std::vector<double> v(a.data());
    v.insert(v.end(), b.data().begin(), b.data().end());
    return v;
  };
  return el_residual(planes_lagrangian(p), cat(s.left.theta, s.right.theta), cat(s.left.pi, s.right.pi), cat(al, ar),
                     directions, seed);
}

void write_time_series(std::ostream& os, const std::vector<SeriesRow>& rows) {
  os << "t,energy,charge,min,max\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", r.t, r.energy, r.charge, r.min, r.max);
    os << buf;
  }
}

}  // namespace sgacs

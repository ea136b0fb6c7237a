#include "sgacs/action.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace sgacs {

namespace {

void check_grids(const Grid& g, const Background& bg) {
  if (!g.has_tau()) throw GridError("action needs a grid with a tau axis");
  if (!g.same_space(bg.grid)) throw GridError("configuration and background live on different spatial grids");
}

double linf(std::span<const double> x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

std::vector<double> shifted(std::span<const double> x, std::initializer_list<std::pair<double, std::span<const double>>> terms) {
  std::vector<double> y(x.begin(), x.end());
  for (const auto& [c, d] : terms) {
    if (d.size() != y.size()) throw SizeError("direction size does not match the configuration");
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += c * d[i];
  }
  return y;
}

cplx eval(const Functional& S, const std::vector<double>& x) {
  const cplx v = S(x);
  if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw NumericError("action evaluated to a nonfinite value");
  return v;
}

// Spatial gradient of theta honouring jumps and the background phase period.
std::vector<ScalarField> theta_gradient(const ScalarField& theta, std::span<const double> jumps, double period) {
  std::vector<ScalarField> out;
  for (int a = 0; a < theta.grid().dims(); ++a) {
    DerivativeOptions o;
    o.jump = a < static_cast<int>(jumps.size()) ? jumps[a] : 0.0;
    o.wrap_period = period;
    out.push_back(derivative(theta, a, o));
  }
  return out;
}

std::vector<ScalarField> plain_gradient(const ScalarField& f) {
  std::vector<ScalarField> out;
  for (int a = 0; a < f.grid().dims(); ++a) out.push_back(derivative(f, a));
  return out;
}

bool skip(const Background& bg, std::size_t s) { return bg.masked(s); }

}  // namespace

std::vector<double> FieldConfiguration::pack() const {
  std::vector<double> x(n_H.data());
  x.insert(x.end(), theta_H.data().begin(), theta_H.data().end());
  return x;
}

void FieldConfiguration::unpack(std::span<const double> x) {
  const std::size_t n = n_H.size();
  if (x.size() != 2 * n) throw SizeError("packed configuration has the wrong length");
  std::copy(x.begin(), x.begin() + n, n_H.values().begin());
  std::copy(x.begin() + n, x.end(), theta_H.values().begin());
}

FieldConfiguration background_configuration(const Background& bg, const TauAxis& tau) {
  const Grid g = bg.grid.with_tau(tau);
  return {broadcast_tau(bg.n_H0, g), broadcast_tau(bg.theta_H0, g), {}};
}

cplx action_SH(const FieldConfiguration& cfg, const Background& bg, const ActionOptions& opt) {
  const Grid& g = cfg.grid();
  check_grids(g, bg);
  cfg.n_H.check_same(cfg.theta_H);
  const int d = g.dims();
  const std::size_t ns = g.spatial_size();
  const double hb = bg.hbar, m = bg.m, V0 = bg.V0;

  const auto gth = theta_gradient(cfg.theta_H, cfg.theta_jump, bg.phase_period);
  const ScalarField th_tau = tau_derivative(cfg.theta_H);
  std::vector<ScalarField> gn;
  if (opt.quantum_pressure) gn = plain_gradient(cfg.n_H);

  double re = 0.0, im = 0.0;
  for (std::size_t p = 0; p < g.size(); ++p) {
    const std::size_t s = p % ns;
    if (skip(bg, s)) continue;
    const double n = cfg.n_H[p];
    double grad2 = 0.0, vgrad = 0.0, v2 = 0.0;
    for (int a = 0; a < d; ++a) {
      grad2 += gth[a][p] * gth[a][p];
      vgrad += bg.v[a][s] * gth[a][p];
      v2 += bg.v[a][s] * bg.v[a][s];
    }
    const double nL = bg.n_L0[s];
    double dens = (m * bg.V_ext[s] - bg.mu + 2.0 * V0 * nL) * n + n * grad2 / (2.0 * m) - n * vgrad +
                  0.5 * m * n * v2 + V0 * n * nL * std::cos(2.0 * (cfg.theta_H[p] - bg.theta_L0[s]) / hb) +
                  0.5 * V0 * n * n;
    if (opt.quantum_pressure) {
      double gn2 = 0.0;
      for (int a = 0; a < d; ++a) gn2 += gn[a][p] * gn[a][p];
      dens += hb * hb / (8.0 * m) * gn2 / n;
    }
    if (std::isnan(dens)) continue;
    re += dens;
    im += n * th_tau[p];
  }
  return cplx(re, im) * g.measure(hb);
}

cplx action_SL0(const ComplexField& psi, const Background& bg) {
  const Grid& g = psi.grid();
  check_grids(g, bg);
  const int d = g.dims();
  const std::size_t ns = g.spatial_size();
  const double hb = bg.hbar, m = bg.m;
  const ComplexField dt = tau_derivative(psi);
  std::vector<ComplexField> dpsi;
  for (int a = 0; a < d; ++a) dpsi.push_back(derivative(psi, a));

  cplx sum{};
  for (std::size_t p = 0; p < g.size(); ++p) {
    const std::size_t s = p % ns;
    if (skip(bg, s) || psi.masked(p)) continue;
    const cplx z = psi[p];
    double kin = 0.0;
    for (int a = 0; a < d; ++a) kin += std::norm(dpsi[a][p] - cplx(0.0, m / hb * bg.v[a][s]) * z);
    const double rho = std::norm(z);
    sum += std::conj(z) * hb * dt[p] + hb * hb / (2.0 * m) * kin + (m * bg.V_ext[s] - bg.mu) * rho +
           0.5 * bg.V0 * rho * rho;
  }
  return sum * g.measure(hb);
}

double action_tunneling(const ScalarField& theta_L, const ScalarField& theta_R, const ScalarField& n_L,
                        const ScalarField& n_R, double t_perp, double hbar) {
  theta_L.check_same(theta_R);
  theta_L.check_same(n_L);
  theta_L.check_same(n_R);
  const Grid& g = theta_L.grid();
  if (g.dims() != 2) throw DimensionError("tunnel-coupled planes are two-dimensional");
  double s = 0.0;
  for (std::size_t p = 0; p < g.size(); ++p) {
    const double v = t_perp * std::sqrt(n_L[p] * n_R[p]) * std::cos((theta_L[p] - theta_R[p]) / hbar);
    if (!std::isnan(v)) s += v;
  }
  // dtau dV, not dtau/hbar dV
  return s * g.measure(hbar) * hbar;
}

std::vector<double> phase_offset_scan(const Background& bg, const TauAxis& tau, int offsets) {
  if (offsets < 1) throw PreconditionError("phase scan needs at least one offset");
  FieldConfiguration cfg = background_configuration(bg, tau);
  const ScalarField base = cfg.theta_H;
  std::vector<double> out;
  for (int j = 0; j < offsets; ++j) {
    const double shift = j * std::numbers::pi * bg.hbar / offsets;
    for (std::size_t p = 0; p < base.size(); ++p) cfg.theta_H[p] = base[p] + shift;
    out.push_back(action_SH(cfg, bg).real());
  }
  return out;
}

OracleEstimate functional_gradient(const Functional& S, std::span<const double> x, std::span<const double> d,
                                   double eps) {
  if (eps <= 0.0) eps = std::max(1e-6, 1e-7 * linf(x));
  auto D = [&](double h) { return (eval(S, shifted(x, {{h, d}})) - eval(S, shifted(x, {{-h, d}}))) / (2.0 * h); };
  const cplx d1 = D(eps), d2 = D(2.0 * eps), d4 = D(4.0 * eps);
  const cplx r1 = (4.0 * d1 - d2) / 3.0, r2 = (4.0 * d2 - d4) / 3.0;
  return {(16.0 * r1 - r2) / 15.0, std::abs(r1 - r2)};
}

OracleEstimate functional_hessian_apply(const Functional& S, std::span<const double> x, std::span<const double> d1,
                                        std::span<const double> d2, double h) {
  if (h <= 0.0) h = 1e-3 * std::max(1.0, linf(x));
  auto H = [&](double k) {
    return (eval(S, shifted(x, {{k, d1}, {k, d2}})) - eval(S, shifted(x, {{k, d1}, {-k, d2}})) -
            eval(S, shifted(x, {{-k, d1}, {k, d2}})) + eval(S, shifted(x, {{-k, d1}, {-k, d2}}))) /
           (4.0 * k * k);
  };
  const cplx a = H(h), b = H(2.0 * h);
  return {(4.0 * a - b) / 3.0, std::abs(a - b) / 3.0};
}

OracleEstimate functional_third(const Functional& S, std::span<const double> x, std::span<const double> d1,
                                std::span<const double> d2, std::span<const double> d3, double h1, double h2,
                                double h3) {
  auto T = [&](double k) {
    cplx acc{};
    for (int s1 : {1, -1})
      for (int s2 : {1, -1})
        for (int s3 : {1, -1})
          acc += double(s1 * s2 * s3) * eval(S, shifted(x, {{s1 * k * h1, d1}, {s2 * k * h2, d2}, {s3 * k * h3, d3}}));
    return acc / (8.0 * k * k * k * h1 * h2 * h3);
  };
  const cplx a = T(1.0), b = T(2.0);
  return {(4.0 * a - b) / 3.0, std::abs(a - b) / 3.0};
}

cplx fourth_difference(const Functional& S, std::span<const double> x, std::span<const double> d, double h) {
  static constexpr double w[5] = {1.0, -4.0, 6.0, -4.0, 1.0};
  cplx acc{};
  for (int k = 0; k < 5; ++k) acc += w[k] * eval(S, shifted(x, {{(k - 2) * h, d}}));
  return acc / std::pow(h, 4);
}

Functional sh_functional(const FieldConfiguration& cfg, const Background& bg, const ActionOptions& opt) {
  return [c = cfg, &bg, opt](std::span<const double> x) mutable {
    c.unpack(x);
    return action_SH(c, bg, opt);
  };
}

cplx hessian_kernel(const FieldConfiguration& cfg, const Background& bg, const FieldConfiguration& d1,
                    const FieldConfiguration& d2) {
  const Grid& g = cfg.grid();
  check_grids(g, bg);
  const int dim = g.dims();
  const std::size_t ns = g.spatial_size();
  const double hb = bg.hbar, m = bg.m, V0 = bg.V0;
  const auto gth = theta_gradient(cfg.theta_H, cfg.theta_jump, bg.phase_period);
  const auto g1 = plain_gradient(d1.theta_H), g2 = plain_gradient(d2.theta_H);
  const ScalarField t1 = tau_derivative(d1.theta_H), t2 = tau_derivative(d2.theta_H);

  double re = 0.0, im = 0.0;
  for (std::size_t p = 0; p < g.size(); ++p) {
    const std::size_t s = p % ns;
    if (skip(bg, s)) continue;
    const double phase = 2.0 * (cfg.theta_H[p] - bg.theta_L0[s]) / hb;
    const double nL = bg.n_L0[s];
    // (theta0/m - v) . grad d
    double c1 = 0.0, c2 = 0.0, gg = 0.0;
    for (int a = 0; a < dim; ++a) {
      const double w = gth[a][p] / m - bg.v[a][s];
      c1 += w * g1[a][p];
      c2 += w * g2[a][p];
      gg += g1[a][p] * g2[a][p];
    }
    const double sn = 2.0 * V0 / hb * nL * std::sin(phase);
    double h = V0 * d1.n_H[p] * d2.n_H[p];
    h += d1.n_H[p] * (c2 - sn * d2.theta_H[p]) + d2.n_H[p] * (c1 - sn * d1.theta_H[p]);
    h += cfg.n_H[p] / m * gg - 4.0 * V0 / (hb * hb) * nL * cfg.n_H[p] * std::cos(phase) * d1.theta_H[p] * d2.theta_H[p];
    if (std::isnan(h)) continue;
    re += h;
    im += d1.n_H[p] * t2[p] + d2.n_H[p] * t1[p];
  }
  return cplx(re, im) * g.measure(hb);
}

cplx quadratic_model(const FieldConfiguration& cfg, const Background& bg, const FieldConfiguration& d) {
  return 0.5 * hessian_kernel(cfg, bg, d, d);
}

double third_kernel_thth_n(const FieldConfiguration& cfg, const Background& bg, const ScalarField& dth1,
                           const ScalarField& dth2, const ScalarField& dn) {
  const Grid& g = cfg.grid();
  check_grids(g, bg);
  const std::size_t ns = g.spatial_size();
  const double hb = bg.hbar;
  const auto g1 = plain_gradient(dth1), g2 = plain_gradient(dth2);
  double sum = 0.0;
  for (std::size_t p = 0; p < g.size(); ++p) {
    const std::size_t s = p % ns;
    if (skip(bg, s)) continue;
    double gg = 0.0;
    for (int a = 0; a < g.dims(); ++a) gg += g1[a][p] * g2[a][p];
    const double c = std::cos(2.0 * (cfg.theta_H[p] - bg.theta_L0[s]) / hb);
    const double v = dn[p] * (gg / bg.m - 4.0 * bg.V0 / (hb * hb) * bg.n_L0[s] * c * dth1[p] * dth2[p]);
    if (!std::isnan(v)) sum += v;
  }
  return sum * g.measure(hb);
}

ValidityReport third_derivative_check(const FieldConfiguration& cfg, const Background& bg,
                                      const ThirdDirections& dirs) {
  const Functional S = sh_functional(cfg, bg);
  const std::vector<double> x = cfg.pack();
  const Grid& g = cfg.grid();
  auto as_n = [&](const ScalarField& f) {
    FieldConfiguration d{f, ScalarField(g, 0.0), {}};
    return d.pack();
  };
  auto as_th = [&](const ScalarField& f) {
    FieldConfiguration d{ScalarField(g, 0.0), f, {}};
    return d.pack();
  };
  const auto n1 = as_n(dirs.n1), n2 = as_n(dirs.n2), t1 = as_th(dirs.theta1), t2 = as_th(dirs.theta2);
  const double hn = 0.1, ht = 1e-2;

  ValidityReport r;
  auto zero_row = [&](const std::string& name, const OracleEstimate& e) {
    r.rows.push_back({name, std::abs(e.value), 1e-8, std::abs(e.value) < 1e-8});
  };
  zero_row("third_nnn", functional_third(S, x, n1, n2, n1, hn, hn, hn));
  zero_row("third_nn_theta", functional_third(S, x, n1, n2, t1, hn, hn, ht));
  zero_row("third_n_theta_n", functional_third(S, x, n1, t1, n2, hn, ht, hn));

  const OracleEstimate num = functional_third(S, x, t1, t2, n1, ht, ht, hn);
  const double kern = third_kernel_thth_n(cfg, bg, dirs.theta1, dirs.theta2, dirs.n1);
  const double rel = std::abs(num.value - kern) / std::max(std::abs(kern), 1e-300);
  r.rows.push_back({"third_theta_theta_n", rel, 1e-6, rel < 1e-6 && std::abs(num.value.imag()) < 1e-8});

  const Functional Q = [&](std::span<const double> y) {
    FieldConfiguration d{ScalarField(g, 0.0), ScalarField(g, 0.0), {}};
    d.unpack(y);
    return quadratic_model(cfg, bg, d);
  };
  const std::vector<double> zero(x.size(), 0.0);
  const double scale = std::abs(Q(t1));
  const double f4 = std::abs(fourth_difference(Q, zero, t1, 0.5)) * std::pow(0.5, 4) / std::max(scale, 1e-300);
  r.rows.push_back({"fourth_quadratic_theta", f4, 1e-10, f4 < 1e-10});
  return r;
}

ScalarField random_smooth_field(const Grid& g, std::uint64_t seed, int modes) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0), ph(0.0, 2.0 * std::numbers::pi);
  const int d = g.dims();
  const std::size_t ns = g.spatial_size();
  struct Mode {
    std::vector<int> k;
    int kt;
    double amp, phase;
  };
  std::vector<Mode> ms;
  for (int j = 0; j < modes; ++j) {
    Mode md;
    for (int a = 0; a < d; ++a) md.k.push_back(static_cast<int>(std::floor(3.0 * (u(rng) + 1.0) / 2.0)));
    md.kt = g.has_tau() ? static_cast<int>(std::floor(2.0 * (u(rng) + 1.0) / 2.0)) : 0;
    md.amp = u(rng);
    md.phase = ph(rng);
    ms.push_back(md);
  }
  ScalarField f(g);
  for (std::size_t p = 0; p < g.size(); ++p) {
    const std::size_t s = p % ns;
    const double tau = g.has_tau() ? static_cast<double>(p / ns) / g.tau_points() : 0.0;
    double v = 0.0;
    for (const auto& md : ms) {
      double arg = md.phase + 2.0 * std::numbers::pi * md.kt * tau;
      for (int a = 0; a < d; ++a) {
        const Axis& ax = g.axis(a);
        arg += 2.0 * std::numbers::pi * md.k[a] * (g.coord(a, s) - ax.origin) / ax.length();
      }
      v += md.amp * std::cos(arg);
    }
    f[p] = v;
  }
  const double m = max_abs(f);
  if (m > 0.0) f *= 1.0 / m;
  return f;
}

}  // namespace sgacs

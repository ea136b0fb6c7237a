#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "doctest.h"
#include "sgacs/background.hpp"

using namespace sgacs;
constexpr double kPi = std::numbers::pi;

namespace {

// Dense hopping matrix of -1/2 Laplacian with psi = 0 beyond the grid.
double dense_box_ground_energy(int nx, int ny, double dx) {
  const int N = nx * ny;
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(N, N);
  const double t = 1.0 / (2.0 * dx * dx);
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j) {
      const int p = i * ny + j;
      H(p, p) = 4.0 * t;
      if (i > 0) H(p, p - ny) = -t;
      if (i + 1 < nx) H(p, p + ny) = -t;
      if (j > 0) H(p, p - 1) = -t;
      if (j + 1 < ny) H(p, p + 1) = -t;
    }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

ScalarField harmonic(const Grid& g, double omega) {
  ScalarField V(g);
  for (std::size_t s = 0; s < g.size(); ++s) {
    double r2 = 0.0;
    for (int a = 0; a < g.dims(); ++a) r2 += g.coord(a, s) * g.coord(a, s);
    V[s] = 0.5 * omega * omega * r2;
  }
  return V;
}

}  // namespace

TEST_CASE("V0 = 0 box ground state matches the dense eigenproblem") {
  Grid g({Axis{12, 0.25, 0.0, Boundary::fixed_value}, Axis{10, 0.25, 0.0, Boundary::fixed_value}});
  GpeOptions opt;
  opt.tol = 1e-11;
  auto r = solve_gpe_imaginary_time(g, ScalarField(g, 0.0), 0.0, nullptr, 1.0, opt);
  CHECK(std::abs(r.mu - dense_box_ground_energy(12, 10, 0.25)) < 1e-8);
  CHECK(r.energy == doctest::Approx(r.mu).epsilon(1e-12));
  for (std::size_t k = 2; k < r.energy_history.size(); ++k)
    CHECK(r.energy_history[k] <= r.energy_history[k - 1] + 1e-14 * std::abs(r.energy_history[k - 1]));
}

TEST_CASE("GPE energy decreases monotonically in a trap with interactions and recovers Thomas-Fermi") {
  Grid g = make_box_grid(2, 48, -6.0, 6.0, Boundary::fixed_value);
  auto V = harmonic(g, 1.0);
  GpeOptions opt;
  opt.tol = 1e-9;
  const double V0 = 1.0, N = 2000.0;
  auto r = solve_gpe_imaginary_time(g, V, V0, nullptr, N, opt);
  bool mono = true;
  for (std::size_t k = 2; k < r.energy_history.size(); ++k)
    mono = mono && r.energy_history[k] <= r.energy_history[k - 1] + 1e-13 * std::abs(r.energy_history[k - 1]);
  CHECK(mono);
  auto tf = thomas_fermi_conventional(r.mu, V, V0);
  double worst = 0.0, peak = max_abs(tf);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (tf[i] < 0.5 * peak) continue;  // interior, away from the edge
    worst = std::max(worst, std::abs(r.n[i] - tf[i]) / tf[i]);
  }
  CHECK(worst < 0.05);
}

TEST_CASE("GPE preconditions and the covariant stencil") {
  Grid g = make_box_grid(2, 8, 0.0, 1.0, Boundary::periodic);
  GpeOptions opt;
  opt.dtau = 10.0;
  CHECK_THROWS_AS(solve_gpe_imaginary_time(g, ScalarField(g, 0.0), 1.0, nullptr, 1.0, opt), PreconditionError);
  CHECK_THROWS_AS(solve_gpe_imaginary_time(g, ScalarField(g, 0.0), 1.0, nullptr, 0.0), PreconditionError);
  CHECK(gpe_stability_bound(make_box_grid(3, 8, 0.0, 1.0, Boundary::periodic)) ==
        doctest::Approx(0.8 / 3 * (1.0 / 64)));

  // Hermitian with Peierls phases.
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Grid h({Axis{7, 0.3, 0, Boundary::periodic}, Axis{6, 0.4, 0, Boundary::fixed_value}});
  VectorField v(h, 2);
  ComplexField a(h), b(h);
  ScalarField P(h);
  for (std::size_t i = 0; i < h.size(); ++i) {
    v[0][i] = u(rng);
    v[1][i] = u(rng);
    a[i] = {u(rng), u(rng)};
    b[i] = {u(rng), u(rng)};
    P[i] = u(rng);
  }
  auto Ha = gpe_linear_apply(a, P, &v, 1.0, 1.0), Hb = gpe_linear_apply(b, P, &v, 1.0, 1.0);
  CHECK(std::abs(inner(b, Ha) - std::conj(inner(a, Hb))) < 1e-12);
}

TEST_CASE("self-consistent n_H loop settles with shrinking updates") {
  Grid g = make_box_grid(2, 24, -4.0, 4.0, Boundary::fixed_value);
  auto V = harmonic(g, 1.0);
  GpeOptions opt;
  opt.self_consistent = true;
  opt.mu_H = 12.0;
  opt.tol = 1e-8;
  opt.outer_tol = 1e-7;
  auto r = solve_gpe_imaginary_time(g, V, 0.5, nullptr, 50.0, opt);
  CHECK(r.outer_iterations > 1);
  CHECK(r.outer_iterations <= 50);
  for (std::size_t k = 1; k < r.outer_changes.size(); ++k) CHECK(r.outer_changes[k] < r.outer_changes[k - 1]);
  CHECK(r.n_H.masked_count() == 0);
}

TEST_CASE("Thomas-Fermi density") {
  Grid g = make_box_grid(1, 21, -5.0, 5.0, Boundary::fixed_value);
  ScalarField zero(g, 0.0);
  auto flat = thomas_fermi_density(3.0, zero, 0.5, zero);
  for (double x : flat.values()) CHECK(x == doctest::Approx(3.0));
  auto V = harmonic(g, 1.0);
  auto nl = ScalarField(g, 0.4);
  auto tf = thomas_fermi_density(4.0, V, 2.0, nl);
  for (int i : {0, 3, 7, 9, 10, 11, 13, 15, 18, 20}) {
    const double x = g.axis(0).coord(i);
    const double expect = (4.0 - 0.5 * x * x - 2.0 * 0.4) / 4.0;
    if (expect < 0.0) CHECK(std::isnan(tf[i]));
    else CHECK(tf[i] == doctest::Approx(expect).epsilon(1e-14));
  }
  // Edge: mu = V_ext + V0 n_L0 gives exactly zero.
  ScalarField V2(g, 1.0);
  auto edge = thomas_fermi_density(1.0 + 2.0 * 0.4, V2, 2.0, nl);
  CHECK(edge[5] == 0.0);
}

TEST_CASE("vortex wavefunction: asymptotics, winding and azimuthal flow") {
  Grid far({Axis{4, 1.0, 100.0, Boundary::fixed_value}, Axis{4, 1.0, 0.0, Boundary::fixed_value}});
  auto f = vortex_wavefunction(1, 1.0, far);
  CHECK(std::abs(std::abs(f[0]) - 1.0) < 1e-4);
  CHECK(std::abs(vortex_wavefunction(2, 3.0, far)[0]) == doctest::Approx(3.0 * std::sqrt(1.0 - 4e-4)).epsilon(1e-14));

  Grid g = make_box_grid(2, 161, -8.0, 8.0, Boundary::fixed_value);
  for (int n : {1, 2, -1}) {
    auto psi = vortex_wavefunction(n, 1.0, g);
    CHECK(std::abs(loop_phase_winding(psi, 0.0, 0.0, 5.0) - 2.0 * kPi * n) < 1e-6);
  }
  auto psi = vortex_wavefunction(1, 1.0, g);
  CHECK(psi.masked(g.flatten({80, 80, 0})));
  auto grad = phase_gradient(psi);
  for (auto [i, j] : {std::pair{110, 80}, std::pair{80, 130}, std::pair{60, 60}, std::pair{140, 100}}) {
    const std::size_t s = g.flatten({i, j, 0});
    const double x = g.coord(0, s), y = g.coord(1, s), r = std::hypot(x, y);
    CHECK(grad[0][s] == doctest::Approx(-y / (r * r)).epsilon(1e-3).scale(1.0 / r));
    CHECK(grad[1][s] == doctest::Approx(x / (r * r)).epsilon(1e-3).scale(1.0 / r));
  }
  CHECK_THROWS_AS(vortex_wavefunction(1, 1.0, make_box_grid(1, 8, 0, 1, Boundary::periodic)), DimensionError);
}

TEST_CASE("vortnovort phase") {
  // Independent two-argument arctangent at (2, 1), w = 1.
  CHECK(vortnovort_value(1.0, 2.0, 1.0) == doctest::Approx(0.5 * std::atan2(16.0, 17.0)).epsilon(1e-15));
  Grid g = make_box_grid(2, 81, -4.0, 4.0, Boundary::fixed_value);
  for (double w : {1.0, 0.5}) {
    auto p = vortnovort_phase(w, g);
    for (std::size_t s = 0; s < g.size(); ++s) {
      const double x = g.coord(0, s), y = g.coord(1, s);
      if (p.core[s]) {
        CHECK(std::hypot(x, y) <= 1.0 + 1e-9);
        continue;
      }
      if (std::abs(y) < 1e-12) CHECK(p.theta[s] == 0.0);
      if (std::abs(x) < 1e-12) CHECK(std::abs(std::sin(2.0 * p.theta[s])) < 1e-12);
    }
    std::size_t sing = 0;
    for (auto b : p.singular) sing += b;
    CHECK(sing > 0);
  }
  auto tiny = vortnovort_phase(1e-9, g);
  CHECK(max_abs(tiny.theta) < 1e-15);
}

TEST_CASE("phase matching") {
  Grid g = make_box_grid(2, 6, 0.0, 1.0, Boundary::periodic);
  auto th = phase_match(ScalarField(g, 0.0), 0, 1.3);
  for (double x : th.values()) CHECK(x == doctest::Approx(kPi * 1.3 / 2));
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-3, 3);
  ScalarField tl(g);
  for (double& x : tl.values()) x = u(rng);
  for (int k : {-2, 0, 1, 5}) {
    auto h = phase_match(tl, k, 0.7);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::cos(2.0 * (h[i] - tl[i]) / 0.7) == doctest::Approx(-1.0).epsilon(1e-14));
  }
}

TEST_CASE("validity checks") {
  Grid g = make_box_grid(2, 64, -8.0, 8.0, Boundary::periodic);
  SUBCASE("uniform background passes with zero residuals") {
    auto bg = uniform_background(g, 1.0, 0.5, 1.0);
    auto rep = validate_assumptions(bg);
    CHECK(rep.find("assumption1_div_v")->residual == 0.0);
    CHECK(rep.find("assumption2_harmonic")->residual == 0.0);
    CHECK(rep.find("assumption3_quantum_pressure")->residual == 0.0);
    CHECK(rep.find("assumption3p_two_loop")->pass);
    CHECK(rep.find("temperature_bound")->residual == 0.0);
    CHECK(rep.all_pass());
  }
  SUBCASE("azimuthal vortex phase is harmonic up to stencil truncation") {
    Grid f = make_box_grid(2, 161, -8.0, 8.0, Boundary::fixed_value);
    auto bg = uniform_background(f, 1.0, 1.0, 1.0);
    bg.phase_period = 2.0 * kPi;
    for (std::size_t s = 0; s < f.size(); ++s) {
      const double x = f.coord(0, s), y = f.coord(1, s);
      bg.theta_H0[s] = std::atan2(y, x);
      if (std::hypot(x, y) <= 1.0) mask_cell(bg, s);
    }
    const ScalarField lap = divergence(bg.phase_gradient());
    const double dx = f.axis(0).dx;
    double worst = 0.0;
    for (std::size_t s = 0; s < f.size(); ++s) {
      const double x = f.coord(0, s), y = f.coord(1, s);
      if (std::isnan(lap[s]) || std::max(std::abs(x), std::abs(y)) > 8.0 - 2.5 * dx) continue;
      // wide-stencil truncation of atan2 is about 4.3 dx^2 / r^4
      worst = std::max(worst, std::abs(lap[s]) / (6.0 * dx * dx / std::pow(std::hypot(x, y), 4)));
    }
    CHECK(worst < 1.0);
  }
  SUBCASE("quantum pressure ratio of a Gaussian") {
    Grid f = make_box_grid(2, 401, -5.0, 5.0, Boundary::fixed_value);
    ScalarField n(f);
    const double s2 = 2.0;
    for (std::size_t s = 0; s < f.size(); ++s) {
      const double r2 = f.coord(0, s) * f.coord(0, s) + f.coord(1, s) * f.coord(1, s);
      n[s] = std::exp(-r2 / (2 * s2));
    }
    auto q = quantum_pressure_ratio(n, 0.8, 1.5, 0.9);
    for (auto [i, j] : {std::pair{200, 200}, std::pair{220, 190}, std::pair{150, 250}, std::pair{300, 200},
                        std::pair{120, 140}}) {
      const std::size_t s = f.flatten({i, j, 0});
      const double x = f.coord(0, s), y = f.coord(1, s), r2 = x * x + y * y;
      const double expect = 0.81 * r2 / (4.0 * 1.5 * s2 * s2 * 0.8 * n[s]);
      CHECK(q[s] == doctest::Approx(expect).epsilon(2e-3).scale(1e-6));
    }
  }
  SUBCASE("temperature bound") {
    auto bg = uniform_background(g, 2.0, 0.5, 1.5);
    const double scale = 1.5 * 2.0 * 0.5;
    CHECK(temperature_bound(bg, 0.0).valid);
    CHECK(temperature_bound(bg, 0.0).ratio == 0.0);
    CHECK_FALSE(temperature_bound(bg, 10.0 * scale).valid);
    auto edge = temperature_bound(bg, 0.1 * scale);
    CHECK(edge.ratio == doctest::Approx(0.1));
    CHECK_FALSE(temperature_bound(bg, 0.1 * scale, edge.ratio).valid);
    bg.n_L0[3] = 0.0;
    auto zero = temperature_bound(bg, 0.0);
    CHECK_FALSE(zero.valid);
    CHECK(std::isinf(zero.ratio));
  }
}

TEST_CASE("background bundle round trip") {
  Grid g = make_box_grid(2, 6, -1.0, 1.0, Boundary::fixed_value);
  auto bg = uniform_background(g, 1.5, 0.25, 2.0, 1.0, 1.0, {0.1, -0.2}, 1);
  mask_cell(bg, 7);
  bg.meta["alpha"] = "2";
  const auto dir = std::filesystem::temp_directory_path() / "sgacs_bg_bundle";
  std::filesystem::remove_all(dir);
  write_background_bundle(dir.string(), bg);
  auto back = read_background_bundle(dir.string());
  CHECK(back.grid == g);
  CHECK(back.V0 == 2.0);
  CHECK(back.mu == bg.mu);
  CHECK(back.masked(7));
  CHECK(back.masked_count() == 1);
  CHECK(back.meta.at("alpha") == "2");
  CHECK(back.meta.at("family") == "uniform");
  CHECK(back.v[1][0] == -0.2);
  CHECK(back.theta_H0[0] == bg.theta_H0[0]);
  std::filesystem::remove_all(dir);
}

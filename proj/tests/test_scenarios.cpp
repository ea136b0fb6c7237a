#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "sgacs/scenarios.hpp"

using namespace sgacs;
namespace fs = std::filesystem;

namespace {

Config parse(const std::string& text) {
  std::istringstream is(text);
  return Config::parse(is, "test.cfg");
}

std::string error_of(const Config& c) {
  try {
    validate_config(c);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("sgacs_scn_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

const char* kKink = R"(
scenario.name = kink
scenario.type = evolve
grid.dims = 1
grid.n = 256
grid.lo = -16
grid.hi = 16
background.family = uniform
background.V0 = 1
background.n_H = 1
background.n_L = 0.25
solver.init = kink
solver.velocity = 0.3
solver.steps = 200
solver.stride = 50
)";

}  // namespace

TEST_CASE("config parsing") {
  auto c = parse("# comment\n  grid.n = 12  # trailing\n\nscenario.name=abc\n");
  CHECK(c.integer("grid.n") == 12);
  CHECK(c.str("scenario.name") == "abc");
  CHECK(c.num("grid.lo", -1.5) == -1.5);
  c.set("grid.n=14");
  CHECK(c.integer("grid.n") == 14);
  c.set("background.flow", "0.1, 0.2");
  CHECK(c.list("background.flow") == std::vector<double>{0.1, 0.2});
  CHECK_THROWS_AS(parse("no equals sign\n"), ConfigError);
  CHECK_THROWS_AS(parse("nodot = 3\n"), ConfigError);
  CHECK_THROWS_AS(c.set("missing_equals"), ConfigError);
  c.set("grid.lo", "abc");
  CHECK_THROWS_AS(c.num("grid.lo"), ConfigError);
  CHECK_THROWS_AS(Config::load("/nonexistent/x.cfg"), ConfigError);
}

TEST_CASE("validation names what is wrong") {
  const std::string empty = error_of(Config{});
  CHECK(empty.find("scenario.name") != std::string::npos);
  CHECK(empty.find("scenario.type") != std::string::npos);

  auto c = parse("scenario.name = x\nscenario.type = background\nbogus.key = 1\n");
  CHECK(error_of(c).find("bogus.key") != std::string::npos);

  c = parse("scenario.name = x\nscenario.type = background\ngrid.dims = 2\ngrid.n = 8\ngrid.lo = 0\ngrid.hi = 1\n"
            "background.family = uniform\n");
  const std::string miss = error_of(c);
  for (const char* k : {"background.V0", "background.n_H", "background.n_L"}) CHECK(miss.find(k) != std::string::npos);

  c.set("background.family", "plasma");
  CHECK(error_of(c).find("plasma") != std::string::npos);
  c.set("scenario.type", "dance");
  CHECK(error_of(c).find("dance") != std::string::npos);
  CHECK(error_of(parse(kKink)).empty());
}

TEST_CASE("background families") {
  auto base = parse("grid.dims = 2\ngrid.n = 33\ngrid.lo = -8\ngrid.hi = 8\ngrid.bc = fixed_value\n"
                    "background.V0 = 1\nbackground.n_H = 1\nbackground.n_L = 0.5\n");
  SUBCASE("uniform with flow") {
    base.set("background.family", "uniform");
    base.set("background.flow", "0.2,0");
    auto b = build_background(base).bg;
    CHECK(b.flow()[0][100] == doctest::Approx(0.2));
  }
  SUBCASE("vortex masks the core and winds") {
    base.set("background.family", "vortex");
    base.set("background.circulation", "1");
    base.set("background.amplitude", "1");
    auto b = build_background(base).bg;
    CHECK(b.masked(b.grid.flatten({16, 16, 0})));
    CHECK(b.masked_count() > 0);
    // theta_H0 = theta_L0 + pi hbar / 2
    const std::size_t c = b.grid.flatten({30, 16, 0});
    CHECK(wrap_to(b.theta_H0[c] - b.theta_L0[c] - 0.5 * std::numbers::pi, 2.0 * std::numbers::pi) ==
          doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("vortnovort") {
    base.set("background.family", "vortnovort");
    base.set("background.w", "1");
    auto b = build_background(base).bg;
    CHECK(b.phase_period == doctest::Approx(std::numbers::pi));
  }
  SUBCASE("thomas fermi masks the empty region") {
    base.set("background.family", "thomas_fermi");
    base.set("background.mu", "10");
    base.set("background.mu_H", "30");
    base.set("background.trap", "1");
    auto b = build_background(base).bg;
    CHECK(b.masked(0));
    CHECK_FALSE(b.masked(b.grid.flatten({16, 16, 0})));
  }
  SUBCASE("gpe energy history is monotone") {
    base.set("background.family", "gpe");
    base.set("background.N", "200");
    base.set("background.trap", "1");
    base.set("grid.n", "20");
    auto built = build_background(base);
    CHECK(built.gpe_monotone);
    CHECK(built.gpe_energy_history.size() > 2);
    CHECK(built.bg.n_L0[built.bg.grid.flatten({10, 10, 0})] > 0.0);
  }
}

TEST_CASE("figure 1 properties") {
  const Grid g = make_box_grid(2, 161, -4.0, 4.0, Boundary::fixed_value);
  const auto f1 = figure1(1.0, g), fh = figure1(0.5, g);
  for (const auto* f : {&f1, &fh}) {
    CHECK(f->axis_residual < 1e-12);
    CHECK(f->mask_symmetric);
    CHECK(f->max_display <= 0.5);
    CHECK(f->max_core_display == 0.0);
    for (std::size_t c = 0; c < g.size(); ++c) {
      const auto idx = g.unflatten(c);
      const std::size_t m = g.flatten({160 - idx[0], 160 - idx[1], 0});
      CHECK(f->quiet[c] == f->quiet[m]);
    }
  }
  MESSAGE("ergo area w=1 " << f1.ergo_area << " w=1/2 " << fh.ergo_area << "; quiet " << f1.quiet_area << " / "
                           << fh.quiet_area);
  CHECK(f1.ergo_area > fh.ergo_area);
  CHECK(fh.quiet_area > f1.quiet_area);

  // velocity against direct differentiation of the closed form
  for (auto [x, y] : {std::pair{2.5, 0.0}, {0.0, -3.0}, {-2.0, 1.5}, {3.0, 3.0}}) {
    const std::size_t c = g.flatten({static_cast<int>(std::lround((x + 4.0) / 0.05)),
                                     static_cast<int>(std::lround((y + 4.0) / 0.05)), 0});
    const double h = 1e-6;
    auto d = [&](double dx, double dy) {
      return wrap_to(vortnovort_value(1.0, x + dx, y + dy) - vortnovort_value(1.0, x - dx, y - dy), std::numbers::pi) /
             (2.0 * h);
    };
    CHECK(f1.velocity[0][c] == doctest::Approx(d(h, 0.0)).epsilon(1e-2));
    CHECK(f1.velocity[1][c] == doctest::Approx(d(0.0, h)).epsilon(1e-2));
  }
  CHECK_THROWS_AS(figure1(1.0, make_box_grid(2, 41, -2.0, 2.0, Boundary::fixed_value)), PreconditionError);
}

TEST_CASE("graymap and quiver writers") {
  Grid g = make_box_grid(2, 3, 0.0, 1.0, Boundary::fixed_value);
  ScalarField f(g, 0.0);
  f[g.flatten({2, 2, 0})] = 0.7;   // clipped
  f[g.flatten({0, 0, 0})] = kMasked;
  f[g.flatten({1, 2, 0})] = 0.25;
  std::ostringstream os;
  write_pgm(os, f, 0.5);
  std::istringstream in(os.str());
  std::string magic, comment;
  std::getline(in, magic);
  std::getline(in, comment);
  int nx, ny, maxv;
  in >> nx >> ny >> maxv;
  CHECK(magic == "P2");
  CHECK(nx == 3);
  CHECK(maxv == 255);
  std::vector<int> px(9);
  for (int& p : px) in >> p;
  // first row is the top (largest x2)
  CHECK(px[2] == 254);
  CHECK(px[1] == 127);
  CHECK(px[6] == 255);

  VectorField v(g, 2);
  v[0] = ScalarField(g, 3.0);
  v[1] = ScalarField(g, 4.0);
  std::ostringstream q;
  write_quiver_csv(q, v, 2);
  CHECK(q.str().rfind("x,y,vx,vy,magnitude\n0,0,3,4,5\n", 0) == 0);
}

TEST_CASE("bundles are deterministic") {
  auto cfg = parse(kKink);
  const auto a = fresh_dir("a"), b = fresh_dir("b");
  const auto ra = run_scenario(cfg, a), rb = run_scenario(cfg, b);
  CHECK(ra.pass);
  CHECK(ra.hash == rb.hash);
  CHECK(ra.hash == bundle_hash(a));
  CHECK(std::find(ra.files.begin(), ra.files.end(), "series.csv") != ra.files.end());
  CHECK(ra.manifest.at("check.kink_shape") == "pass");

  cfg.set("solver.init", "noise");
  cfg.set("scenario.seed", "3");
  const auto c = fresh_dir("c"), d = fresh_dir("d");
  const auto rc = run_scenario(cfg, c);
  cfg.set("scenario.seed", "4");
  const auto rd = run_scenario(cfg, d);
  CHECK(rc.hash != rd.hash);

  std::ifstream series(a / "series.csv");
  std::string header;
  std::getline(series, header);
  CHECK(header == "t,energy,charge,min,max");
  for (const auto& p : {a, b, c, d}) fs::remove_all(p);
}

TEST_CASE("figure1 and fock bundles") {
  auto cfg = parse("scenario.name = f\nscenario.type = figure1\ngrid.dims = 2\ngrid.n = 81\ngrid.lo = -4\n"
                   "grid.hi = 4\ngrid.bc = fixed_value\nfigure.w = 1\n");
  const auto dir = fresh_dir("fig");
  const auto r = run_scenario(cfg, dir);
  CHECK(r.pass);
  for (const char* f : {"magnitude.pgm", "ergomask.pgm", "quiver.csv", "ergosurface.csv", "manifest.txt",
                        "superposition_difference.dump"})
    CHECK(fs::exists(dir / f));
  fs::remove_all(dir);

  auto fock = parse("scenario.name = cat\nscenario.type = fock\nfock.family = even_cat\nfock.alpha = 2\n");
  const auto fd = fresh_dir("fock");
  const auto rf = run_scenario(fock, fd);
  CHECK(rf.pass);
  CHECK(std::stod(rf.manifest.at("a0_squared_residual")) < 1e-10);
  fs::remove_all(fd);
}

TEST_CASE("planes scenario") {
  auto cfg = parse(R"(
scenario.name = p
scenario.type = evolve
grid.dims = 2
grid.n = 12
grid.lo = 0
grid.hi = 6
background.family = uniform
background.V0 = 1
background.n_H = 1
background.n_L = 0.25
solver.system = planes
solver.init = uniform
solver.t_perp = 0.3
solver.gamma0 = 3.141592653589793
solver.steps = 300
)");
  const auto dir = fresh_dir("planes");
  const auto r = run_scenario(cfg, dir);
  CHECK(r.pass);
  CHECK(std::stod(r.manifest.at("planes_residual")) < 1e-6);
  fs::remove_all(dir);
}

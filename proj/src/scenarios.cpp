#include "sgacs/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "sgacs/sgsolver.hpp"

namespace sgacs {

namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join(const std::vector<std::string>& v, const char* sep = ", ") {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : sep) + s;
  return out;
}

const std::vector<std::string>& key_table() {
  static const std::vector<std::string> keys = {
      "scenario.name", "scenario.type", "scenario.seed", "scenario.waiver",
      "grid.dims", "grid.n", "grid.lo", "grid.hi", "grid.bc",
      "background.family", "background.V0", "background.n_H", "background.n_L", "background.m",
      "background.hbar", "background.mu", "background.mu_H", "background.N", "background.trap",
      "background.w", "background.circulation", "background.amplitude", "background.k", "background.flow",
      "background.kT", "background.self_consistent", "background.tol",
      "solver.system", "solver.init", "solver.dt", "solver.cfl", "solver.steps", "solver.stride",
      "solver.snapshot_stride", "solver.velocity", "solver.x0", "solver.mode", "solver.amplitude",
      "solver.gamma0", "solver.t_perp",
      "figure.w", "figure.clip", "figure.core", "figure.window", "figure.quiver_stride",
      "fock.family", "fock.alpha", "fock.w", "fock.cutoff",
      "output.dir"};
  return keys;
}

std::vector<std::string> family_keys(const std::string& family) {
  if (family == "uniform") return {"background.V0", "background.n_H", "background.n_L"};
  if (family == "gpe") return {"background.V0", "background.N", "background.n_H"};
  if (family == "thomas_fermi") return {"background.V0", "background.mu", "background.mu_H", "background.trap"};
  if (family == "vortex") return {"background.V0", "background.n_H", "background.circulation", "background.amplitude"};
  if (family == "vortnovort") return {"background.V0", "background.n_H", "background.n_L", "background.w"};
  throw ConfigError("background.family: unknown family '" + family +
                    "' (expected gpe, thomas_fermi, vortex, vortnovort or uniform)");
}

// m V_ext enters the GPE, so this is the trap per unit mass.
ScalarField harmonic_potential(const Grid& g, double omega) {
  ScalarField V(g, 0.0);
  for (std::size_t c = 0; c < g.size(); ++c) {
    double r2 = 0.0;
    for (int a = 0; a < g.dims(); ++a) r2 += g.coord(a, c) * g.coord(a, c);
    V[c] = 0.5 * omega * omega * r2;
  }
  return V;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw InputError("cannot write '" + p.string() + "'");
  os << text;
}

template <class F>
void write_stream(const fs::path& p, F&& body) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw InputError("cannot write '" + p.string() + "'");
  body(os);
}

}  // namespace

// ---- Config ----

Config Config::parse(std::istream& is, const std::string& source) {
  Config c;
  c.source_ = source;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected 'section.key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (key.find('.') == std::string::npos || key.front() == '.' || key.back() == '.')
      throw ConfigError(source + ":" + std::to_string(lineno) + ": key '" + key + "' is not of the form section.key");
    c.values_[key] = trim(line.substr(eq + 1));
  }
  return c;
}

Config Config::load(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file '" + path.string() + "'");
  return parse(is, path.string());
}

void Config::set(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not section.key=value");
  const std::string key = trim(assignment.substr(0, eq));
  if (key.find('.') == std::string::npos) throw ConfigError("override key '" + key + "' is not section.key");
  values_[key] = trim(assignment.substr(eq + 1));
}

std::string Config::str(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError(key + ": required key missing");
  return it->second;
}

std::string Config::str(const std::string& key, const std::string& fallback) const {
  return has(key) ? str(key) : fallback;
}

double Config::num(const std::string& key) const {
  const std::string s = str(key);
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key + ": '" + s + "' is not a number");
  }
}

double Config::num(const std::string& key, double fallback) const { return has(key) ? num(key) : fallback; }

long Config::integer(const std::string& key) const {
  const std::string s = str(key);
  try {
    std::size_t used = 0;
    const long v = std::stol(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key + ": '" + s + "' is not an integer");
  }
}

long Config::integer(const std::string& key, long fallback) const { return has(key) ? integer(key) : fallback; }

bool Config::flag(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string s = str(key);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError(key + ": '" + s + "' is not a boolean");
}

std::vector<double> Config::list(const std::string& key) const {
  std::vector<double> out;
  if (!has(key)) return out;
  std::stringstream ss(str(key));
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(trim(item)));
    } catch (const std::exception&) {
      throw ConfigError(key + ": '" + item + "' is not a number");
    }
  }
  return out;
}

std::vector<std::string> known_keys() { return key_table(); }

std::vector<std::string> required_keys(const Config& cfg) {
  std::vector<std::string> req = {"scenario.name", "scenario.type"};
  const std::string type = cfg.str("scenario.type", "");
  if (type == "fock") {
    req.insert(req.end(), {"fock.family", "fock.alpha"});
    return req;
  }
  req.insert(req.end(), {"grid.dims", "grid.n", "grid.lo", "grid.hi"});
  if (type == "figure1") {
    req.push_back("figure.w");
    return req;
  }
  req.push_back("background.family");
  if (cfg.has("background.family")) {
    const auto fk = family_keys(cfg.str("background.family"));
    req.insert(req.end(), fk.begin(), fk.end());
  }
  if (type == "evolve") req.insert(req.end(), {"solver.init", "solver.steps"});
  return req;
}

void validate_config(const Config& cfg) {
  const auto& table = key_table();
  const std::set<std::string> known(table.begin(), table.end());
  std::vector<std::string> unknown;
  for (const auto& [k, v] : cfg.values())
    if (!known.count(k)) unknown.push_back(k);
  if (!unknown.empty()) throw ConfigError(cfg.source() + ": unknown keys: " + join(unknown));

  if (cfg.has("scenario.type")) {
    static const std::set<std::string> types = {"background", "metric", "evolve", "figure1", "fock"};
    const std::string t = cfg.str("scenario.type");
    if (!types.count(t))
      throw ConfigError("scenario.type: unknown type '" + t + "' (expected background, metric, evolve, figure1 or fock)");
  }
  std::vector<std::string> missing;
  for (const auto& k : required_keys(cfg))
    if (!cfg.has(k)) missing.push_back(k);
  if (!missing.empty()) throw ConfigError(cfg.source() + ": missing required keys: " + join(missing));
}

Grid grid_from_config(const Config& cfg) {
  const long d = cfg.integer("grid.dims"), n = cfg.integer("grid.n");
  if (d < 1 || d > 3) throw ConfigError("grid.dims: must be 1, 2 or 3");
  if (n < 2) throw ConfigError("grid.n: need at least 2 points");
  const double lo = cfg.num("grid.lo"), hi = cfg.num("grid.hi");
  if (!(hi > lo)) throw ConfigError("grid.hi: must exceed grid.lo");
  Boundary bc;
  try {
    bc = parse_boundary(cfg.str("grid.bc", "periodic"));
  } catch (const Error& e) {
    throw ConfigError(std::string("grid.bc: ") + e.what());
  }
  return make_box_grid(static_cast<int>(d), static_cast<int>(n), lo, hi, bc);
}

// ---- backgrounds ----

BuiltBackground build_background(const Config& cfg) {
  const Grid g = grid_from_config(cfg);
  const std::string family = cfg.str("background.family");
  const double V0 = cfg.num("background.V0");
  const double m = cfg.num("background.m", 1.0), hbar = cfg.num("background.hbar", 1.0);
  const int k = static_cast<int>(cfg.integer("background.k", 0));
  BuiltBackground out;
  Background& bg = out.bg;

  if (family == "uniform") {
    bg = uniform_background(g, cfg.num("background.n_H"), cfg.num("background.n_L"), V0, m, hbar,
                            cfg.list("background.flow"), k);
  } else if (family == "gpe") {
    bg = uniform_background(g, cfg.num("background.n_H"), 1.0, V0, m, hbar, {}, k);
    bg.V_ext = harmonic_potential(g, cfg.num("background.trap", 0.0));
    GpeOptions opt;
    opt.m = m;
    opt.hbar = hbar;
    opt.tol = cfg.num("background.tol", 1e-9);
    opt.self_consistent = cfg.flag("background.self_consistent", false);
    opt.mu_H = cfg.num("background.mu_H", 0.0);
    const ScalarField nH = bg.n_H0;
    auto r = solve_gpe_imaginary_time(g, bg.V_ext, V0, nullptr, cfg.num("background.N"), opt,
                                      opt.self_consistent ? nullptr : &nH);
    bg.n_L0 = r.n;
    bg.theta_L0 = r.theta;
    if (opt.self_consistent) bg.n_H0 = r.n_H;
    bg.theta_H0 = phase_match(bg.theta_L0, k, hbar);
    bg.mu = r.mu;
    out.gpe_energy_history = r.energy_history;
    for (std::size_t i = 2; i < r.energy_history.size(); ++i)
      if (r.energy_history[i] > r.energy_history[i - 1] + 1e-13 * std::abs(r.energy_history[i - 1]))
        out.gpe_monotone = false;
    out.notes["gpe_mu"] = fmt(r.mu);
    out.notes["gpe_residual"] = fmt(r.residual);
    out.notes["gpe_steps"] = std::to_string(r.steps);
    auto tf = thomas_fermi_conventional(r.mu, bg.V_ext, V0, m);
    double worst = 0.0;
    const double peak = max_abs(tf);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (tf[i] >= 0.5 * peak && peak > 0.0) worst = std::max(worst, std::abs(r.n[i] - tf[i]) / tf[i]);
    out.notes["gpe_tf_interior_deviation"] = fmt(worst);
  } else if (family == "thomas_fermi") {
    bg = uniform_background(g, 1.0, 1.0, V0, m, hbar, {}, k);
    bg.V_ext = harmonic_potential(g, cfg.num("background.trap"));
    bg.mu = cfg.num("background.mu");
    bg.n_L0 = thomas_fermi_conventional(bg.mu, bg.V_ext, V0, m);
    bg.n_H0 = thomas_fermi_density(cfg.num("background.mu_H"), bg.V_ext, V0, bg.n_L0, m);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (std::isnan(bg.n_H0[i]) || bg.n_H0[i] <= 0.0) mask_cell(bg, i);
  } else if (family == "vortex") {
    if (g.dims() != 2) throw ConfigError("grid.dims: the vortex family needs a 2-D grid");
    const int n = static_cast<int>(cfg.integer("background.circulation"));
    bg = uniform_background(g, cfg.num("background.n_H"), 1.0, V0, m, hbar, {}, k);
    const auto psi = vortex_wavefunction(n, cfg.num("background.amplitude"), g);
    for (std::size_t i = 0; i < g.size(); ++i) {
      bg.n_L0[i] = std::norm(psi[i]);
      bg.theta_L0[i] = hbar * std::arg(psi[i]);
    }
    bg.theta_H0 = phase_match(bg.theta_L0, k, hbar);
    bg.phase_period = 2.0 * kPi * hbar;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (psi.masked(i)) mask_cell(bg, i);
  } else if (family == "vortnovort") {
    if (g.dims() != 2) throw ConfigError("grid.dims: the vortnovort family needs a 2-D grid");
    bg = uniform_background(g, cfg.num("background.n_H"), cfg.num("background.n_L"), V0, m, hbar);
    const auto p = vortnovort_phase(cfg.num("background.w"), g);
    bg.theta_H0 = p.theta;
    bg.phase_period = kPi;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (p.core[i]) mask_cell(bg, i);
  } else {
    family_keys(family);  // throws
  }
  bg.meta["family"] = family;
  check_background(bg);
  return out;
}

// ---- figure 1 ----

Figure1Result figure1(double w, const Grid& g, double clip, double core_radius, double window) {
  if (g.dims() != 2) throw DimensionError("figure1 needs a 2-D grid");
  for (int a = 0; a < 2; ++a) {
    const Axis& ax = g.axis(a);
    if (ax.origin > -4.0 + 1e-12 || ax.coord(ax.n - 1) < 4.0 - 1e-12)
      throw PreconditionError("figure1 grid must cover [-4, 4]^2");
  }
  Figure1Result f;
  f.grid = g;
  f.w = w;
  f.clip = clip;
  const auto phase = vortnovort_phase(w, g);
  f.singular = phase.singular;
  f.core = phase.core;

  Background bg = uniform_background(g, 1.0, 1.0, 1.0);
  bg.phase_period = kPi;
  bg.theta_H0 = phase.theta;
  for (std::size_t c = 0; c < g.size(); ++c)
    if (phase.core[c]) mask_cell(bg, c);
  f.velocity = bg.phase_gradient();
  f.ergo = ergoregion_mask(bg, VelocityUnit::figure1);
  f.ergosurface = marching_squares(ergo_indicator(bg, VelocityUnit::figure1), 0.0);

  f.magnitude = ScalarField(g);
  f.display = ScalarField(g);
  f.quiet.assign(g.size(), 0);
  const double dV = g.cell_volume();
  for (std::size_t c = 0; c < g.size(); ++c) {
    const double x = g.coord(0, c), y = g.coord(1, c), r = std::hypot(x, y);
    if (phase.core[c] || r <= core_radius + 1e-9) {
      f.magnitude[c] = 0.0;
    } else if (phase.singular[c] || bg.masked(c)) {
      f.magnitude[c] = kMasked;
    } else {
      f.magnitude[c] = std::sqrt(f.velocity.norm2_at(c) / 2.0);
    }
    f.display[c] = std::isnan(f.magnitude[c]) ? kMasked : std::min(f.magnitude[c], clip);
    if (!std::isnan(f.display[c])) f.max_display = std::max(f.max_display, f.display[c]);
    if (r <= core_radius + 1e-9) f.max_core_display = std::max(f.max_core_display, std::abs(f.display[c]));
    if (f.ergo[c]) f.ergo_area += dV;
    if (r > core_radius + 1e-9 && r <= window + 1e-9 && !f.ergo[c]) f.quiet[c] = 1;

    const double hx = 0.5 * g.axis(0).dx, hy = 0.5 * g.axis(1).dx;
    if ((std::abs(x) < hx || std::abs(y) < hy) && r > core_radius && !phase.singular[c] && !std::isnan(phase.theta[c]))
      f.axis_residual = std::max(f.axis_residual, std::abs(std::sin(2.0 * phase.theta[c])));

    const Index3 idx = g.unflatten(c);
    const std::size_t mirror = g.flatten({g.axis(0).n - 1 - idx[0], g.axis(1).n - 1 - idx[1], 0});
    if (f.ergo[c] != f.ergo[mirror]) f.mask_symmetric = false;
  }
  f.quiet_area = quiet_area(g, f.ergo, core_radius, window);

  const auto sup = superposition_phase(w, g);
  f.superposition_difference = ScalarField(g);
  for (std::size_t c = 0; c < g.size(); ++c) {
    const double a = phase.theta[c], b = sup.theta[c];
    f.superposition_difference[c] = (std::isnan(a) || std::isnan(b)) ? kMasked : wrap_to(a - b, kPi);
  }
  return f;
}

void write_pgm(std::ostream& os, const ScalarField& f, double clip) {
  const Grid& g = f.grid();
  if (g.dims() != 2) throw DimensionError("graymaps need a 2-D field");
  const int nx = g.axis(0).n, ny = g.axis(1).n;
  os << "P2\n# linear: gray = round(254 * min(v, " << fmt(clip) << ") / " << fmt(clip)
     << "), 255 = masked\n" << nx << ' ' << ny << "\n255\n";
  for (int j = ny - 1; j >= 0; --j) {
    for (int i = 0; i < nx; ++i) {
      const double v = f[g.flatten({i, j, 0})];
      const int gray = std::isnan(v) ? 255 : static_cast<int>(std::lround(254.0 * std::clamp(v, 0.0, clip) / clip));
      os << gray << (i + 1 < nx ? ' ' : '\n');
    }
  }
}

void write_mask_pgm(std::ostream& os, const Grid& g, const std::vector<std::uint8_t>& mask) {
  ScalarField f(g);
  for (std::size_t c = 0; c < g.size(); ++c) f[c] = mask[c] ? 1.0 : 0.0;
  write_pgm(os, f, 1.0);
}

void write_quiver_csv(std::ostream& os, const VectorField& v, int stride) {
  const Grid& g = v.grid();
  if (g.dims() != 2) throw DimensionError("quiver output needs a 2-D field");
  stride = std::max(stride, 1);
  os << "x,y,vx,vy,magnitude\n";
  char buf[200];
  for (int i = 0; i < g.axis(0).n; i += stride) {
    for (int j = 0; j < g.axis(1).n; j += stride) {
      const std::size_t c = g.flatten({i, j, 0});
      if (std::isnan(v[0][c]) || std::isnan(v[1][c])) continue;
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", g.coord(0, c), g.coord(1, c), v[0][c], v[1][c],
                    std::sqrt(v.norm2_at(c)));
      os << buf;
    }
  }
}

// ---- bundles ----

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t bundle_hash(const fs::path& dir) {
  std::vector<std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string rel = fs::relative(e.path(), dir).generic_string();
    if (rel == "bundle.hash" || rel == "diagnostics.txt") continue;
    files.push_back(rel);
  }
  std::sort(files.begin(), files.end());
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](unsigned char b) {
    h ^= b;
    h *= 1099511628211ull;
  };
  for (const auto& rel : files) {
    for (unsigned char ch : rel) mix(ch);
    mix(0);
    std::ifstream is(dir / rel, std::ios::binary);
    char buf[1 << 14];
    while (is.read(buf, sizeof buf) || is.gcount() > 0) {
      for (std::streamsize i = 0; i < is.gcount(); ++i) mix(static_cast<unsigned char>(buf[i]));
    }
    mix(0);
  }
  return h;
}

namespace {

struct Bundle {
  fs::path dir;
  std::map<std::string, std::string> manifest;
  bool pass = true;

  void check(const std::string& name, bool ok) {
    manifest["check." + name] = ok ? "pass" : "fail";
    pass = pass && ok;
  }
};

void add_validity(Bundle& b, const Config& cfg, const Background& bg) {
  ValidityOptions vo;
  vo.kT = cfg.num("background.kT", 0.0);
  const auto rep = validate_assumptions(bg, vo);
  write_stream(b.dir / "validity.csv", [&](std::ostream& os) { write_report_csv(os, rep); });
  const bool waived = cfg.has("scenario.waiver");
  b.manifest["validity"] = rep.all_pass() ? "pass" : (waived ? "waived" : "fail");
  for (const auto& row : rep.rows) b.manifest["validity." + row.check] = row.pass ? "pass" : "fail";
  if (waived) b.manifest["waiver"] = cfg.str("scenario.waiver");
  b.pass = b.pass && (rep.all_pass() || waived);
}

void run_background(Bundle& b, const Config& cfg, bool with_metric) {
  auto built = build_background(cfg);
  const Background& bg = built.bg;
  write_background_bundle((b.dir / "background").string(), bg);
  for (const auto& [k, v] : built.notes) b.manifest[k] = v;
  b.manifest["masked_cells"] = std::to_string(bg.masked_count());
  if (!built.gpe_energy_history.empty()) {
    write_stream(b.dir / "gpe_energy.csv", [&](std::ostream& os) {
      os << "step,energy\n";
      for (std::size_t i = 0; i < built.gpe_energy_history.size(); ++i)
        os << i << ',' << fmt(built.gpe_energy_history[i]) << '\n';
    });
    b.check("gpe_energy_monotone", built.gpe_monotone);
  }
  add_validity(b, cfg, bg);
  if (!with_metric) return;

  const fs::path mdir = b.dir / "metric";
  fs::create_directories(mdir);
  if (bg.grid.dims() < 2) {
    const auto f = build_f_tensor(bg);
    for (int mu = 0; mu <= 1; ++mu)
      for (int nu = mu; nu <= 1; ++nu)
        write_dump((mdir / ("f_" + std::to_string(mu) + std::to_string(nu) + ".dump")).string(), f.component(mu, nu));
    b.manifest["metric"] = "f tensor only (d = 1 has no conformal factor)";
    return;
  }
  const auto m = build_metric(bg);
  write_metric_components(mdir.string(), m);
  const auto chk = verify_metric(m);
  b.manifest["metric.max_inverse_error"] = fmt(chk.max_inverse_error);
  b.manifest["metric.max_f_error"] = fmt(chk.max_f_error);
  b.manifest["metric.max_det_error"] = fmt(chk.max_det_error);
  b.manifest["metric.checked_cells"] = std::to_string(chk.checked_cells);
  b.check("metric", chk.pass());
  if (bg.grid.dims() == 2) {
    const auto unit = bg.meta.count("family") && bg.meta.at("family") == "vortnovort" ? VelocityUnit::figure1
                                                                                      : VelocityUnit::physical;
    const auto ergo = ergoregion_mask(bg, unit);
    write_stream(mdir / "ergosurface.csv",
                 [&](std::ostream& os) { write_polylines_csv(os, marching_squares(ergo_indicator(bg, unit), 0.0)); });
    write_stream(mdir / "ergomask.pgm", [&](std::ostream& os) { write_mask_pgm(os, bg.grid, ergo); });
  }
}

SeriesRow series_row(double t, double e, double q, const ScalarField& th) {
  double lo = th[0], hi = th[0];
  for (double v : th.values()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return {t, e, q, lo, hi};
}

void run_evolve(Bundle& b, const Config& cfg) {
  auto built = build_background(cfg);
  const Background& bg = built.bg;
  add_validity(b, cfg, bg);
  const double cfl = cfg.num("solver.cfl", 0.4);
  const long steps = cfg.integer("solver.steps");
  const long stride = std::max(1L, cfg.integer("solver.stride", 100));
  const long snap = cfg.integer("solver.snapshot_stride", 0);
  const std::string system = cfg.str("solver.system", "single");
  const std::string init = cfg.str("solver.init");
  const double amp = cfg.num("solver.amplitude", 1e-3);
  std::mt19937_64 rng(static_cast<std::uint64_t>(cfg.integer("scenario.seed", 1)));
  std::uniform_real_distribution<double> noise(-1.0, 1.0);
  std::vector<SeriesRow> rows;
  const fs::path sdir = b.dir / "snapshots";
  if (snap > 0) fs::create_directories(sdir);
  auto snapshot = [&](const std::string& tag, long n, const ScalarField& f) {
    char name[64];
    std::snprintf(name, sizeof name, "%s_%08ld.dump", tag.c_str(), n);
    write_dump((sdir / name).string(), f);
  };

  if (system == "single") {
    const SgParams p = sg_params(bg, cfl);
    const double dt = cfg.num("solver.dt", max_stable_dt(p));
    const double v = cfg.num("solver.velocity", 0.0), x0 = cfg.num("solver.x0", 0.0);
    SgState s;
    if (init == "kink") {
      s = kink_initial_condition(p, v, x0, dt);
    } else if (init == "standing") {
      s = standing_wave_initial_condition(p, static_cast<int>(cfg.integer("solver.mode", 1)), amp, dt);
    } else if (init == "noise" || init == "zero") {
      s.theta = ScalarField(bg.grid, 0.0);
      s.pi = ScalarField(bg.grid, 0.0);
      s.jump.assign(bg.grid.dims(), 0.0);
      s.dt = dt;
      if (init == "noise")
        for (double& x : s.theta.values()) x = amp * noise(rng);
    } else {
      throw ConfigError("solver.init: unknown '" + init + "' (expected kink, standing, noise or zero)");
    }
    const double e0 = energy(s, p);
    rows.push_back(series_row(s.t, e0, charge(s, p), s.theta));
    if (snap > 0) snapshot("theta", 0, s.theta);
    try {
      for (long i = 1; i <= steps; ++i) {
        step(s, p, dt);
        if (i % stride == 0 || i == steps) rows.push_back(series_row(s.t, energy(s, p), charge(s, p), s.theta));
        if (snap > 0 && i % snap == 0) snapshot("theta", i, s.theta);
      }
    } catch (const SgBlowUpError& e) {
      write_dump((b.dir / "last_good_theta.dump").string(), e.last_good.theta);
      write_dump((b.dir / "last_good_pi.dump").string(), e.last_good.pi);
      throw;
    }
    write_dump((b.dir / "final_theta.dump").string(), s.theta);
    write_dump((b.dir / "final_pi.dump").string(), s.pi);
    const double e1 = rows.back().energy;
    const double drift = std::abs(e1 - e0) / std::max(std::abs(e0), 1e-300);
    b.manifest["dt"] = fmt(dt);
    b.manifest["energy_initial"] = fmt(e0);
    b.manifest["energy_final"] = fmt(e1);
    b.manifest["energy_drift"] = fmt(drift);
    b.manifest["charge_final"] = fmt(rows.back().charge);
    b.manifest["mass2"] = fmt(p.mass2());
    if (init == "kink") {
      const double err = kink_shape_error(s, p, v, x0);
      b.manifest["kink_shape_error"] = fmt(err);
      b.check("kink_shape", err < 1e-3);
      b.check("charge_conserved", std::abs(rows.back().charge - rows.front().charge) < 1e-9);
    }
    if (e0 != 0.0) b.check("energy_drift", drift < 1e-3);
  } else if (system == "planes") {
    SgParams base = sg_params(bg, cfl);
    base.lambda = ScalarField(bg.grid, 0.0);
    PlanesParams p{base, base, ScalarField(bg.grid), cfg.num("solver.gamma0", kPi)};
    const double tp = cfg.num("solver.t_perp", 0.0);
    for (std::size_t c = 0; c < bg.grid.size(); ++c) p.amplitude[c] = tp * bg.n_H0[c];
    const double dt = cfg.num("solver.dt", max_stable_dt(base));
    PlanesState s{{ScalarField(bg.grid, 0.0), ScalarField(bg.grid, 0.0), std::vector<double>(bg.grid.dims(), 0.0)},
                  {ScalarField(bg.grid, 0.0), ScalarField(bg.grid, 0.0), std::vector<double>(bg.grid.dims(), 0.0)}};
    s.left.dt = s.right.dt = dt;
    if (init == "uniform" || init == "noise") {
      for (std::size_t c = 0; c < bg.grid.size(); ++c) {
        s.left.theta[c] = 0.5 * amp * bg.hbar + (init == "noise" ? 0.1 * amp * noise(rng) : 0.0);
        s.right.theta[c] = -0.5 * amp * bg.hbar + (init == "noise" ? 0.1 * amp * noise(rng) : 0.0);
      }
    } else if (init != "zero") {
      throw ConfigError("solver.init: unknown '" + init + "' for planes (expected uniform, noise or zero)");
    }
    b.manifest["planes_residual"] = fmt(planes_consistency_residual(p, s, 2, 1));
    auto gamma = [&] {
      ScalarField gm(bg.grid);
      for (std::size_t c = 0; c < gm.size(); ++c) gm[c] = (s.left.theta[c] - s.right.theta[c]) / bg.hbar;
      return gm;
    };
    const double e0 = planes_energy(s, p);
    rows.push_back(series_row(0.0, e0, charge(s.left, base), gamma()));
    for (long i = 1; i <= steps; ++i) {
      planes_step(s, p, dt);
      if (i % stride == 0 || i == steps)
        rows.push_back(series_row(s.left.t, planes_energy(s, p), charge(s.left, base), gamma()));
      if (snap > 0 && i % snap == 0) snapshot("gamma", i, gamma());
    }
    write_dump((b.dir / "final_gamma.dump").string(), gamma());
    const double e1 = rows.back().energy;
    const double drift = std::abs(e1 - e0) / std::max(std::abs(e0), 1e-300);
    b.manifest["dt"] = fmt(dt);
    b.manifest["gamma_omega2"] = fmt(planes_gamma_omega2(p));
    b.manifest["energy_drift"] = fmt(drift);
    if (e0 != 0.0) b.check("energy_drift", drift < 1e-3);
  } else {
    throw ConfigError("solver.system: unknown '" + system + "' (expected single or planes)");
  }
  write_stream(b.dir / "series.csv", [&](std::ostream& os) { write_time_series(os, rows); });
}

void run_figure1(Bundle& b, const Config& cfg) {
  const Grid g = grid_from_config(cfg);
  const double clip = cfg.num("figure.clip", 0.5), core = cfg.num("figure.core", 1.0);
  const auto f = figure1(cfg.num("figure.w"), g, clip, core, cfg.num("figure.window", 3.0));
  write_stream(b.dir / "magnitude.pgm", [&](std::ostream& os) { write_pgm(os, f.display, clip); });
  write_stream(b.dir / "ergomask.pgm", [&](std::ostream& os) { write_mask_pgm(os, g, f.ergo); });
  write_stream(b.dir / "quietmask.pgm", [&](std::ostream& os) { write_mask_pgm(os, g, f.quiet); });
  write_stream(b.dir / "quiver.csv", [&](std::ostream& os) {
    write_quiver_csv(os, f.velocity, static_cast<int>(cfg.integer("figure.quiver_stride", 8)));
  });
  write_stream(b.dir / "ergosurface.csv", [&](std::ostream& os) { write_polylines_csv(os, f.ergosurface); });
  write_dump((b.dir / "magnitude.dump").string(), f.magnitude);
  write_dump((b.dir / "superposition_difference.dump").string(), f.superposition_difference);
  double sup = 0.0;
  for (double v : f.superposition_difference.values())
    if (!std::isnan(v)) sup = std::max(sup, std::abs(v));
  b.manifest["axis_residual"] = fmt(f.axis_residual);
  b.manifest["ergo_area"] = fmt(f.ergo_area);
  b.manifest["quiet_area"] = fmt(f.quiet_area);
  b.manifest["max_display"] = fmt(f.max_display);
  b.manifest["superposition_max_difference"] = fmt(sup);
  b.check("axes_zero_phase", f.axis_residual < 1e-12);
  b.check("mask_symmetric", f.mask_symmetric);
  b.check("clip", f.max_display <= clip);
  b.check("core_zeroed", f.max_core_display == 0.0);
}

void run_fock(Bundle& b, const Config& cfg) {
  const auto family = parse_state_family(cfg.str("fock.family"));
  const cplx alpha(cfg.num("fock.alpha"), 0.0);
  const int cutoff = static_cast<int>(cfg.integer("fock.cutoff", default_cutoff(alpha)));
  FockState s;
  switch (family) {
    case StateFamily::coherent: s = coherent(alpha, cutoff); break;
    case StateFamily::even_cat: s = even_coherent(alpha, cutoff); break;
    case StateFamily::two_mode: s = two_mode_superposition(alpha, cplx(cfg.num("fock.w", 1.0), 0.0), cutoff); break;
  }
  write_stream(b.dir / "amplitudes.csv", [&](std::ostream& os) { write_amplitudes_csv(os, s); });
  write_stream(b.dir / "observables.csv", [&](std::ostream& os) {
    os << "observable,re,im\n";
    const std::pair<const char*, Observable> obs[] = {
        {"a0", Observable::a0}, {"a0_squared", Observable::a0_squared}, {"n0", Observable::n0}, {"n1", Observable::n1}};
    for (const auto& [name, o] : obs) {
      if (s.modes == 1 && o == Observable::n1) continue;
      const cplx v = expectation(s, o);
      os << name << ',' << fmt(v.real()) << ',' << fmt(v.imag()) << '\n';
    }
  });
  b.manifest["cutoff"] = std::to_string(cutoff);
  b.manifest["norm2"] = fmt(s.norm2());
  b.check("normalized", std::abs(s.norm2() - 1.0) < 1e-12);
  if (family == StateFamily::even_cat) {
    const double r = a0_squared_residual(s);
    b.manifest["a0_squared_residual"] = fmt(r);
    b.check("a0_squared_eigen", r < 1e-10);
  }
}

}  // namespace

RunResult run_scenario(const Config& cfg, const fs::path& dir) {
  validate_config(cfg);
  if (!fs::is_directory(dir)) throw InputError("output directory '" + dir.string() + "' does not exist");
  Bundle b{dir, {}, true};
  const std::string type = cfg.str("scenario.type");
  for (const auto& [k, v] : cfg.values())
    if (k != "output.dir") b.manifest["config." + k] = v;
  if (type == "background" || type == "metric") {
    run_background(b, cfg, type == "metric");
  } else if (type == "evolve") {
    run_evolve(b, cfg);
  } else if (type == "figure1") {
    run_figure1(b, cfg);
  } else {
    run_fock(b, cfg);
  }
  b.manifest["result"] = b.pass ? "pass" : "fail";
  write_stream(dir / "manifest.txt", [&](std::ostream& os) {
    for (const auto& [k, v] : b.manifest) os << k << '=' << v << '\n';
  });
  RunResult r;
  r.dir = dir;
  r.manifest = b.manifest;
  r.pass = b.pass;
  r.hash = bundle_hash(dir);
  write_text(dir / "bundle.hash", hex64(r.hash) + "\n");
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) r.files.push_back(fs::relative(e.path(), dir).generic_string());
  std::sort(r.files.begin(), r.files.end());
  return r;
}

}  // namespace sgacs

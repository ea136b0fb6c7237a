#include "sgacs/grid.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

namespace sgacs {

std::string to_string(Boundary bc) {
  switch (bc) {
    case Boundary::periodic: return "periodic";
    case Boundary::fixed_value: return "fixed";
    case Boundary::zero_normal: return "neumann";
  }
  return "unknown";
}

Boundary parse_boundary(const std::string& name) {
  if (name == "periodic") return Boundary::periodic;
  if (name == "fixed" || name == "fixed_value" || name == "dirichlet") return Boundary::fixed_value;
  if (name == "neumann" || name == "zero_normal") return Boundary::zero_normal;
  throw ConfigError("unknown boundary rule '" + name + "'");
}

Grid::Grid(std::vector<Axis> axes, std::optional<TauAxis> tau) : axes_(std::move(axes)), tau_(tau) {
  if (axes_.empty() || axes_.size() > 3) {
    throw DimensionError("grid needs 1 to 3 spatial axes, got " + std::to_string(axes_.size()));
  }
  for (const Axis& a : axes_) {
    if (a.n < 1) throw SizeError("axis with no points");
    if (!(a.dx > 0.0) || !std::isfinite(a.dx)) throw GridError("grid spacing must be positive");
  }
  if (tau_ && (tau_->n < 1 || !(tau_->extent > 0.0))) {
    throw GridError("imaginary-time axis needs points and a positive extent");
  }
  strides_.assign(axes_.size(), 1);
  for (int a = static_cast<int>(axes_.size()) - 2; a >= 0; --a) {
    strides_[a] = strides_[a + 1] * static_cast<std::size_t>(axes_[a + 1].n);
  }
  spatial_size_ = strides_[0] * static_cast<std::size_t>(axes_[0].n);
}

const TauAxis& Grid::tau() const {
  if (!tau_) throw GridError("grid has no imaginary-time axis");
  return *tau_;
}

Index3 Grid::unflatten(std::size_t s) const {
  Index3 idx{0, 0, 0};
  for (int a = 0; a < dims(); ++a) {
    idx[a] = static_cast<int>((s / strides_[a]) % static_cast<std::size_t>(axes_[a].n));
  }
  return idx;
}

std::size_t Grid::flatten(const Index3& idx) const {
  std::size_t s = 0;
  for (int a = 0; a < dims(); ++a) s += static_cast<std::size_t>(idx[a]) * strides_[a];
  return s;
}

double Grid::coord(int a, std::size_t spatial_index) const {
  const int i = static_cast<int>((spatial_index / strides_.at(a)) % static_cast<std::size_t>(axes_[a].n));
  return axes_[a].coord(i);
}

double Grid::cell_volume() const {
  double v = 1.0;
  for (const Axis& a : axes_) v *= a.dx;
  return v;
}

double Grid::measure(double hbar) const {
  return tau_ ? cell_volume() * tau_->dtau() / hbar : cell_volume();
}

Grid make_box_grid(int dims, int n, double lo, double hi, Boundary bc) {
  const double dx = bc == Boundary::periodic ? (hi - lo) / n : (hi - lo) / (n - 1);
  std::vector<Axis> axes(dims, Axis{n, dx, lo, bc});
  return Grid(std::move(axes));
}

VectorField::VectorField(const Grid& grid, int components) {
  components_.assign(components, ScalarField(grid));
}

VectorField::VectorField(std::vector<ScalarField> components) : components_(std::move(components)) {
  if (components_.empty()) throw SizeError("vector field needs at least one component");
  for (const auto& c : components_) components_.front().check_same(c);
}

double wrap_to(double value, double period) {
  return value - period * std::floor(value / period + 0.5);
}

namespace {

template <class T>
Field<T> axis_derivative(const Field<T>& f, int a, const DerivativeOptions& opt) {
  const Grid& g = f.grid();
  if (a < 0 || a >= g.dims()) throw GridError("derivative along missing axis " + std::to_string(a));
  const Axis& ax = g.axis(a);
  if (ax.n < 3) {
    throw SizeError("axis " + std::to_string(a) + " has " + std::to_string(ax.n) +
                    " points; a derivative needs at least 3");
  }
  const std::size_t st = g.stride(a);
  const std::size_t ns = g.spatial_size();
  const int n = ax.n;
  const double inv2 = 1.0 / (2.0 * ax.dx);
  const T nan_value = T(std::numeric_limits<double>::quiet_NaN());

  auto diff = [&](T hi, T lo) -> T {
    T d = hi - lo;
    if constexpr (std::is_same_v<T, double>) {
      if (opt.wrap_period > 0.0) d = wrap_to(d, opt.wrap_period);
    }
    return d;
  };

  Field<T> out(g);
  const auto& v = f.data();
  for (int t = 0; t < g.tau_points(); ++t) {
    const std::size_t base = static_cast<std::size_t>(t) * ns;
    for (std::size_t s = 0; s < ns; ++s) {
      const int i = static_cast<int>((s / st) % static_cast<std::size_t>(n));
      const std::size_t p = base + s;
      auto at = [&](int k) -> T { return v[p + (static_cast<std::ptrdiff_t>(k) - i) * static_cast<std::ptrdiff_t>(st)]; };
      T r{};
      if (i > 0 && i < n - 1) {
        r = diff(at(i + 1), at(i - 1)) * inv2;
      } else {
        switch (ax.bc) {
          case Boundary::periodic: {
            const T jump = T(opt.jump);
            if (i == 0) r = diff(at(1), at(n - 1) - jump) * inv2;
            else r = diff(at(0) + jump, at(n - 2)) * inv2;
            break;
          }
          case Boundary::fixed_value: {
            if (i == 0) r = (4.0 * diff(at(1), at(0)) - diff(at(2), at(0))) * inv2;
            else r = -(4.0 * diff(at(n - 2), at(n - 1)) - diff(at(n - 3), at(n - 1))) * inv2;
            break;
          }
          case Boundary::zero_normal: {
            const int inner = i == 0 ? 1 : n - 2;
            const T nb = at(inner);
            if (Field<T>::is_nan(nb) || Field<T>::is_nan(at(i))) {
              r = nan_value;
            } else if (opt.odd_mirror) {
              r = (i == 0 ? nb : -nb) * (2.0 * inv2);
            } else {
              r = T{};
            }
            break;
          }
        }
      }
      out[p] = r;
    }
  }
  return out;
}

template <class T>
Field<T> tau_derivative_impl(const Field<T>& f) {
  const Grid& g = f.grid();
  const int nt = g.tau().n;
  if (nt < 3) throw SizeError("imaginary-time derivative needs at least 3 tau points");
  const std::size_t ns = g.spatial_size();
  const double inv2 = 1.0 / (2.0 * g.tau().dtau());
  Field<T> out(g);
  for (int t = 0; t < nt; ++t) {
    const std::size_t up = static_cast<std::size_t>((t + 1) % nt) * ns;
    const std::size_t dn = static_cast<std::size_t>((t + nt - 1) % nt) * ns;
    const std::size_t here = static_cast<std::size_t>(t) * ns;
    for (std::size_t s = 0; s < ns; ++s) out[here + s] = (f[up + s] - f[dn + s]) * inv2;
  }
  return out;
}

}  // namespace

ScalarField derivative(const ScalarField& f, int axis, const DerivativeOptions& opt) {
  return axis_derivative(f, axis, opt);
}

ComplexField derivative(const ComplexField& f, int axis, const DerivativeOptions& opt) {
  return axis_derivative(f, axis, opt);
}

VectorField gradient(const ScalarField& f) {
  std::vector<ScalarField> comps;
  for (int a = 0; a < f.grid().dims(); ++a) comps.push_back(derivative(f, a));
  return VectorField(std::move(comps));
}

VectorField gradient(const ScalarField& f, std::span<const double> jumps) {
  std::vector<ScalarField> comps;
  for (int a = 0; a < f.grid().dims(); ++a) {
    DerivativeOptions opt;
    opt.jump = a < static_cast<int>(jumps.size()) ? jumps[a] : 0.0;
    comps.push_back(derivative(f, a, opt));
  }
  return VectorField(std::move(comps));
}

VectorField gradient_wrapped(const ScalarField& f, double period) {
  std::vector<ScalarField> comps;
  for (int a = 0; a < f.grid().dims(); ++a) {
    DerivativeOptions opt;
    opt.wrap_period = period;
    comps.push_back(derivative(f, a, opt));
  }
  return VectorField(std::move(comps));
}

ScalarField divergence(const VectorField& u) {
  const Grid& g = u.grid();
  if (u.components() != g.dims()) {
    throw GridError("divergence needs one component per spatial axis");
  }
  ScalarField out(g, 0.0);
  for (int a = 0; a < g.dims(); ++a) {
    DerivativeOptions opt;
    opt.odd_mirror = true;
    out += derivative(u[a], a, opt);
  }
  return out;
}

ScalarField laplacian(const ScalarField& f) {
  for (int a = 0; a < f.grid().dims(); ++a) {
    if (f.grid().axis(a).n < 4) {
      throw SizeError("laplacian needs at least 4 points on axis " + std::to_string(a));
    }
  }
  return divergence(gradient(f));
}

ScalarField tau_derivative(const ScalarField& f) { return tau_derivative_impl(f); }
ComplexField tau_derivative(const ComplexField& f) { return tau_derivative_impl(f); }

double integrate(const ScalarField& f, double hbar) {
  double s = 0.0;
  for (double v : f.values()) {
    if (!std::isnan(v)) s += v;
  }
  return s * f.grid().measure(hbar);
}

double inner(const ScalarField& f, const ScalarField& g, double hbar) {
  f.check_same(g);
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double p = f[i] * g[i];
    if (!std::isnan(p)) s += p;
  }
  return s * f.grid().measure(hbar);
}

std::complex<double> inner(const ComplexField& f, const ComplexField& g) {
  f.check_same(g);
  std::complex<double> s{};
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f.masked(i) || g.masked(i)) continue;
    s += std::conj(f[i]) * g[i];
  }
  return s * f.grid().measure();
}

double max_abs(const ScalarField& f) {
  double m = 0.0;
  for (double v : f.values()) {
    if (!std::isnan(v)) m = std::max(m, std::abs(v));
  }
  return m;
}

ScalarField unmask(const ScalarField& f, double fill) {
  ScalarField out = f;
  for (double& v : out.values()) {
    if (std::isnan(v)) v = fill;
  }
  return out;
}

ScalarField broadcast_tau(const ScalarField& spatial, const Grid& target) {
  if (!target.same_space(spatial.grid())) throw GridError("broadcast across different spatial grids");
  ScalarField out(target);
  const std::size_t ns = target.spatial_size();
  for (int t = 0; t < target.tau_points(); ++t) {
    for (std::size_t s = 0; s < ns; ++s) out[t * ns + s] = spatial[s];
  }
  return out;
}

namespace {

template <class Range, class Fn>
std::string join(const Range& r, Fn fn) {
  std::string s;
  bool first = true;
  for (const auto& x : r) {
    if (!first) s += ',';
    s += fn(x);
    first = false;
  }
  return s;
}

std::string fmt_double(double v) {
  if (std::isnan(v)) return "NaN";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

}  // namespace

std::string dump_header(const Grid& g) {
  std::string h = "# GRID d=" + std::to_string(g.dims());
  h += " n=" + join(g.axes(), [](const Axis& a) { return std::to_string(a.n); });
  h += " dx=" + join(g.axes(), [](const Axis& a) { return fmt_double(a.dx); });
  h += " origin=" + join(g.axes(), [](const Axis& a) { return fmt_double(a.origin); });
  h += " bc=" + join(g.axes(), [](const Axis& a) { return to_string(a.bc); });
  if (g.has_tau()) {
    h += " ntau=" + std::to_string(g.tau().n) + " betahbar=" + fmt_double(g.tau().extent);
  }
  return h;
}

void write_dump(std::ostream& os, const ScalarField& f) {
  os << dump_header(f.grid()) << '\n';
  for (double v : f.values()) os << fmt_double(v) << '\n';
}

void write_dump(const std::string& path, const ScalarField& f) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  write_dump(os, f);
}

ScalarField read_dump(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("# GRID", 0) != 0) {
    throw InputError("grid dump must start with '# GRID'");
  }
  std::map<std::string, std::string> kv;
  std::stringstream ss(line.substr(6));
  std::string tok;
  while (ss >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw InputError("malformed grid dump header token '" + tok + "'");
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  for (const char* key : {"d", "n", "dx", "origin", "bc"}) {
    if (!kv.count(key)) throw InputError(std::string("grid dump header lacks '") + key + "'");
  }
  const int d = std::stoi(kv["d"]);
  const auto ns = split(kv["n"], ','), dxs = split(kv["dx"], ','), os = split(kv["origin"], ','),
             bcs = split(kv["bc"], ',');
  if (static_cast<int>(ns.size()) != d || dxs.size() != ns.size() || os.size() != ns.size() ||
      bcs.size() != ns.size()) {
    throw InputError("grid dump header lists inconsistent axis counts");
  }
  std::vector<Axis> axes;
  for (int a = 0; a < d; ++a) {
    axes.push_back(Axis{std::stoi(ns[a]), std::stod(dxs[a]), std::stod(os[a]), parse_boundary(bcs[a])});
  }
  std::optional<TauAxis> tau;
  if (kv.count("ntau")) tau = TauAxis{std::stoi(kv["ntau"]), std::stod(kv["betahbar"])};
  Grid g(std::move(axes), tau);
  std::vector<double> values;
  values.reserve(g.size());
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    values.push_back(line == "NaN" ? kMasked : std::stod(line));
  }
  return ScalarField(std::move(g), std::move(values));
}

ScalarField read_dump(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open grid dump '" + path + "'");
  return read_dump(is);
}

}  // namespace sgacs

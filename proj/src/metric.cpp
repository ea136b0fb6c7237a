#include "sgacs/metric.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <ostream>
#include <string>

namespace sgacs {

SymTensorField::SymTensorField(const Grid& g, int rank)
    : grid_(g), rank_(rank), packed_(rank * (rank + 1) / 2), v_(g.size() * packed_, 0.0) {}

void SymTensorField::mask(std::size_t cell) {
  std::fill_n(v_.begin() + static_cast<std::ptrdiff_t>(cell * packed_), packed_, kMasked);
}

Eigen::MatrixXd SymTensorField::matrix(std::size_t cell) const {
  Eigen::MatrixXd m(rank_, rank_);
  for (int a = 0; a < rank_; ++a)
    for (int b = 0; b < rank_; ++b) m(a, b) = (*this)(cell, a, b);
  return m;
}

ScalarField SymTensorField::component(int mu, int nu) const {
  ScalarField out(grid_);
  for (std::size_t c = 0; c < grid_.size(); ++c) out[c] = (*this)(c, mu, nu);
  return out;
}

namespace {

bool bad_cell(const Background& bg, const ScalarField& cs2, const VectorField& u, std::size_t c) {
  if (bg.masked(c) || !(cs2[c] > 0.0) || !std::isfinite(cs2[c])) return true;
  for (int a = 0; a < u.components(); ++a)
    if (!std::isfinite(u[a][c])) return true;
  return false;
}

}  // namespace

SymTensorField build_f_tensor(const Background& bg) {
  const int d = bg.grid.dims();
  const ScalarField cs2 = bg.cs2();
  const VectorField u = bg.flow();
  SymTensorField f(bg.grid, d + 1);
  const double iv = 1.0 / bg.V0;
  for (std::size_t c = 0; c < bg.grid.size(); ++c) {
    if (bad_cell(bg, cs2, u, c)) {
      f.mask(c);
      continue;
    }
    f.set(c, 0, 0, -iv);
    for (int i = 0; i < d; ++i) {
      f.set(c, 0, i + 1, u[i][c] * iv);
      for (int j = i; j < d; ++j) f.set(c, i + 1, j + 1, ((i == j ? cs2[c] : 0.0) - u[i][c] * u[j][c]) * iv);
    }
  }
  return f;
}

double f_determinant(double cs2, double V0, int d) { return -std::pow(cs2, d) / std::pow(V0, d + 1); }

double sqrt_neg_g(double cs2, double V0, int d) {
  if (d < 2) throw DimensionError("sqrt(-g) is undetermined in one spatial dimension; use the f tensor directly");
  return std::pow(std::pow(cs2, d) / std::pow(V0, d + 1), 1.0 / (d - 1));
}

AcsMetric build_metric(const Background& bg) {
  const int d = bg.grid.dims();
  if (d < 2) throw DimensionError("the analogue metric needs d >= 2; the 1-D solver consumes f^{munu} directly");
  AcsMetric m;
  m.d = d;
  m.f = build_f_tensor(bg);
  m.cs2 = bg.cs2();
  m.u = bg.flow();
  m.g_up = SymTensorField(bg.grid, d + 1);
  m.g_down = SymTensorField(bg.grid, d + 1);
  m.sqrt_neg_g = ScalarField(bg.grid, kMasked);
  m.cs = ScalarField(bg.grid, kMasked);
  m.mask.assign(bg.grid.size(), 0);
  for (std::size_t c = 0; c < bg.grid.size(); ++c) {
    if (m.f.masked(c)) {
      m.mask[c] = 1;
      m.g_up.mask(c);
      m.g_down.mask(c);
      continue;
    }
    const double c2 = m.cs2[c];
    const double s = sqrt_neg_g(c2, bg.V0, d);
    m.sqrt_neg_g[c] = s;
    m.cs[c] = std::sqrt(c2);
    for (int a = 0; a <= d; ++a)
      for (int b = a; b <= d; ++b) m.g_up.set(c, a, b, m.f(c, a, b) / s);
    const double k = s * bg.V0 / c2;
    double uu = 0.0;
    for (int i = 0; i < d; ++i) uu += m.u[i][c] * m.u[i][c];
    m.g_down.set(c, 0, 0, k * (-c2 + uu));
    for (int i = 0; i < d; ++i) {
      m.g_down.set(c, 0, i + 1, k * m.u[i][c]);
      for (int j = i; j < d; ++j) m.g_down.set(c, i + 1, j + 1, i == j ? k : 0.0);
    }
  }
  return m;
}

MetricCheck verify_metric(const AcsMetric& m) {
  MetricCheck r;
  const int n = m.d + 1;
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  for (std::size_t c = 0; c < m.grid().size(); ++c) {
    if (m.mask[c]) continue;
    ++r.checked_cells;
    const Eigen::MatrixXd up = m.g_up.matrix(c), dn = m.g_down.matrix(c), f = m.f.matrix(c);
    r.max_inverse_error = std::max(r.max_inverse_error, (up * dn - I).cwiseAbs().maxCoeff());
    const double s = m.sqrt_neg_g[c];
    r.max_f_error = std::max(r.max_f_error, (s * up - f).cwiseAbs().maxCoeff() / f.cwiseAbs().maxCoeff());
    const double V0 = -1.0 / f(0, 0);
    const double closed = f_determinant(m.cs2[c], V0, m.d);
    r.max_det_error = std::max(r.max_det_error, std::abs(f.determinant() - closed) / std::abs(closed));
    const double gdet = dn.determinant();
    r.max_sqrt_g_error = std::max(r.max_sqrt_g_error, std::abs(std::sqrt(-gdet) - s) / s);
    if (!(s > 0.0)) r.sqrt_g_positive = false;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dn, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    int neg = 0, pos = 0;
    for (int i = 0; i < n; ++i) (ev(i) < 0.0 ? neg : pos) += ev(i) != 0.0 ? 1 : 0;
    if (neg != 1 || pos != m.d) r.signature_ok = false;
  }
  return r;
}

ScalarField ergo_indicator(const Background& bg, VelocityUnit unit) {
  ScalarField out(bg.grid, kMasked);
  if (unit == VelocityUnit::figure1) {
    const VectorField gth = bg.phase_gradient();
    for (std::size_t c = 0; c < bg.grid.size(); ++c)
      if (!bg.masked(c)) out[c] = gth.norm2_at(c) - 0.5;
  } else {
    const VectorField u = bg.flow();
    const ScalarField cs2 = bg.cs2();
    for (std::size_t c = 0; c < bg.grid.size(); ++c)
      if (!bg.masked(c)) out[c] = u.norm2_at(c) - cs2[c];
  }
  return out;
}

std::vector<std::uint8_t> ergoregion_mask(const Background& bg, VelocityUnit unit) {
  const ScalarField s = ergo_indicator(bg, unit);
  std::vector<std::uint8_t> m(s.size(), 0);
  for (std::size_t c = 0; c < s.size(); ++c) m[c] = s[c] >= 0.0 ? 1 : 0;  // NaN compares false
  return m;
}

std::vector<Polyline> marching_squares(const ScalarField& f, double level) {
  const Grid& g = f.grid();
  if (g.dims() != 2) throw DimensionError("marching squares needs a 2-D field");
  const int nx = g.axis(0).n, ny = g.axis(1).n;
  auto val = [&](int i, int j) { return f[static_cast<std::size_t>(i) * ny + j]; };
  // Edge ids: 2*(i*ny + j) along axis 0 from (i,j); +1 along axis 1 from (i,j).
  auto hid = [&](int i, int j) { return 2L * (static_cast<long>(i) * ny + j); };
  auto vid = [&](int i, int j) { return 2L * (static_cast<long>(i) * ny + j) + 1; };
  std::map<long, std::pair<double, double>> point;
  auto cross = [&](long id, int i0, int j0, int i1, int j1) {
    if (point.count(id)) return;
    const double a = val(i0, j0), b = val(i1, j1);
    const double t = (level - a) / (b - a);
    const double x0 = g.axis(0).coord(i0), y0 = g.axis(1).coord(j0);
    const double x1 = g.axis(0).coord(i1), y1 = g.axis(1).coord(j1);
    point[id] = {x0 + t * (x1 - x0), y0 + t * (y1 - y0)};
  };

  std::vector<std::pair<long, long>> segs;
  for (int i = 0; i + 1 < nx; ++i)
    for (int j = 0; j + 1 < ny; ++j) {
      const double c[4] = {val(i, j), val(i + 1, j), val(i + 1, j + 1), val(i, j + 1)};
      if (std::any_of(c, c + 4, [](double v) { return std::isnan(v); })) continue;
      bool up[4];
      for (int k = 0; k < 4; ++k) up[k] = c[k] >= level;
      const long e[4] = {hid(i, j), vid(i + 1, j), hid(i, j + 1), vid(i, j)};
      auto edge = [&](int k) {
        switch (k) {
          case 0: cross(e[0], i, j, i + 1, j); break;
          case 1: cross(e[1], i + 1, j, i + 1, j + 1); break;
          case 2: cross(e[2], i, j + 1, i + 1, j + 1); break;
          default: cross(e[3], i, j, i, j + 1); break;
        }
        return e[k];
      };
      std::vector<int> hit;
      for (int k = 0; k < 4; ++k)
        if (up[k] != up[(k + 1) % 4]) hit.push_back(k);
      if (hit.size() == 2) {
        segs.emplace_back(edge(hit[0]), edge(hit[1]));
      } else if (hit.size() == 4) {
        const bool centre = 0.25 * (c[0] + c[1] + c[2] + c[3]) >= level;
        if (centre == up[0]) {
          segs.emplace_back(edge(0), edge(1));
          segs.emplace_back(edge(2), edge(3));
        } else {
          segs.emplace_back(edge(3), edge(0));
          segs.emplace_back(edge(1), edge(2));
        }
      }
    }

  // Chain segments through shared edges.
  std::map<long, std::vector<std::size_t>> at;
  for (std::size_t s = 0; s < segs.size(); ++s) {
    at[segs[s].first].push_back(s);
    at[segs[s].second].push_back(s);
  }
  std::vector<std::uint8_t> used(segs.size(), 0);
  std::vector<Polyline> lines;
  auto walk = [&](std::size_t s0, long start) {
    Polyline pl{point[start]};
    long cur = start;
    std::size_t s = s0;
    while (true) {
      used[s] = 1;
      cur = segs[s].first == cur ? segs[s].second : segs[s].first;
      pl.push_back(point[cur]);
      std::size_t next = segs.size();
      for (std::size_t t : at[cur])
        if (!used[t]) next = t;
      if (next == segs.size()) break;
      s = next;
    }
    lines.push_back(std::move(pl));
  };
  for (auto& [id, list] : at)
    if (list.size() == 1 && !used[list[0]]) walk(list[0], id);
  for (std::size_t s = 0; s < segs.size(); ++s)
    if (!used[s]) walk(s, segs[s].first);
  return lines;
}

void write_polylines_csv(std::ostream& os, const std::vector<Polyline>& lines) {
  os << "x,y,segment_id\n";
  char buf[96];
  for (std::size_t k = 0; k < lines.size(); ++k)
    for (const auto& [x, y] : lines[k]) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%zu\n", x, y, k);
      os << buf;
    }
}

double quiet_area(const Grid& g, const std::vector<std::uint8_t>& ergo, double core_radius, double window) {
  if (g.dims() != 2) throw DimensionError("quiet area is defined for 2-D grids");
  std::size_t count = 0;
  for (std::size_t c = 0; c < g.size(); ++c) {
    const double r = std::hypot(g.coord(0, c), g.coord(1, c));
    // radii are compared with a little slack so mirrored cells agree
    if (r > core_radius + 1e-9 && r <= window + 1e-9 && !ergo[c]) ++count;
  }
  return static_cast<double>(count) * g.cell_volume();
}

void write_metric_components(const std::string& dir, const AcsMetric& m) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  for (int a = 0; a <= m.d; ++a)
    for (int b = a; b <= m.d; ++b) {
      const std::string mn = std::to_string(a) + std::to_string(b);
      write_dump((fs::path(dir) / ("f_" + mn + ".dump")).string(), m.f.component(a, b));
      write_dump((fs::path(dir) / ("g_up_" + mn + ".dump")).string(), m.g_up.component(a, b));
      write_dump((fs::path(dir) / ("g_down_" + mn + ".dump")).string(), m.g_down.component(a, b));
    }
  write_dump((fs::path(dir) / "sqrt_neg_g.dump").string(), m.sqrt_neg_g);
  write_dump((fs::path(dir) / "cs.dump").string(), m.cs);
}

}  // namespace sgacs

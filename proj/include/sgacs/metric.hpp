#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "sgacs/background.hpp"
#include "sgacs/grid.hpp"

namespace sgacs {

// Per-cell symmetric (d+1)x(d+1) matrices, upper triangle packed.
// Index 0 is time. Masked cells hold NaN.
class SymTensorField {
 public:
  SymTensorField() = default;
  SymTensorField(const Grid& g, int rank);

  const Grid& grid() const { return grid_; }
  int rank() const { return rank_; }
  double operator()(std::size_t cell, int mu, int nu) const { return v_[cell * packed_ + slot(mu, nu)]; }
  void set(std::size_t cell, int mu, int nu, double value) { v_[cell * packed_ + slot(mu, nu)] = value; }
  bool masked(std::size_t cell) const { return std::isnan(v_[cell * packed_]); }
  void mask(std::size_t cell);
  Eigen::MatrixXd matrix(std::size_t cell) const;
  ScalarField component(int mu, int nu) const;

 private:
  int slot(int mu, int nu) const {
    if (mu > nu) std::swap(mu, nu);
    return mu * rank_ - mu * (mu - 1) / 2 + (nu - mu);
  }
  Grid grid_;
  int rank_ = 0;
  int packed_ = 0;
  std::vector<double> v_;
};

// f^{00} = -1/V0, f^{0j} = u_j/V0, f^{ij} = (c^2 delta_ij - u_i u_j)/V0.
// Cells with c^2 <= 0 or masked in bg come back masked.
SymTensorField build_f_tensor(const Background& bg);

// -c^{2d} / V0^{d+1}
double f_determinant(double cs2, double V0, int d);
// (c^{2d} / V0^{d+1})^{1/(d-1)}; throws DimensionError for d = 1.
double sqrt_neg_g(double cs2, double V0, int d);

struct AcsMetric {
  int d = 0;
  SymTensorField f, g_up, g_down;
  ScalarField sqrt_neg_g, cs, cs2;
  VectorField u;
  std::vector<std::uint8_t> mask;

  const Grid& grid() const { return cs.grid(); }
};

// g^{munu} = f^{munu} / sqrt(-g); g_{munu} in closed block form
//   sqrt(-g) V0 / c^2 [[-c^2 + u.u, u], [u^T, I]].
// d = 1 has no conformal factor and throws DimensionError; use build_f_tensor.
AcsMetric build_metric(const Background& bg);

struct MetricCheck {
  double max_inverse_error = 0.0;      // |g^{mu nu} g_{nu rho} - delta|
  double max_f_error = 0.0;            // |sqrt(-g) g^{munu} - f^{munu}| / |f|
  double max_det_error = 0.0;          // numeric det f vs closed form, relative
  double max_sqrt_g_error = 0.0;       // sqrt(-g) from the numeric det of g_{munu}, relative
  bool signature_ok = true;            // one negative, d positive eigenvalues of g_{munu}
  bool sqrt_g_positive = true;
  std::size_t checked_cells = 0;
  bool pass(double tol = 1e-10) const {
    return signature_ok && sqrt_g_positive && max_inverse_error < tol && max_f_error < tol && max_det_error < tol &&
           max_sqrt_g_error < tol;
  }
};

// Numeric cross-checks with Eigen on every unmasked cell.
MetricCheck verify_metric(const AcsMetric& m);

enum class VelocityUnit { physical, figure1 };

// physical: |u|^2 >= c^2. figure1: |grad theta_H0|^2 >= 1/2 with theta unitless.
std::vector<std::uint8_t> ergoregion_mask(const Background& bg, VelocityUnit unit);
// The scalar whose zero level is the ergosurface (NaN where masked).
ScalarField ergo_indicator(const Background& bg, VelocityUnit unit);

using Polyline = std::vector<std::pair<double, double>>;

// Level set of a 2-D field by marching squares with linear interpolation
// along cell edges. Squares touching a NaN are skipped. Saddles are split
// by the centre average.
std::vector<Polyline> marching_squares(const ScalarField& f, double level);
void write_polylines_csv(std::ostream& os, const std::vector<Polyline>& lines);

// Area of cells with core_radius < r <= window that are outside the ergoregion.
double quiet_area(const Grid& g, const std::vector<std::uint8_t>& ergo, double core_radius, double window);

// One dump per component: f_mn.dump, g_up_mn.dump, g_down_mn.dump, plus
// sqrt_neg_g.dump and cs.dump.
void write_metric_components(const std::string& dir, const AcsMetric& m);

}  // namespace sgacs

#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sgacs/error.hpp"

namespace sgacs {

// Units used throughout: lengths in healing lengths, densities in a
// reference density, and hbar = m = 1 unless a Background overrides them.

enum class Boundary { periodic, fixed_value, zero_normal };

std::string to_string(Boundary bc);
Boundary parse_boundary(const std::string& name);

struct Axis {
  int n = 0;
  double dx = 1.0;
  double origin = 0.0;
  Boundary bc = Boundary::periodic;

  double coord(int i) const { return origin + i * dx; }
  double length() const { return n * dx; }
  bool operator==(const Axis&) const = default;
};

// Imaginary-time axis of the partition function; always periodic.
struct TauAxis {
  int n = 0;
  double extent = 1.0;  // beta * hbar

  double dtau() const { return extent / n; }
  bool operator==(const TauAxis&) const = default;
};

using Index3 = std::array<int, 3>;

class Grid {
 public:
  Grid() = default;
  explicit Grid(std::vector<Axis> axes, std::optional<TauAxis> tau = std::nullopt);

  int dims() const { return static_cast<int>(axes_.size()); }
  const Axis& axis(int a) const { return axes_.at(a); }
  const std::vector<Axis>& axes() const { return axes_; }

  bool has_tau() const { return tau_.has_value(); }
  const TauAxis& tau() const;
  int tau_points() const { return tau_ ? tau_->n : 1; }

  std::size_t spatial_size() const { return spatial_size_; }
  std::size_t size() const { return spatial_size_ * tau_points(); }

  // Row-major: the last spatial axis varies fastest, tau slowest.
  std::size_t stride(int a) const { return strides_.at(a); }
  Index3 unflatten(std::size_t spatial_index) const;
  std::size_t flatten(const Index3& idx) const;

  double coord(int a, std::size_t spatial_index) const;
  double cell_volume() const;
  // Measure of one point of the grid in an action integral: cell volume
  // times dtau / hbar when the tau axis exists.
  double measure(double hbar = 1.0) const;

  Grid spatial() const { return Grid(axes_); }
  Grid with_tau(TauAxis tau) const { return Grid(axes_, tau); }
  bool same_space(const Grid& other) const { return axes_ == other.axes_; }

  bool operator==(const Grid& other) const {
    return axes_ == other.axes_ && tau_ == other.tau_;
  }

 private:
  std::vector<Axis> axes_;
  std::optional<TauAxis> tau_;
  std::vector<std::size_t> strides_;
  std::size_t spatial_size_ = 0;
};

// Uniform grid helper with `n` points per axis. Periodic axes cover
// [lo, hi) (period hi - lo); other rules cover [lo, hi] inclusive.
Grid make_box_grid(int dims, int n, double lo, double hi, Boundary bc);

// A sampled field. NaN (or NaN real part) marks a masked cell; arithmetic
// on masked cells propagates the mask rather than extrapolating.
template <class T>
class Field {
 public:
  using value_type = T;

  Field() = default;
  explicit Field(Grid grid, T fill = T{})
      : grid_(std::move(grid)), values_(grid_.size(), fill) {}
  Field(Grid grid, std::vector<T> values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_.size()) {
      throw SizeError("field value count " + std::to_string(values_.size()) +
                      " does not match grid size " + std::to_string(grid_.size()));
    }
    for (const T& v : values_) {
      if (is_infinite(v)) throw NumericError("field contains an infinite value");
    }
  }

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  std::span<const T> values() const { return values_; }
  std::span<T> values() { return values_; }
  const std::vector<T>& data() const { return values_; }

  T& operator[](std::size_t i) { return values_[i]; }
  const T& operator[](std::size_t i) const { return values_[i]; }

  bool masked(std::size_t i) const { return is_nan(values_[i]); }
  std::size_t masked_count() const {
    std::size_t c = 0;
    for (const T& v : values_) c += is_nan(v) ? 1 : 0;
    return c;
  }

  Field& operator+=(const Field& o) {
    check_same(o);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
    return *this;
  }
  Field& operator-=(const Field& o) {
    check_same(o);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
    return *this;
  }
  Field& operator*=(T s) {
    for (T& v : values_) v *= s;
    return *this;
  }
  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(Field a, T s) { return a *= s; }
  friend Field operator*(T s, Field a) { return a *= s; }

  void check_same(const Field& o) const {
    if (!(grid_ == o.grid_)) throw GridError("fields live on different grids");
  }

  static bool is_nan(double v) { return std::isnan(v); }
  static bool is_nan(const std::complex<double>& v) { return std::isnan(v.real()) || std::isnan(v.imag()); }
  static bool is_infinite(double v) { return std::isinf(v); }
  static bool is_infinite(const std::complex<double>& v) { return std::isinf(v.real()) || std::isinf(v.imag()); }

 private:
  Grid grid_;
  std::vector<T> values_;
};

using ScalarField = Field<double>;
using ComplexField = Field<std::complex<double>>;

inline constexpr double kMasked = std::numeric_limits<double>::quiet_NaN();

// d scalar components on a shared grid.
class VectorField {
 public:
  VectorField() = default;
  VectorField(const Grid& grid, int components);
  explicit VectorField(std::vector<ScalarField> components);

  const Grid& grid() const { return components_.front().grid(); }
  int components() const { return static_cast<int>(components_.size()); }
  ScalarField& operator[](int c) { return components_.at(c); }
  const ScalarField& operator[](int c) const { return components_.at(c); }

  double norm2_at(std::size_t i) const {
    double s = 0.0;
    for (const auto& c : components_) s += c[i] * c[i];
    return s;
  }

 private:
  std::vector<ScalarField> components_;
};

// Derivative along one spatial axis. `jump` makes a periodic axis
// quasi-periodic: f(x + L) = f(x) + jump. A nonzero `wrap_period` wraps
// each neighbour difference into [-P/2, P/2) so phase fields differentiate
// across their branch cuts.
struct DerivativeOptions {
  double jump = 0.0;
  double wrap_period = 0.0;
  bool odd_mirror = false;  // zero_normal walls mirror the field with a sign flip
};

ScalarField derivative(const ScalarField& f, int axis, const DerivativeOptions& opt = {});
ComplexField derivative(const ComplexField& f, int axis, const DerivativeOptions& opt = {});

VectorField gradient(const ScalarField& f);
VectorField gradient(const ScalarField& f, std::span<const double> jumps);
VectorField gradient_wrapped(const ScalarField& f, double period);
ScalarField divergence(const VectorField& u);
// Exactly divergence(gradient(f)), so the discrete summation-by-parts
// identity holds on periodic axes.
ScalarField laplacian(const ScalarField& f);

// Central difference along the periodic imaginary-time axis.
ScalarField tau_derivative(const ScalarField& f);
ComplexField tau_derivative(const ComplexField& f);

// Sum of values times the grid measure; masked cells are skipped.
double integrate(const ScalarField& f, double hbar = 1.0);
double inner(const ScalarField& f, const ScalarField& g, double hbar = 1.0);
std::complex<double> inner(const ComplexField& f, const ComplexField& g);

double max_abs(const ScalarField& f);  // over unmasked cells
ScalarField unmask(const ScalarField& f, double fill);

// Copies a spatial field onto every tau slice of `target`.
ScalarField broadcast_tau(const ScalarField& spatial, const Grid& target);

double wrap_to(double value, double period);

// Text dump: `# GRID d=.. n=.. dx=.. origin=.. bc=..` then one value per
// line in row-major order, NaN for masked cells.
void write_dump(std::ostream& os, const ScalarField& f);
void write_dump(const std::string& path, const ScalarField& f);
ScalarField read_dump(std::istream& is);
ScalarField read_dump(const std::string& path);
std::string dump_header(const Grid& g);

}  // namespace sgacs

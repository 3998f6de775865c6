#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nfpe {

/// Invalid configuration or precondition (bad grid, unknown preset, violated hypothesis).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Non-finite values, failed iterations, and other numerical breakdowns.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Periodic torus [0,L_1) x ... x [0,L_d) sampled at n points per axis.
///
/// Cells are indexed row-major with axis 0 slowest. Grid point `i` sits at
/// x = i*h; the cell it represents is [x - h/2, x + h/2).
class Grid {
 public:
  Grid() = default;

  Grid(int dim, std::size_t n, double extent) : Grid(dim, n, uniform(dim, extent)) {}

  Grid(int dim, std::size_t n, std::array<double, 3> extent) : dim_(dim), n_(n), extent_(extent) {
    if (dim != 2 && dim != 3) throw ConfigError("grid.dim must be 2 or 3, got " + std::to_string(dim));
    if (n < 8 || (n & (n - 1)) != 0)
      throw ConfigError("grid.n must be a power of two >= 8, got " + std::to_string(n));
    for (int a = 0; a < dim; ++a) {
      if (!(extent[a] > 0.0) || !std::isfinite(extent[a]))
        throw ConfigError("grid.L must be positive and finite");
    }
    for (int a = dim; a < 3; ++a) extent_[a] = 1.0;
  }

  int dim() const { return dim_; }
  std::size_t n() const { return n_; }
  double extent(int axis) const { return extent_[axis]; }
  const std::array<double, 3>& extents() const { return extent_; }
  double spacing(int axis) const { return extent_[axis] / static_cast<double>(n_); }

  double min_spacing() const {
    double h = spacing(0);
    for (int a = 1; a < dim_; ++a) h = std::min(h, spacing(a));
    return h;
  }

  std::size_t size() const {
    std::size_t s = 1;
    for (int a = 0; a < dim_; ++a) s *= n_;
    return s;
  }

  double cell_volume() const {
    double v = 1.0;
    for (int a = 0; a < dim_; ++a) v *= spacing(a);
    return v;
  }

  double volume() const {
    double v = 1.0;
    for (int a = 0; a < dim_; ++a) v *= extent_[a];
    return v;
  }

  /// Multi-index of a flat cell index.
  std::array<std::size_t, 3> unflatten(std::size_t flat) const {
    std::array<std::size_t, 3> idx{0, 0, 0};
    for (int a = dim_ - 1; a >= 0; --a) {
      idx[a] = flat % n_;
      flat /= n_;
    }
    return idx;
  }

  std::size_t flatten(const std::array<std::size_t, 3>& idx) const {
    std::size_t flat = 0;
    for (int a = 0; a < dim_; ++a) flat = flat * n_ + idx[a];
    return flat;
  }

  /// Coordinate of a cell in [0, L).
  std::array<double, 3> point(std::size_t flat) const {
    auto idx = unflatten(flat);
    std::array<double, 3> x{0.0, 0.0, 0.0};
    for (int a = 0; a < dim_; ++a) x[a] = static_cast<double>(idx[a]) * spacing(a);
    return x;
  }

  /// Coordinate of a cell mapped into the symmetric fundamental cell (-L/2, L/2].
  std::array<double, 3> centered_point(std::size_t flat) const {
    auto idx = unflatten(flat);
    std::array<double, 3> x{0.0, 0.0, 0.0};
    for (int a = 0; a < dim_; ++a) {
      auto m = static_cast<double>(idx[a]);
      if (idx[a] > n_ / 2) m -= static_cast<double>(n_);
      x[a] = m * spacing(a);
    }
    return x;
  }

  /// Flat index of the cell at -x (periodic reflection through the origin).
  std::size_t reflected(std::size_t flat) const {
    auto idx = unflatten(flat);
    for (int a = 0; a < dim_; ++a) idx[a] = (n_ - idx[a]) % n_;
    return flatten(idx);
  }

  bool operator==(const Grid& o) const {
    if (dim_ != o.dim_ || n_ != o.n_) return false;
    for (int a = 0; a < dim_; ++a)
      if (extent_[a] != o.extent_[a]) return false;
    return true;
  }

 private:
  static std::array<double, 3> uniform(int dim, double L) {
    std::array<double, 3> e{1.0, 1.0, 1.0};
    for (int a = 0; a < std::min(dim, 3); ++a) e[a] = L;
    return e;
  }

  int dim_ = 2;
  std::size_t n_ = 8;
  std::array<double, 3> extent_{1.0, 1.0, 1.0};
};

inline void require_same_grid(const Grid& a, const Grid& b, const char* what) {
  if (!(a == b)) throw ConfigError(std::string(what) + ": grid mismatch");
}

/// Real grid function with one (scalar) or `dim` (vector) components.
///
/// Storage is component-major: component c occupies
/// values()[c*size .. (c+1)*size).
class Field {
 public:
  Field() = default;

  explicit Field(const Grid& grid, int components = 1, double fill = 0.0)
      : grid_(grid), components_(components), values_(grid.size() * components, fill) {
    if (components != 1 && components != grid.dim())
      throw ConfigError("field must have 1 or dim components");
  }

  Field(const Grid& grid, int components, std::vector<double> values)
      : grid_(grid), components_(components), values_(std::move(values)) {
    if (components != 1 && components != grid.dim())
      throw ConfigError("field must have 1 or dim components");
    if (values_.size() != grid.size() * static_cast<std::size_t>(components))
      throw ConfigError("field value count does not match grid");
  }

  /// Scalar field sampled from f(x) with x in the centered fundamental cell.
  template <class F>
  static Field from_function(const Grid& grid, F&& f) {
    Field out(grid, 1);
    for (std::size_t i = 0; i < grid.size(); ++i) out.values_[i] = f(grid.centered_point(i));
    return out;
  }

  const Grid& grid() const { return grid_; }
  int components() const { return components_; }
  bool is_scalar() const { return components_ == 1; }
  std::size_t cells() const { return grid_.size(); }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  std::span<double> component(int c) {
    return std::span<double>(values_).subspan(static_cast<std::size_t>(c) * cells(), cells());
  }
  std::span<const double> component(int c) const {
    return std::span<const double>(values_).subspan(static_cast<std::size_t>(c) * cells(), cells());
  }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  bool all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
  }

  double min() const { return *std::min_element(values_.begin(), values_.end()); }
  double max() const { return *std::max_element(values_.begin(), values_.end()); }

  /// Quadrature of a scalar field over the torus.
  double integral() const {
    double s = 0.0;
    for (double v : component(0)) s += v;
    return s * grid_.cell_volume();
  }

  double mean() const { return integral() / grid_.volume(); }

  Field& operator+=(const Field& o) {
    check_shape(o);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
    return *this;
  }
  Field& operator-=(const Field& o) {
    check_shape(o);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
    return *this;
  }
  Field& operator*=(double a) {
    for (double& v : values_) v *= a;
    return *this;
  }

  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(double s, Field a) { return a *= s; }

 private:
  void check_shape(const Field& o) const {
    require_same_grid(grid_, o.grid_, "field arithmetic");
    if (components_ != o.components_) throw ConfigError("field arithmetic: component mismatch");
  }

  Grid grid_;
  int components_ = 1;
  std::vector<double> values_;
};

inline void require_finite(const Field& f, const char* what) {
  for (std::size_t i = 0; i < f.values().size(); ++i) {
    if (!std::isfinite(f.values()[i]))
      throw NumericalError(std::string(what) + ": non-finite value at index " + std::to_string(i));
  }
}

inline void require_scalar(const Field& f, const char* what) {
  if (!f.is_scalar()) throw ConfigError(std::string(what) + ": expected a scalar field");
}

}  // namespace nfpe

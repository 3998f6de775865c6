#pragma once

// Singular interaction kernels K (Riesz, Bessel, Biot-Savart, tabulated),
// their cut-off regularizations, and the growth constant gamma.

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <variant>

#include "nfpe/fft.hpp"
#include "nfpe/grid.hpp"
#include "nfpe/nonlinearity.hpp"
#include "nfpe/spectral.hpp"

namespace nfpe {

struct NoKernel {};

/// K(x) = mu * x * |x|^(s-d-2), the gradient of the Riesz potential.
struct RieszKernel {
  double s = 2.0;
  double mu = 1.0;
};

/// K = grad(G_alpha), G_alpha with Fourier multiplier (1 + |k|^2)^(-alpha/2).
struct BesselKernel {
  double alpha = 1.0;
};

/// K(x) = x_perp / (pi |x|^2), x_perp = (-x2, x1); two dimensions only.
struct BiotSavartKernel {};

struct TabulatedKernel {
  Field field;
};

using KernelKind = std::variant<NoKernel, RieszKernel, BesselKernel, BiotSavartKernel, TabulatedKernel>;

struct KernelSpec {
  KernelKind kind = NoKernel{};
  double eps_cut = 0.0;  ///< 0 disables the cut-off
};

inline std::string kernel_name(const KernelSpec& spec) {
  return std::visit(
      [](const auto& k) -> std::string {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, NoKernel>) return "none";
        else if constexpr (std::is_same_v<K, RieszKernel>) return "riesz";
        else if constexpr (std::is_same_v<K, BesselKernel>) return "bessel";
        else if constexpr (std::is_same_v<K, BiotSavartKernel>) return "biot_savart";
        else return "tabulated";
      },
      spec.kind);
}

inline bool kernel_is_zero(const KernelSpec& spec) { return std::holds_alternative<NoKernel>(spec.kind); }

/// Throws ConfigError naming the violated condition of hypothesis (iv).
inline void validate_kernel_spec(const KernelSpec& spec, int dim) {
  if (spec.eps_cut < 0.0) throw ConfigError("kernel.eps_cut must be >= 0");
  if (const auto* r = std::get_if<RieszKernel>(&spec.kind)) {
    if (dim <= 2) throw ConfigError("hypothesis (iv): Riesz kernel requires d > 2");
    if (!(r->s > 0.0 && r->s < (dim + 4) / 2.0))
      throw ConfigError("hypothesis (iv): Riesz kernel requires 0 < s < (d+4)/2");
    if (!(r->mu > 0.0)) throw ConfigError("hypothesis (iv): Riesz kernel requires mu > 0");
  } else if (const auto* b = std::get_if<BesselKernel>(&spec.kind)) {
    if (!(b->alpha > 0.0 && b->alpha < dim / 2.0))
      throw ConfigError("hypothesis (iv): Bessel kernel requires 0 < alpha < d/2");
  } else if (std::holds_alternative<BiotSavartKernel>(spec.kind)) {
    if (dim != 2) throw ConfigError("Biot-Savart kernel is only defined for d = 2");
  } else if (const auto* t = std::get_if<TabulatedKernel>(&spec.kind)) {
    if (t->field.grid().dim() != dim || t->field.components() != dim)
      throw ConfigError("tabulated kernel must be a vector field of the grid dimension");
  }
}

namespace detail {

inline double norm3(const std::array<double, 3>& x, int dim) {
  double s = 0.0;
  for (int a = 0; a < dim; ++a) s += x[a] * x[a];
  return std::sqrt(s);
}

// Closed-form K(x) for pointwise presets; x != 0.
inline std::array<double, 3> closed_form(const KernelSpec& spec, const std::array<double, 3>& x, int dim) {
  std::array<double, 3> k{0.0, 0.0, 0.0};
  const double r = norm3(x, dim);
  if (const auto* rz = std::get_if<RieszKernel>(&spec.kind)) {
    const double f = rz->mu * std::pow(r, rz->s - dim - 2.0);
    for (int a = 0; a < dim; ++a) k[a] = f * x[a];
  } else if (std::holds_alternative<BiotSavartKernel>(spec.kind)) {
    const double f = 1.0 / (std::numbers::pi * r * r);
    k[0] = -x[1] * f;
    k[1] = x[0] * f;
  }
  return k;
}

// Field with K(-x) = -K(x) exactly, averaging each cell with its reflection.
// On Nyquist planes this zeroes the components that cannot be odd.
inline void make_odd(Field& k) {
  const Grid& g = k.grid();
  for (int c = 0; c < k.components(); ++c) {
    auto comp = k.component(c);
    std::vector<double> orig(comp.begin(), comp.end());
    for (std::size_t i = 0; i < g.size(); ++i) comp[i] = 0.5 * (orig[i] - orig[g.reflected(i)]);
  }
}

inline Field bessel_samples(const BesselKernel& b, const Grid& g) {
  const Wavenumbers& kw = wavenumbers_for(g);
  Field out(g, g.dim());
  const double inv_dv = 1.0 / g.cell_volume();
  for (int a = 0; a < g.dim(); ++a) {
    SpectralField S(g);
    for (std::size_t s = 0; s < S.size(); ++s) S[s] = kw.ik(a, s) * std::pow(1.0 + kw.k2(s), -0.5 * b.alpha);
    auto vals = inverse_values(std::move(S));
    auto comp = out.component(a);
    for (std::size_t i = 0; i < vals.size(); ++i) comp[i] = vals[i] * inv_dv;
  }
  return out;
}

inline void apply_cutoff(Field& k, double eps) {
  if (!(eps > 0.0)) return;
  const Grid& g = k.grid();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double r = norm3(g.centered_point(i), g.dim());
    const double w = eta(r / eps);
    if (w == 1.0) continue;
    for (int c = 0; c < k.components(); ++c) k.component(c)[i] *= w;
  }
}

}  // namespace detail

/// K sampled on the grid with x taken in (-L/2, L/2]^d; K(0) = 0.
inline Field sample_kernel(const KernelSpec& spec, const Grid& grid) {
  validate_kernel_spec(spec, grid.dim());
  Field k(grid, grid.dim());
  if (kernel_is_zero(spec)) return k;
  if (const auto* t = std::get_if<TabulatedKernel>(&spec.kind)) {
    require_same_grid(t->field.grid(), grid, "tabulated kernel");
    k = t->field;
  } else if (const auto* b = std::get_if<BesselKernel>(&spec.kind)) {
    k = detail::bessel_samples(*b, grid);
    for (int c = 0; c < k.components(); ++c) k.component(c)[0] = 0.0;
    detail::make_odd(k);
  } else {
    for (std::size_t i = 1; i < grid.size(); ++i) {
      const auto v = detail::closed_form(spec, grid.centered_point(i), grid.dim());
      for (int c = 0; c < grid.dim(); ++c) k.component(c)[i] = v[c];
    }
    detail::make_odd(k);
  }
  detail::apply_cutoff(k, spec.eps_cut);
  return k;
}

/// K_eps(x) = eta(|x|/eps) K(x).
inline Field regularize_kernel(const KernelSpec& spec, double eps, const Grid& grid) {
  if (!(eps > 0.0)) throw ConfigError("regularize_kernel: eps must be positive");
  Field k = sample_kernel(spec, grid);
  detail::apply_cutoff(k, eps);
  return k;
}

/// Interaction potential W with K = -grad(W), when the preset has one.
/// The singular cell is set to 0.
inline std::optional<Field> interaction_potential(const KernelSpec& spec, const Grid& grid) {
  if (spec.eps_cut > 0.0 && !kernel_is_zero(spec)) return std::nullopt;
  if (kernel_is_zero(spec)) return Field(grid, 1);
  if (const auto* rz = std::get_if<RieszKernel>(&spec.kind)) {
    const int d = grid.dim();
    Field w(grid, 1);
    for (std::size_t i = 1; i < grid.size(); ++i) {
      const double r = detail::norm3(grid.centered_point(i), d);
      w[i] = rz->mu / (d - rz->s) * std::pow(r, rz->s - d);
    }
    return w;
  }
  if (const auto* b = std::get_if<BesselKernel>(&spec.kind)) {
    const Wavenumbers& kw = wavenumbers_for(grid);
    SpectralField S(grid);
    for (std::size_t s = 0; s < S.size(); ++s) S[s] = -std::pow(1.0 + kw.k2(s), -0.5 * b->alpha);
    Field w(grid, 1, inverse_values(std::move(S)));
    w *= 1.0 / grid.cell_volume();
    return w;
  }
  return std::nullopt;
}

/// Precomputed spectra of a sampled kernel for repeated convolutions.
class KernelOperator {
 public:
  KernelOperator() = default;
  explicit KernelOperator(const Field& kernel) : grid_(kernel.grid()), zero_(kernel.max() == 0.0 && kernel.min() == 0.0) {
    if (!zero_) spectra_ = convolution_spectra(kernel);
  }

  bool is_zero() const { return zero_; }
  const Grid& grid() const { return grid_; }

  /// (K * u) given the spectrum of u; returns a vector field.
  Field convolve(const SpectralField& U) const {
    Field out(grid_, grid_.dim());
    if (zero_) return out;
    for (int c = 0; c < grid_.dim(); ++c) {
      SpectralField P(grid_);
      for (std::size_t s = 0; s < P.size(); ++s) P[s] = spectra_[c][s] * U[s];
      auto vals = inverse_values(std::move(P));
      std::copy(vals.begin(), vals.end(), out.component(c).begin());
    }
    return out;
  }

  Field convolve(const Field& u) const { return convolve(dft_forward(u)); }

 private:
  Grid grid_;
  bool zero_ = true;
  std::vector<SpectralField> spectra_;
};

// ---------------------------------------------------------------------------
// gamma = |(div K)^-|_inf + || (K(x).x)^- / |x| ||_{L^inf(B_1)}

struct GammaParts {
  double divergence_part = 0.0;  ///< sup of (div K)^- off the singular cell
  double radial_part = 0.0;      ///< sup over B_1 of (K.x)^-/|x|
  double far_field_sup = 0.0;    ///< sup |K| over |x| >= 1, for hypothesis (v)
  double total() const { return divergence_part + radial_part; }
};

struct GammaEstimate {
  GammaParts at_n;
  GammaParts at_2n;
  bool refined = false;                ///< at_2n computed (not available for tabulated kernels)
  std::optional<double> analytic;      ///< closed-form gamma when the preset admits one
  bool diverges = false;               ///< estimate grows under refinement

  double error_bar() const { return refined ? std::abs(at_2n.total() - at_n.total()) : 0.0; }
  /// gamma of the continuous kernel: analytic value, +inf if the grid estimate diverges.
  double value() const {
    if (analytic) return *analytic;
    return diverges ? std::numeric_limits<double>::infinity() : at_n.total();
  }
  /// gamma of the discrete kernel at the working resolution.
  double grid_value() const { return at_n.total(); }
};

namespace detail {

inline bool has_analytic_divergence(const KernelSpec& spec) {
  return std::holds_alternative<RieszKernel>(spec.kind) || std::holds_alternative<BiotSavartKernel>(spec.kind) ||
         kernel_is_zero(spec);
}

// div(eta(|x|/c) K) = eta div K + eta'(|x|/c)/c (K.x)/|x|.
inline double analytic_divergence(const KernelSpec& spec, const std::array<double, 3>& x, int dim) {
  const double r = norm3(x, dim);
  double div = 0.0;
  if (const auto* rz = std::get_if<RieszKernel>(&spec.kind)) div = rz->mu * (rz->s - 2.0) * std::pow(r, rz->s - dim - 2.0);
  if (spec.eps_cut > 0.0) {
    const auto k = closed_form(spec, x, dim);
    double kx = 0.0;
    for (int a = 0; a < dim; ++a) kx += k[a] * x[a];
    div = eta(r / spec.eps_cut) * div + eta_prime(r / spec.eps_cut) / spec.eps_cut * kx / r;
  }
  return div;
}

inline GammaParts gamma_parts(const KernelSpec& spec, const Grid& g) {
  GammaParts p;
  if (kernel_is_zero(spec)) return p;
  const Field k = sample_kernel(spec, g);
  std::optional<Field> div;
  if (!has_analytic_divergence(spec)) div = divergence(k);
  const int d = g.dim();
  for (std::size_t i = 1; i < g.size(); ++i) {
    const auto x = g.centered_point(i);
    const double r = norm3(x, d);
    const double dv = div ? (*div)[i] : analytic_divergence(spec, x, d);
    p.divergence_part = std::max(p.divergence_part, -dv);
    double kx = 0.0;
    double kk = 0.0;
    for (int a = 0; a < d; ++a) {
      kx += k.component(a)[i] * x[a];
      kk += k.component(a)[i] * k.component(a)[i];
    }
    if (r <= 1.0) p.radial_part = std::max(p.radial_part, -kx / r);
    else p.far_field_sup = std::max(p.far_field_sup, std::sqrt(kk));
  }
  return p;
}

}  // namespace detail

/// Estimate gamma at resolutions n and 2n (same extent) and flag divergence.
inline GammaEstimate gamma_constant(const KernelSpec& spec, const Grid& grid) {
  validate_kernel_spec(spec, grid.dim());
  GammaEstimate est;
  est.at_n = detail::gamma_parts(spec, grid);
  if (!std::holds_alternative<TabulatedKernel>(spec.kind)) {
    est.at_2n = detail::gamma_parts(spec, Grid(grid.dim(), grid.n() * 2, grid.extents()));
    est.refined = true;
    est.diverges = est.at_2n.total() > 1.5 * est.at_n.total() + 1e-9;
  } else {
    est.at_2n = est.at_n;
  }
  if (kernel_is_zero(spec) || std::holds_alternative<BiotSavartKernel>(spec.kind)) {
    est.analytic = 0.0;
  } else if (const auto* rz = std::get_if<RieszKernel>(&spec.kind); rz && spec.eps_cut == 0.0) {
    // div K = mu (s-2) |x|^(s-d-2) and K.x = mu |x|^(s-d) >= 0.
    est.analytic = rz->s >= 2.0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  return est;
}

}  // namespace nfpe

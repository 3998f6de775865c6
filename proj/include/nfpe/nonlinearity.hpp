#pragma once

// Scalar nonlinearities beta, b and drift D, with the epsilon-regularized maps
// used to build the approximating operator A_eps.

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <variant>

#include "nfpe/grid.hpp"
#include "nfpe/spectral.hpp"

namespace nfpe {

/// C^1 cut-off: 0 on (-inf, 1], 1 on [2, inf), Hermite ramp 3t^2 - 2t^3 between.
/// The ramp's slope peaks at 1.5 (at r = 1.5).
inline double eta(double r) {
  if (r <= 1.0) return 0.0;
  if (r >= 2.0) return 1.0;
  const double t = r - 1.0;
  return t * t * (3.0 - 2.0 * t);
}

inline double eta_prime(double r) {
  if (r <= 1.0 || r >= 2.0) return 0.0;
  const double t = r - 1.0;
  return 6.0 * t * (1.0 - t);
}

// ---------------------------------------------------------------------------
// Presets

struct LinearBeta {
  double slope = 1.0;
};

/// beta(r) = alpha_floor*r + c*|r|^m*sign(r).
struct ShiftedPowerBeta {
  double alpha_floor = 0.1;
  double m = 2.0;
  double c = 1.0;
};

/// User-supplied beta with its derivative; alpha_floor is the claimed lower
/// bound on beta' and is checked by validate_hypotheses.
struct CustomBeta {
  std::function<double(double)> beta;
  std::function<double(double)> beta_prime;
  double alpha_floor = 0.0;
};

using BetaPreset = std::variant<LinearBeta, ShiftedPowerBeta, CustomBeta>;

struct UnitMobility {};

/// b(r) = 1 / (1 + exp(r - r0)).
struct LogisticMobility {
  double r0 = 1.0;
};

struct CustomMobility {
  std::function<double(double)> b;
};

using MobilityPreset = std::variant<UnitMobility, LogisticMobility, CustomMobility>;

struct NoDrift {};

/// D = -grad(Phi) for a potential sampled on the grid.
struct GradPotentialDrift {
  Field potential;
};

/// Arbitrary tabulated vector field D.
struct FieldDrift {
  Field field;
};

using DriftPreset = std::variant<NoDrift, GradPotentialDrift, FieldDrift>;

struct NonlinearitySpec {
  BetaPreset beta = LinearBeta{};
  MobilityPreset b = UnitMobility{};
  DriftPreset drift = NoDrift{};
};

// ---------------------------------------------------------------------------
// Pointwise evaluation

inline double beta(const NonlinearitySpec& spec, double r) {
  return std::visit(
      [r](const auto& p) -> double {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, LinearBeta>) {
          return p.slope * r;
        } else if constexpr (std::is_same_v<P, ShiftedPowerBeta>) {
          return p.alpha_floor * r + p.c * std::copysign(std::pow(std::abs(r), p.m), r);
        } else {
          return p.beta(r);
        }
      },
      spec.beta);
}

inline double beta_prime(const NonlinearitySpec& spec, double r) {
  return std::visit(
      [r](const auto& p) -> double {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, LinearBeta>) {
          return p.slope;
        } else if constexpr (std::is_same_v<P, ShiftedPowerBeta>) {
          return p.alpha_floor + p.c * p.m * std::pow(std::abs(r), p.m - 1.0);
        } else {
          return p.beta_prime(r);
        }
      },
      spec.beta);
}

/// Declared lower bound alpha on beta'.
inline double alpha_floor(const NonlinearitySpec& spec) {
  return std::visit(
      [](const auto& p) -> double {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, LinearBeta>) {
          return p.slope;
        } else {
          return p.alpha_floor;
        }
      },
      spec.beta);
}

inline bool beta_is_linear(const NonlinearitySpec& spec) {
  return std::holds_alternative<LinearBeta>(spec.beta);
}

inline double mobility(const NonlinearitySpec& spec, double r) {
  return std::visit(
      [r](const auto& p) -> double {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, UnitMobility>) {
          return 1.0;
        } else if constexpr (std::is_same_v<P, LogisticMobility>) {
          return 1.0 / (1.0 + std::exp(r - p.r0));
        } else {
          return p.b(r);
        }
      },
      spec.b);
}

inline bool has_drift(const NonlinearitySpec& spec) { return !std::holds_alternative<NoDrift>(spec.drift); }

/// The drift field D on `grid` (zero vector field when no drift is configured).
inline Field drift_field(const NonlinearitySpec& spec, const Grid& grid) {
  if (const auto* gp = std::get_if<GradPotentialDrift>(&spec.drift)) {
    require_same_grid(gp->potential.grid(), grid, "drift potential");
    Field d = gradient(gp->potential);
    d *= -1.0;
    return d;
  }
  if (const auto* fd = std::get_if<FieldDrift>(&spec.drift)) {
    require_same_grid(fd->field.grid(), grid, "drift field");
    if (fd->field.components() != grid.dim()) throw ConfigError("drift field must be vector-valued");
    return fd->field;
  }
  return Field(grid, grid.dim());
}

/// The potential Phi with D = -grad(Phi), when one is known (zero for no drift).
inline std::optional<Field> drift_potential(const NonlinearitySpec& spec, const Grid& grid) {
  if (std::holds_alternative<NoDrift>(spec.drift)) return Field(grid, 1);
  if (const auto* gp = std::get_if<GradPotentialDrift>(&spec.drift)) return gp->potential;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Regularizations

/// y = (1 + eps*beta)^{-1}(r), i.e. the root of y + eps*beta(y) = r.
///
/// Newton steps safeguarded by the bracket [min(0,r), max(0,r)], which always
/// contains the root for monotone beta with beta(0) = 0.
inline double scalar_resolvent(const NonlinearitySpec& spec, double r, double eps) {
  if (const auto* lin = std::get_if<LinearBeta>(&spec.beta)) return r / (1.0 + eps * lin->slope);
  if (r == 0.0) return 0.0;
  double lo = std::min(0.0, r);
  double hi = std::max(0.0, r);
  const double tol = 1e-13 * (1.0 + std::abs(r));
  double y = r / (1.0 + eps * std::max(beta_prime(spec, 0.0), 0.0));
  y = std::clamp(y, lo, hi);
  for (int it = 0; it < 200; ++it) {
    const double g = y + eps * beta(spec, y) - r;
    if (std::abs(g) <= tol) return y;
    if (g > 0.0) hi = y; else lo = y;
    const double dg = 1.0 + eps * beta_prime(spec, y);
    double next = y - g / dg;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == y) return y;
    y = next;
  }
  const double g = y + eps * beta(spec, y) - r;
  if (std::abs(g) <= tol) return y;
  throw NumericalError("scalar_resolvent: no convergence (beta not monotone?)");
}

/// beta_eps(r) = eps*r + beta((1 + eps*beta)^{-1} r).
inline double beta_eps(const NonlinearitySpec& spec, double r, double eps) {
  if (const auto* lin = std::get_if<LinearBeta>(&spec.beta)) return (eps + lin->slope / (1.0 + eps * lin->slope)) * r;
  return eps * r + beta(spec, scalar_resolvent(spec, r, eps));
}

inline double beta_eps_prime(const NonlinearitySpec& spec, double r, double eps) {
  const double bp = beta_prime(spec, scalar_resolvent(spec, r, eps));
  return eps + bp / (1.0 + eps * bp);
}

/// Truncation at level 1/eps.
inline double phi_eps(double r, double eps) {
  const double cap = 1.0 / eps;
  return std::clamp(r, -cap, cap);
}

/// b_eps(r) = (1 - eta(eps*r)) b(r); vanishes for r >= 2/eps.
inline double b_eps(const NonlinearitySpec& spec, double r, double eps) {
  const double cut = 1.0 - eta(eps * r);
  if (cut == 0.0) return 0.0;
  return cut * mobility(spec, r);
}

inline double bstar_eps(const NonlinearitySpec& spec, double r, double eps) { return b_eps(spec, r, eps) * r; }

// ---------------------------------------------------------------------------
// Integrals

namespace detail {

template <class F>
double integrate(F&& f, double a, double b) {
  if (a == b) return 0.0;
  double err = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 15, 1e-12, &err);
  if (!std::isfinite(v) || err > 1e-10 * std::max(1.0, std::abs(v)))
    throw NumericalError("quadrature failed to reach 1e-10 relative accuracy");
  return v;
}

}  // namespace detail

/// j(r) = int_0^r beta(s) ds.
inline double j_integral(const NonlinearitySpec& spec, double r) {
  if (const auto* lin = std::get_if<LinearBeta>(&spec.beta)) return 0.5 * lin->slope * r * r;
  return detail::integrate([&](double s) { return beta(spec, s); }, 0.0, r);
}

/// j_eps(r) = int_0^r beta_eps(s) ds.
inline double j_eps_integral(const NonlinearitySpec& spec, double r, double eps) {
  return detail::integrate([&](double s) { return beta_eps(spec, s, eps); }, 0.0, r);
}

/// Result of comparing j_eps against j at one point.
///
/// beta_eps = eps*r + beta_Y with beta_Y the Yosida-type part beta((1+eps*beta)^{-1} r).
/// The Yosida part always integrates below j; the eps*r term adds eps*r^2/2,
/// so the bound that holds in general is j_eps <= j + eps*r^2/2.
struct JBoundCheck {
  double j = 0.0;
  double j_eps = 0.0;
  double yosida_part = 0.0;
  bool yosida_below_j = false;
  bool strict_claim_holds = false;  // j_eps <= j
  bool holds() const { return yosida_below_j; }
};

inline JBoundCheck check_j_eps_bound(const NonlinearitySpec& spec, double r, double eps) {
  JBoundCheck c;
  c.j = j_integral(spec, r);
  c.j_eps = j_eps_integral(spec, r, eps);
  c.yosida_part = c.j_eps - 0.5 * eps * r * r;
  const double slack = 1e-10 * std::max(1.0, std::abs(c.j));
  c.yosida_below_j = c.yosida_part <= c.j + slack;
  c.strict_claim_holds = c.j_eps <= c.j + slack;
  return c;
}

// ---------------------------------------------------------------------------
// Pointwise maps over fields

template <class F>
Field map_field(const Field& u, F&& f) {
  Field out(u.grid(), u.components());
  for (std::size_t i = 0; i < u.values().size(); ++i) out[i] = f(u[i]);
  return out;
}

/// Lower and upper bounds of beta_eps' over [lo, hi], sampled.
inline std::pair<double, double> beta_eps_slope_range(const NonlinearitySpec& spec, double lo, double hi,
                                                      double eps) {
  if (beta_is_linear(spec)) {
    const double s = beta_eps_prime(spec, 0.0, eps);
    return {s, s};
  }
  double smin = std::numeric_limits<double>::infinity();
  double smax = 0.0;
  constexpr int samples = 65;
  for (int i = 0; i < samples; ++i) {
    const double r = lo + (hi - lo) * i / (samples - 1);
    const double s = beta_eps_prime(spec, r, eps);
    smin = std::min(smin, s);
    smax = std::max(smax, s);
  }
  return {smin, smax};
}

}  // namespace nfpe

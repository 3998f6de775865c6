#pragma once

// The implicit step u = (I + lambda A_eps)^{-1} f for
//   A_eps(u) = -Lap beta_eps(u) + div( D b_eps(u) u + (K_eps * phi_eps(u)) phi_eps(u) ).

#include <cmath>
#include <limits>
#include <string>

#include "nfpe/fft.hpp"
#include "nfpe/grid.hpp"
#include "nfpe/kernels.hpp"
#include "nfpe/nonlinearity.hpp"
#include "nfpe/spectral.hpp"

namespace nfpe {

/// A_eps bound to a grid: kernel spectra and drift are precomputed once.
class RegularizedOperator {
 public:
  RegularizedOperator(const Grid& grid, NonlinearitySpec spec, const KernelSpec& kernel, double eps)
      : grid_(grid), spec_(std::move(spec)), eps_(eps), kw_(&wavenumbers_for(grid)) {
    if (!(eps > 0.0)) throw ConfigError("regularization eps must be positive");
    validate_kernel_spec(kernel, grid.dim());
    if (!kernel_is_zero(kernel)) kernel_ = KernelOperator(regularize_kernel(kernel, eps, grid));
    has_drift_ = has_drift(spec_);
    if (has_drift_) drift_ = drift_field(spec_, grid);
    linear_slope_ = beta_is_linear(spec_) ? beta_eps_prime(spec_, 0.0, eps) : 0.0;
  }

  const Grid& grid() const { return grid_; }
  const NonlinearitySpec& spec() const { return spec_; }
  double eps() const { return eps_; }
  bool has_transport() const { return has_drift_ || !kernel_.is_zero(); }
  const KernelOperator& kernel() const { return kernel_; }

  Field beta_eps_of(const Field& u) const {
    return map_field(u, [this](double r) { return beta_eps(spec_, r, eps_); });
  }

  SpectralField beta_eps_spectrum(const Field& u, const SpectralField& U) const {
    if (beta_is_linear(spec_)) {
      SpectralField B = U;
      for (std::size_t s = 0; s < B.size(); ++s) B[s] *= linear_slope_;
      return B;
    }
    return forward_component(grid_, beta_eps_of(u).values());
  }

  /// Flux V(u) = D b_eps(u) u + (K_eps * phi_eps(u)) phi_eps(u).
  Field flux(const Field& u, const SpectralField& U) const {
    Field v(grid_, grid_.dim());
    if (!has_transport()) return v;
    const double cap = 1.0 / eps_;
    const bool truncated = u.max() > cap || u.min() < -cap;
    Field phi = truncated ? map_field(u, [this](double r) { return phi_eps(r, eps_); }) : u;
    Field conv = kernel_.is_zero() ? Field(grid_, grid_.dim())
                                   : kernel_.convolve(truncated ? dft_forward(phi) : U);
    for (int a = 0; a < grid_.dim(); ++a) {
      auto va = v.component(a);
      auto ca = conv.component(a);
      for (std::size_t i = 0; i < grid_.size(); ++i) {
        double val = ca[i] * phi[i];
        if (has_drift_) val += drift_.component(a)[i] * bstar_eps(spec_, u[i], eps_);
        va[i] = val;
      }
    }
    return v;
  }

  /// Spectrum of A_eps(u), given u and its spectrum.
  SpectralField apply_spectral(const Field& u, const SpectralField& U) const {
    SpectralField A = beta_eps_spectrum(u, U);
    for (std::size_t s = 0; s < A.size(); ++s) A[s] *= kw_->k2(s);
    if (has_transport()) {
      const Field v = flux(u, U);
      for (int a = 0; a < grid_.dim(); ++a) {
        SpectralField Va = forward_component(grid_, v.component(a));
        for (std::size_t s = 0; s < A.size(); ++s) A[s] += kw_->ik(a, s) * Va[s];
      }
    }
    return A;
  }

  Field apply(const Field& u) const {
    require_scalar(u, "apply_A_eps");
    require_same_grid(u.grid(), grid_, "apply_A_eps");
    return Field(grid_, 1, inverse_values(apply_spectral(u, dft_forward(u))));
  }

 private:
  Grid grid_;
  NonlinearitySpec spec_;
  double eps_;
  const Wavenumbers* kw_;
  KernelOperator kernel_;
  bool has_drift_ = false;
  Field drift_;
  double linear_slope_ = 0.0;
};

inline Field apply_A_eps(const Field& u, const NonlinearitySpec& spec, const KernelSpec& kernel, double eps) {
  return RegularizedOperator(u.grid(), spec, kernel, eps).apply(u);
}

struct ResolventConfig {
  double lambda = 1e-3;
  double eps = 1e-2;
  double fp_tol = 1e-10;  ///< H^-1 relative residual
  int max_iter = 500;
  double damping = 1.0;   ///< initial theta in (0, 1]
  bool clip_negative = false;
  double gamma = 0.0;     ///< growth constant used for the L-infinity report

  void validate() const {
    if (!(lambda > 0.0)) throw ConfigError("resolvent: lambda must be positive");
    if (!(eps > 0.0)) throw ConfigError("resolvent: eps must be positive");
    if (!(fp_tol > 0.0)) throw ConfigError("resolvent: fp_tol must be positive");
    if (max_iter < 1) throw ConfigError("resolvent: max_iter must be >= 1");
    if (!(damping > 0.0 && damping <= 1.0)) throw ConfigError("resolvent: damping must lie in (0, 1]");
  }
};

/// Mass, positivity and maximum-principle checks of a single resolvent solve.
struct InvariantReport {
  double mass_in = 0.0;
  double mass_out = 0.0;
  double min_u = 0.0;
  double max_u = 0.0;
  double bound_N = 0.0;        ///< max f / (1 - lambda gamma)
  double lambda_gamma = 0.0;
  bool applicable = true;      ///< lambda gamma < 1
  bool mass_ok = false;
  bool positivity_ok = false;
  bool linf_bound_ok = false;

  bool all_ok() const { return mass_ok && positivity_ok && linf_bound_ok; }
};

struct ResolventResult {
  Field u;
  int iterations = 0;
  double residual = 0.0;
  double clipped_mass = 0.0;
  InvariantReport invariant_report;
};

/// Thrown when the fixed-point iteration does not reach fp_tol.
class ResolventDivergence : public NumericalError {
 public:
  ResolventDivergence(const std::string& what, double last_residual, int iterations)
      : NumericalError(what), last_residual_(last_residual), iterations_(iterations) {}
  double last_residual() const { return last_residual_; }
  int iterations() const { return iterations_; }

 private:
  double last_residual_;
  int iterations_;
};

inline constexpr double kMassTolerance = 1e-9;
inline constexpr double kPositivityTolerance = 1e-8;

inline InvariantReport check_invariants(const ResolventResult& result, const Field& f, const ResolventConfig& cfg,
                                     double gamma) {
  InvariantReport r;
  r.mass_in = f.integral();
  r.mass_out = result.u.integral();
  r.min_u = result.u.min();
  r.max_u = result.u.max();
  r.mass_ok = std::abs(r.mass_out - r.mass_in) <= kMassTolerance;
  r.positivity_ok = r.min_u >= -kPositivityTolerance;
  r.lambda_gamma = cfg.lambda * gamma;
  r.applicable = r.lambda_gamma < 1.0;
  if (r.applicable) {
    r.bound_N = std::max(f.max(), 0.0) / (1.0 - r.lambda_gamma);
    r.linf_bound_ok = r.max_u <= r.bound_N + kPositivityTolerance;
  } else {
    r.bound_N = std::numeric_limits<double>::infinity();
    r.linf_bound_ok = false;
  }
  return r;
}

/// Solve u + lambda A_eps(u) = f by the preconditioned damped fixed point
///   u <- u - theta (I - lambda kappa Lap)^{-1} (u + lambda A_eps(u) - f),
/// kappa being the mid-range slope of beta_eps over the values of f.
/// Convergence is measured by |u + lambda A_eps(u) - f|_{-1} / |f|_{-1}.
inline ResolventResult resolvent_step(const Field& f, const ResolventConfig& cfg, const RegularizedOperator& op) {
  cfg.validate();
  require_scalar(f, "resolvent_step");
  require_same_grid(f.grid(), op.grid(), "resolvent_step");
  if (std::abs(cfg.eps - op.eps()) > 1e-15 * cfg.eps) throw ConfigError("resolvent_step: eps differs from operator eps");
  const Grid& g = f.grid();
  const Wavenumbers& kw = wavenumbers_for(g);
  const SpectralField F = dft_forward(f);
  const double fnorm = hminus1_norm_spectral(F);
  const double scale = fnorm > 0.0 ? fnorm : 1.0;

  const double span = std::max(f.max(), 0.0) - std::min(f.min(), 0.0);
  const auto [smin, smax] =
      beta_eps_slope_range(op.spec(), std::min(f.min(), 0.0) - 0.05 * span, std::max(f.max(), 0.0) + 0.05 * span, cfg.eps);
  const double kappa = 0.5 * (smin + smax);
  const double lambda = cfg.lambda;

  ResolventResult out;
  Field u = f;
  SpectralField U = F;
  double theta = cfg.damping;
  double prev = std::numeric_limits<double>::infinity();
  for (int it = 0; it <= cfg.max_iter; ++it) {
    SpectralField R = op.apply_spectral(u, U);
    for (std::size_t s = 0; s < R.size(); ++s) R[s] = U[s] + lambda * R[s] - F[s];
    const double res = hminus1_norm_spectral(R) / scale;
    if (!std::isfinite(res)) throw NumericalError("resolvent_step: non-finite residual (NaN)");
    if (res <= cfg.fp_tol) {
      out.iterations = it;
      out.residual = res;
      break;
    }
    if (it == cfg.max_iter)
      throw ResolventDivergence("resolvent_step: no convergence after " + std::to_string(cfg.max_iter) +
                                    " iterations (residual " + std::to_string(res) + "); lambda may be too large",
                                res, it);
    if (res > prev) theta = std::max(0.5 * theta, 1.0 / 1024.0);
    prev = res;
    for (std::size_t s = 0; s < U.size(); ++s) U[s] -= theta * R[s] / (1.0 + lambda * kappa * kw.k2(s));
    u = Field(g, 1, inverse_values(U));
  }
  if (!u.all_finite()) throw NumericalError("resolvent_step: non-finite solution");

  if (cfg.clip_negative) {
    double clipped = 0.0;
    for (std::size_t i = 0; i < u.cells(); ++i) {
      if (u[i] < 0.0) {
        clipped -= u[i];
        u[i] = 0.0;
      }
    }
    out.clipped_mass = clipped * g.cell_volume();
  }
  out.u = std::move(u);
  out.invariant_report = check_invariants(out, f, cfg, cfg.gamma);
  return out;
}

inline ResolventResult resolvent_step(const Field& f, const ResolventConfig& cfg, const NonlinearitySpec& spec,
                                      const KernelSpec& kernel) {
  return resolvent_step(f, cfg, RegularizedOperator(f.grid(), spec, kernel, cfg.eps));
}

}  // namespace nfpe

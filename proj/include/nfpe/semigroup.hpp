#pragma once

// Time evolution by iterated resolvent steps, the frozen-coefficient linear
// evolution, and trajectory monitors.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "nfpe/entropy.hpp"
#include "nfpe/resolvent.hpp"

namespace nfpe {

enum class Scheme { ImplicitEuler, ExponentialFormula };

struct MonitorFlags {
  bool entropy = true;
  bool h1_energy = true;
};

struct EvolutionConfig {
  double T = 1.0;
  int n_steps = 100;
  Scheme scheme = Scheme::ImplicitEuler;
  std::optional<double> eps;  ///< unset: eps = sqrt(lambda)
  int snapshot_every = 1;
  MonitorFlags monitors;
  double fp_tol = 1e-10;
  int max_iter = 500;
  bool clip_negative = false;
  double gamma = 0.0;

  double lambda() const { return T / n_steps; }
  double effective_eps() const { return eps ? *eps : std::sqrt(lambda()); }

  void validate() const {
    if (!(T > 0.0)) throw ConfigError("evolution: T must be positive");
    if (n_steps < 1) throw ConfigError("evolution: n_steps must be >= 1");
    if (snapshot_every < 1) throw ConfigError("evolution: snapshot_every must be >= 1");
    if (eps && !(*eps > 0.0 && *eps <= 1.0)) throw ConfigError("evolution: eps must lie in (0, 1]");
    if (!eps && lambda() > 1.0) throw ConfigError("evolution: default eps = sqrt(lambda) needs lambda <= 1");
  }

  ResolventConfig resolvent() const {
    ResolventConfig r;
    r.lambda = lambda();
    r.eps = effective_eps();
    r.fp_tol = fp_tol;
    r.max_iter = max_iter;
    r.clip_negative = clip_negative;
    r.gamma = gamma;
    return r;
  }
};

struct MonitorRow {
  double t = 0.0;
  double mass = 0.0;
  double min_u = 0.0;
  double max_u = 0.0;
  double l2 = 0.0;
  double h1_energy = std::numeric_limits<double>::quiet_NaN();
  double entropy = std::numeric_limits<double>::quiet_NaN();
  int resolvent_iters = 0;
  double residual = 0.0;
};

struct Trajectory {
  std::vector<double> times;     ///< snapshot times
  std::vector<Field> snapshots;
  std::vector<MonitorRow> monitors;  ///< one row per step, including t = 0
  double lambda = 0.0;
  double eps = 0.0;
  std::optional<std::string> error;

  bool ok() const { return !error.has_value(); }
  const Field& final_state() const { return snapshots.back(); }
};

/// |grad beta_eps(u)|_2^2 by spectral quadrature.
inline double h1_energy(const Field& u, const NonlinearitySpec& spec, double eps) {
  const Field b = map_field(u, [&](double r) { return beta_eps(spec, r, eps); });
  const SpectralField B = dft_forward(b);
  return spectral_inner(B, B, [](double k2) { return k2; });
}

inline MonitorRow make_monitor_row(double t, const Field& u, const NonlinearitySpec& spec, const KernelSpec& kernel,
                                   double eps, const MonitorFlags& flags) {
  MonitorRow row;
  row.t = t;
  row.mass = u.integral();
  row.min_u = u.min();
  row.max_u = u.max();
  row.l2 = lp_norm(u, Norm::L2);
  if (flags.h1_energy) row.h1_energy = h1_energy(u, spec, eps);
  if (flags.entropy) {
    if (auto e = entropy(u, spec, kernel)) row.entropy = *e;
  }
  return row;
}

inline constexpr double kInitialNegativityTolerance = 1e-12;
inline constexpr double kInitialMassTolerance = 1e-10;

inline void require_probability_density(const Field& u0, const char* what) {
  require_scalar(u0, what);
  require_finite(u0, what);
  if (u0.min() < -kInitialNegativityTolerance)
    throw ConfigError(std::string(what) + ": initial datum has negative values (min " + std::to_string(u0.min()) + ")");
  if (std::abs(u0.integral() - 1.0) > kInitialMassTolerance)
    throw ConfigError(std::string(what) + ": initial datum must have unit mass (mass " + std::to_string(u0.integral()) +
                      ")");
}

/// Backward Euler u_{k+1} = (I + lambda A_eps)^{-1} u_k. A solver failure ends
/// the run early: the partial trajectory is returned with `error` set.
inline Trajectory evolve(const Field& u0, const EvolutionConfig& cfg, const NonlinearitySpec& spec,
                         const KernelSpec& kernel) {
  cfg.validate();
  require_probability_density(u0, "evolve");
  const ResolventConfig rcfg = cfg.resolvent();
  const RegularizedOperator op(u0.grid(), spec, kernel, rcfg.eps);

  Trajectory traj;
  traj.lambda = rcfg.lambda;
  traj.eps = rcfg.eps;
  traj.times.push_back(0.0);
  traj.snapshots.push_back(u0);
  traj.monitors.push_back(make_monitor_row(0.0, u0, spec, kernel, rcfg.eps, cfg.monitors));

  Field u = u0;
  for (int k = 1; k <= cfg.n_steps; ++k) {
    const double t = cfg.T * k / cfg.n_steps;
    ResolventResult step;
    try {
      step = resolvent_step(u, rcfg, op);
    } catch (const NumericalError& e) {
      traj.error = "step " + std::to_string(k) + " (t=" + std::to_string(t) + "): " + e.what();
      return traj;
    }
    u = std::move(step.u);
    MonitorRow row = make_monitor_row(t, u, spec, kernel, rcfg.eps, cfg.monitors);
    row.resolvent_iters = step.iterations;
    row.residual = step.residual;
    traj.monitors.push_back(row);
    if (k % cfg.snapshot_every == 0 || k == cfg.n_steps) {
      traj.times.push_back(t);
      traj.snapshots.push_back(u);
    }
  }
  return traj;
}

/// (I + (t/n) A_eps)^{-n} u0 through the same code path as evolve.
inline Field exponential_formula(const Field& u0, double t, int n, const NonlinearitySpec& spec,
                                 const KernelSpec& kernel, std::optional<double> eps = std::nullopt,
                                 double fp_tol = 1e-10) {
  EvolutionConfig cfg;
  cfg.T = t;
  cfg.n_steps = n;
  cfg.scheme = Scheme::ExponentialFormula;
  cfg.eps = eps;
  cfg.snapshot_every = n;
  cfg.fp_tol = fp_tol;
  cfg.monitors = MonitorFlags{false, false};
  Trajectory traj = evolve(u0, cfg, spec, kernel);
  if (!traj.ok()) throw NumericalError("exponential_formula: " + *traj.error);
  return traj.final_state();
}

/// Backward Euler for the linear equation with coefficients frozen along u:
///   v_t - Lap(a v) + div(W v) = 0,  a = beta_eps(u)/u,  W = D b_eps(u) + K_eps * phi_eps(u).
/// `frozen` must hold a snapshot at every step time of cfg.
inline Trajectory evolve_frozen_linear(const Field& v0, const Trajectory& frozen, const EvolutionConfig& cfg,
                                       const NonlinearitySpec& spec, const KernelSpec& kernel) {
  cfg.validate();
  require_scalar(v0, "evolve_frozen_linear");
  const double lambda = cfg.lambda();
  const double eps = cfg.effective_eps();
  if (frozen.snapshots.size() != static_cast<std::size_t>(cfg.n_steps) + 1)
    throw ConfigError("evolve_frozen_linear: frozen trajectory must have a snapshot at every step");
  for (int k = 0; k <= cfg.n_steps; ++k) {
    if (std::abs(frozen.times[k] - lambda * k) > 1e-12 * std::max(1.0, cfg.T))
      throw ConfigError("evolve_frozen_linear: time grid mismatch at step " + std::to_string(k));
  }
  const Grid& g = v0.grid();
  require_same_grid(g, frozen.snapshots.front().grid(), "evolve_frozen_linear");
  const Wavenumbers& kw = wavenumbers_for(g);
  const RegularizedOperator op(g, spec, kernel, eps);
  const double slope0 = beta_eps_prime(spec, 0.0, eps);

  Trajectory traj;
  traj.lambda = lambda;
  traj.eps = eps;
  traj.times.push_back(0.0);
  traj.snapshots.push_back(v0);
  MonitorFlags none{false, false};
  traj.monitors.push_back(make_monitor_row(0.0, v0, spec, kernel, eps, none));

  Field v = v0;
  for (int k = 1; k <= cfg.n_steps; ++k) {
    const Field& u = frozen.snapshots[k];
    const Field a = map_field(u, [&](double r) { return std::abs(r) < 1e-12 ? slope0 : beta_eps(spec, r, eps) / r; });
    Field w(g, g.dim());
    if (op.has_transport()) {
      Field phi = map_field(u, [&](double r) { return phi_eps(r, eps); });
      Field conv = op.kernel().is_zero() ? Field(g, g.dim()) : op.kernel().convolve(phi);
      const Field drift = drift_field(spec, g);
      for (int c = 0; c < g.dim(); ++c)
        for (std::size_t i = 0; i < g.size(); ++i)
          w.component(c)[i] = conv.component(c)[i] + drift.component(c)[i] * b_eps(spec, u[i], eps);
    }
    const double kappa = 0.5 * (a.min() + a.max());

    const SpectralField F = dft_forward(v);
    const double scale = std::max(hminus1_norm_spectral(F), 1e-300);
    SpectralField V = F;
    Field x = v;
    int it = 0;
    double res = 0.0;
    for (;; ++it) {
      Field av(g, 1), wv(g, g.dim());
      for (std::size_t i = 0; i < g.size(); ++i) av[i] = a[i] * x[i];
      for (int c = 0; c < g.dim(); ++c)
        for (std::size_t i = 0; i < g.size(); ++i) wv.component(c)[i] = w.component(c)[i] * x[i];
      SpectralField R = dft_forward(av);
      for (std::size_t s = 0; s < R.size(); ++s) R[s] *= kw.k2(s);
      if (op.has_transport()) {
        for (int c = 0; c < g.dim(); ++c) {
          SpectralField Wc = forward_component(g, wv.component(c));
          for (std::size_t s = 0; s < R.size(); ++s) R[s] += kw.ik(c, s) * Wc[s];
        }
      }
      for (std::size_t s = 0; s < R.size(); ++s) R[s] = V[s] + lambda * R[s] - F[s];
      res = hminus1_norm_spectral(R) / scale;
      if (!std::isfinite(res)) {
        traj.error = "frozen step " + std::to_string(k) + ": non-finite residual";
        return traj;
      }
      if (res <= cfg.fp_tol || hminus1_norm_spectral(F) == 0.0) break;
      if (it == cfg.max_iter) {
        traj.error = "frozen step " + std::to_string(k) + ": no convergence (residual " + std::to_string(res) + ")";
        return traj;
      }
      for (std::size_t s = 0; s < V.size(); ++s) V[s] -= R[s] / (1.0 + lambda * kappa * kw.k2(s));
      x = Field(g, 1, inverse_values(V));
    }
    v = std::move(x);
    MonitorRow row = make_monitor_row(lambda * k, v, spec, kernel, eps, none);
    row.resolvent_iters = it;
    row.residual = res;
    traj.monitors.push_back(row);
    traj.times.push_back(lambda * k);
    traj.snapshots.push_back(v);
  }
  return traj;
}

/// Discrete energy identity residual for one step u_prev -> u_next:
///   1/2|u_next|^2 - 1/2|u_prev|^2 + lambda (grad beta_eps(u_next), grad u_next)
///     - lambda (V(u_next), grad u_next),
/// which backward Euler makes <= -1/2 |u_next - u_prev|^2 up to solver error.
inline double energy_identity_defect(const Field& u_prev, const Field& u_next, double lambda,
                                     const RegularizedOperator& op) {
  const Grid& g = u_next.grid();
  const Wavenumbers& kw = wavenumbers_for(g);
  const SpectralField U = dft_forward(u_next);
  const SpectralField B = op.beta_eps_spectrum(u_next, U);
  double lhs = 0.5 * (l2_inner(u_next, u_next) - l2_inner(u_prev, u_prev));
  lhs += lambda * spectral_inner(B, U, [](double k2) { return k2; });
  if (op.has_transport()) {
    const Field v = op.flux(u_next, U);
    for (int a = 0; a < g.dim(); ++a) {
      SpectralField Va = forward_component(g, v.component(a));
      SpectralField Du(g);
      for (std::size_t s = 0; s < Du.size(); ++s) Du[s] = kw.ik(a, s) * U[s];
      lhs -= lambda * spectral_inner(Va, Du, [](double) { return 1.0; });
    }
  }
  return lhs;
}

// ---------------------------------------------------------------------------
// Comparison of two trajectories

struct ComparisonReport {
  std::vector<double> times;
  std::vector<double> distance;   ///< |u(t) - v(t)|_{-1}
  std::vector<double> log_ratio;  ///< log(d(t)/d(0)), t > 0
  double d0 = 0.0;
  bool degenerate = false;        ///< identical initial data
  double omega_hat = 0.0;         ///< smallest slope w with log_ratio <= w t
  double omega_fit = 0.0;         ///< least-squares slope through the origin
  double fit_residual = 0.0;      ///< max(log_ratio - omega_fit t, 0)
  bool envelope_ok = false;
  bool nonincreasing = false;
  bool linf_ok = false;
  double linf_worst_excess = 0.0;
  double holder_small = 0.0;      ///< Holder quotient over consecutive snapshots
  double holder_large = 0.0;      ///< Holder quotient against t = 0
  bool narrow_ok = false;
};

/// Smooth test functions for the narrow-continuity proxy.
inline std::vector<Field> narrow_test_battery(const Grid& g) {
  std::vector<Field> out;
  out.push_back(Field(g, 1, 1.0));
  const double two_pi = 2.0 * std::acos(-1.0);
  for (int a = 0; a < g.dim(); ++a) {
    const double L = g.extent(a);
    out.push_back(Field::from_function(g, [=](const std::array<double, 3>& x) { return std::cos(two_pi * x[a] / L); }));
    out.push_back(Field::from_function(g, [=](const std::array<double, 3>& x) { return std::sin(two_pi * x[a] / L); }));
  }
  const double L0 = g.extent(0), L1 = g.extent(1);
  out.push_back(Field::from_function(
      g, [=](const std::array<double, 3>& x) { return std::cos(two_pi * (x[0] / L0 + x[1] / L1)); }));
  return out;
}

inline double max_holder_quotient(const Field& a, const Field& b, double dt, const std::vector<Field>& battery) {
  if (dt <= 0.0) return 0.0;
  const Field diff = a - b;
  double q = 0.0;
  for (const auto& psi : battery) q = std::max(q, std::abs(l2_inner(diff, psi)) / std::sqrt(dt));
  return q;
}

inline ComparisonReport compare_trajectories(const Trajectory& u, const Trajectory& v, double gamma) {
  if (u.times.size() != v.times.size()) throw ConfigError("compare_trajectories: trajectories have different lengths");
  for (std::size_t i = 0; i < u.times.size(); ++i) {
    if (std::abs(u.times[i] - v.times[i]) > 1e-12 * std::max(1.0, std::abs(u.times[i])))
      throw ConfigError("compare_trajectories: snapshot times differ");
    require_same_grid(u.snapshots[i].grid(), v.snapshots[i].grid(), "compare_trajectories");
  }
  ComparisonReport r;
  r.times = u.times;
  for (std::size_t i = 0; i < u.times.size(); ++i) r.distance.push_back(hminus1_norm(u.snapshots[i] - v.snapshots[i]));
  r.d0 = r.distance.front();
  r.degenerate = r.d0 < 1e-14;

  if (r.degenerate) {
    r.envelope_ok = std::all_of(r.distance.begin(), r.distance.end(), [](double d) { return d < 1e-12; });
    r.nonincreasing = r.envelope_ok;
  } else {
    double sxy = 0.0, sxx = 0.0;
    r.omega_hat = -std::numeric_limits<double>::infinity();
    r.nonincreasing = true;
    for (std::size_t i = 1; i < r.times.size(); ++i) {
      const double t = r.times[i];
      const double lr = std::log(std::max(r.distance[i], 1e-300) / r.d0);
      r.log_ratio.push_back(lr);
      r.omega_hat = std::max(r.omega_hat, lr / t);
      sxy += t * lr;
      sxx += t * t;
      if (r.distance[i] > r.distance[i - 1] * (1.0 + 1e-10)) r.nonincreasing = false;
    }
    if (r.log_ratio.empty()) r.omega_hat = 0.0;
    r.omega_fit = sxx > 0.0 ? sxy / sxx : 0.0;
    for (std::size_t i = 1; i < r.times.size(); ++i)
      r.fit_residual = std::max(r.fit_residual, r.log_ratio[i - 1] - r.omega_fit * r.times[i]);
    r.envelope_ok = true;
    for (std::size_t i = 1; i < r.times.size(); ++i)
      if (r.log_ratio[i - 1] > r.omega_fit * r.times[i] + r.fit_residual + 1e-12) r.envelope_ok = false;
  }

  r.linf_ok = true;
  for (const Trajectory* tr : {&u, &v}) {
    const double m0 = tr->snapshots.front().max();
    for (std::size_t i = 0; i < tr->times.size(); ++i) {
      const double excess = tr->snapshots[i].max() - (std::exp(gamma * tr->times[i]) * m0 + 1e-6);
      r.linf_worst_excess = std::max(r.linf_worst_excess, excess);
      if (excess > 0.0) r.linf_ok = false;
    }
  }

  const auto battery = narrow_test_battery(u.snapshots.front().grid());
  for (std::size_t i = 1; i < u.times.size(); ++i) {
    r.holder_small = std::max(r.holder_small, max_holder_quotient(u.snapshots[i], u.snapshots[i - 1],
                                                                  u.times[i] - u.times[i - 1], battery));
    r.holder_large = std::max(r.holder_large,
                              max_holder_quotient(u.snapshots[i], u.snapshots[0], u.times[i] - u.times[0], battery));
  }
  // A jump would make the quotient blow up on short intervals.
  r.narrow_ok = std::isfinite(r.holder_small) && r.holder_small <= 4.0 * r.holder_large + 1e-12;
  return r;
}

}  // namespace nfpe

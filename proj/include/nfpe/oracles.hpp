#pragma once

// Self-check battery behind `nfpe validate`: closed forms and direct sums
// against the production code paths.

#include <chrono>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "nfpe/config.hpp"
#include "nfpe/entropy.hpp"
#include "nfpe/semigroup.hpp"

namespace nfpe {

struct OracleResult {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  double seconds = 0.0;
};

struct OracleOptions {
  /// Negative control: perturb one Fourier multiplier of the spectral convolution.
  bool inject_multiplier_bug = false;
};

namespace oracles {

inline Field random_field(const Grid& g, std::uint64_t seed) {
  Field f(g, 1);
  for (std::size_t i = 0; i < g.size(); ++i) f[i] = counter_uniform(seed, 11, i, 0, 0) - 0.5;
  return f;
}

inline Field gaussian(const Grid& g, double var) {
  return gaussian_mixture(g, {{0.0, 0.0, 0.0}}, {std::sqrt(var)}, {1.0});
}

inline double dft_roundtrip() {
  double err = 0.0;
  for (const Grid& g : {Grid(2, 32, 20.0), Grid(3, 16, 20.0)}) {
    const Field f = random_field(g, 3);
    const Field back = dft_inverse(dft_forward(f));
    err = std::max(err, lp_norm(back - f, Norm::Linf));
  }
  return err;
}

/// max relative deviation of spectral from direct convolution on n = 16.
inline double convolution(bool inject) {
  double err = 0.0;
  const std::vector<std::pair<Grid, KernelSpec>> cases{{Grid(2, 16, 20.0), KernelSpec{BiotSavartKernel{}, 0.0}},
                                                       {Grid(3, 16, 20.0), KernelSpec{RieszKernel{2.0, 1.0}, 0.0}}};
  for (const auto& [g, spec] : cases) {
    const Field k = sample_kernel(spec, g);
    const Field u = gaussian(g, 4.0) + 0.01 * random_field(g, 5);
    const Field direct = convolve_direct(k, u);
    auto spectra = convolution_spectra(k);
    if (inject) spectra[0][1] *= 1.001;
    const SpectralField U = dft_forward(u);
    Field spectral(g, g.dim());
    for (int c = 0; c < g.dim(); ++c) {
      SpectralField P(g);
      for (std::size_t s = 0; s < P.size(); ++s) P[s] = spectra[c][s] * U[s];
      const auto vals = inverse_values(std::move(P));
      std::copy(vals.begin(), vals.end(), spectral.component(c).begin());
    }
    err = std::max(err, lp_norm(spectral - direct, Norm::Linf) / lp_norm(direct, Norm::Linf));
  }
  return err;
}

/// Closed-form linear beta_eps against the generic Newton path.
inline double linear_beta_eps() {
  const double slope = 2.0;
  NonlinearitySpec closed;
  closed.beta = LinearBeta{slope};
  NonlinearitySpec generic;
  generic.beta = CustomBeta{[=](double r) { return slope * r; }, [=](double) { return slope; }, slope};
  double err = 0.0;
  for (double eps : {1e-1, 1e-2, 1e-3}) {
    for (int i = -40; i <= 40; ++i) {
      const double r = 0.37 * i;
      const double exact = (eps + slope / (1.0 + eps * slope)) * r;
      const double a = beta_eps(closed, r, eps);
      const double b = beta_eps(generic, r, eps);
      err = std::max(err, std::max(std::abs(a - exact), std::abs(b - exact)) / std::max(1.0, std::abs(exact)));
    }
  }
  return err;
}

/// 1/2 (W * u, u)_2 spectrally against the direct double sum.
inline double entropy_interaction() {
  const Grid g(3, 16, 20.0);
  const KernelSpec k{RieszKernel{2.0, 1.0}, 0.0};
  const Field u = gaussian(g, 4.0);
  NonlinearitySpec spec;
  const double spectral = entropy_parts(u, spec, k)->interaction;
  const Field w = *interaction_potential(k, g);
  double direct = 0.0;
  const double dv = g.cell_volume();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto ii = g.unflatten(i);
    double inner = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) {
      const auto jj = g.unflatten(j);
      std::array<std::size_t, 3> d{};
      for (int a = 0; a < 3; ++a) d[a] = (ii[a] + g.n() - jj[a]) % g.n();
      inner += w[g.flatten(d)] * u[j];
    }
    direct += inner * u[i];
  }
  direct *= 0.5 * dv * dv;
  return std::abs(spectral - direct) / std::abs(direct);
}

inline Trajectory short_run(const Grid& g, const KernelSpec& k, double T, int steps) {
  EvolutionConfig cfg;
  cfg.T = T;
  cfg.n_steps = steps;
  cfg.snapshot_every = steps;
  cfg.monitors = {false, false};
  return evolve(gaussian(g, 1.0), cfg, NonlinearitySpec{}, k);
}

inline double heat_kernel() {
  const Grid g(2, 64, 20.0);
  const Trajectory tr = short_run(g, KernelSpec{}, 0.1, 100);
  if (!tr.ok()) return INFINITY;
  return lp_norm(tr.final_state() - gaussian(g, 1.0 + 0.2), Norm::L2);
}

inline double lamb_oseen() {
  const Grid g(2, 64, 20.0);
  const Trajectory heat = short_run(g, KernelSpec{}, 0.1, 100);
  const Trajectory bs = short_run(g, KernelSpec{BiotSavartKernel{}, 0.0}, 0.1, 100);
  if (!heat.ok() || !bs.ok()) return INFINITY;
  if (bs.final_state().max() > bs.snapshots.front().max() + 1e-6) return INFINITY;
  return lp_norm(bs.final_state() - heat.final_state(), Norm::L2);
}

/// Number of failed invariant checks over a small resolvent matrix.
inline double resolvent_invariant_matrix() {
  int failures = 0;
  const std::vector<std::pair<Grid, KernelSpec>> cases{{Grid(2, 64, 20.0), KernelSpec{}},
                                                       {Grid(2, 64, 20.0), KernelSpec{BiotSavartKernel{}, 0.0}}};
  for (const auto& [g, k] : cases) {
    const Field f = random_mixture(g, 3, 42, 1.0);
    for (double lambda : {1e-3, 1e-2})
      for (double eps : {1e-2, 1e-3}) {
        ResolventConfig rc;
        rc.lambda = lambda;
        rc.eps = eps;
        try {
          const auto r = resolvent_step(f, rc, NonlinearitySpec{}, k);
          if (!r.invariant_report.all_ok()) ++failures;
        } catch (const NumericalError&) {
          ++failures;
        }
      }
  }
  return failures;
}

}  // namespace oracles

inline std::vector<OracleResult> run_oracle_battery(const OracleOptions& opts = {}) {
  using clock = std::chrono::steady_clock;
  std::vector<OracleResult> out;
  const auto start = clock::now();
  auto run = [&](const std::string& name, double tol, const std::function<double()>& f) {
    const auto t0 = clock::now();
    OracleResult r;
    r.name = name;
    r.tolerance = tol;
    r.value = f();
    r.passed = std::isfinite(r.value) && r.value <= tol;
    r.seconds = std::chrono::duration<double>(clock::now() - t0).count();
    out.push_back(r);
  };
  run("dft_roundtrip_max_abs", 1e-12, oracles::dft_roundtrip);
  run("convolution_spectral_vs_direct_rel", 1e-10, [&] { return oracles::convolution(opts.inject_multiplier_bug); });
  run("beta_eps_linear_closed_form_rel", 1e-13, oracles::linear_beta_eps);
  run("entropy_interaction_vs_direct_rel", 1e-10, oracles::entropy_interaction);
  run("heat_kernel_l2_error", 2e-3, oracles::heat_kernel);
  run("lamb_oseen_vs_heat_l2", 5e-3, oracles::lamb_oseen);
  run("resolvent_invariant_failures", 0.0, oracles::resolvent_invariant_matrix);
  OracleResult wall;
  wall.name = "total_wall_seconds";
  wall.tolerance = 300.0;
  wall.value = std::chrono::duration<double>(clock::now() - start).count();
  wall.passed = wall.value <= wall.tolerance;
  wall.seconds = wall.value;
  out.push_back(wall);
  return out;
}

}  // namespace nfpe

// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero
// if any criterion fails. Pass criterion numbers as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "nfpe/config.hpp"
#include "nfpe/diagnostics.hpp"
#include "nfpe/mckean_vlasov.hpp"
#include "nfpe/oracles.hpp"
#include "nfpe/semigroup.hpp"

using namespace nfpe;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Field gaussian(const Grid& g, double var, double shift = 0.0) {
  return gaussian_mixture(g, {{shift, 0.0, 0.0}}, {std::sqrt(var)}, {1.0});
}

struct Scenario {
  std::string name;
  int dim;
  int n;
  KernelSpec kernel;
  double sigma;
};

/// The scenario matrix shared by several criteria.
std::vector<Scenario> scenarios() {
  return {{"heat", 2, 128, KernelSpec{}, 1.0},
          {"riesz_s2_d3", 3, 64, KernelSpec{RieszKernel{2.0, 1.0}, 0.0}, 1.5},
          {"bessel_a1_d3", 3, 64, KernelSpec{BesselKernel{1.0}, 0.0}, 1.5},
          {"biot_savart", 2, 128, KernelSpec{BiotSavartKernel{}, 0.0}, 1.0}};
}

Trajectory run(const Field& u0, const KernelSpec& k, double T, int steps, std::optional<double> eps = std::nullopt,
               int snapshot_every = 1) {
  EvolutionConfig cfg;
  cfg.T = T;
  cfg.n_steps = steps;
  cfg.eps = eps;
  cfg.snapshot_every = snapshot_every;
  cfg.monitors = {false, false};
  Trajectory tr = evolve(u0, cfg, NonlinearitySpec{}, k);
  if (!tr.ok()) throw NumericalError(*tr.error);
  return tr;
}

double heat_error(double L, int n, int steps) {
  const Grid g(2, n, L);
  const double T = 0.5;
  const Trajectory tr = run(gaussian(g, 1.0), KernelSpec{}, T, steps, std::nullopt, steps);
  return lp_norm(tr.final_state() - gaussian(g, 1.0 + 2.0 * T), Norm::L2);
}

// 1. Heat equation against the exact Gaussian.
Outcome criterion1() {
  const double e1 = heat_error(20.0, 128, 500);
  const double e2 = heat_error(20.0, 128, 1000);
  const double ratio = e1 / e2;
  return {e1 <= 2e-3 && ratio >= 1.8, fmt("L2 error %.3e (<= 2e-3), halving ratio %.3f (>= 1.8)", e1, ratio)};
}

// 2. Radial Gaussian under Biot-Savart evolves as the heat solution.
Outcome criterion2() {
  const Grid g(2, 128, 20.0);
  const double T = 0.5;
  const Field u0 = gaussian(g, 1.0);
  const Trajectory tr = run(u0, KernelSpec{BiotSavartKernel{}, 0.0}, T, 500, std::nullopt, 10);
  const double dev = lp_norm(tr.final_state() - gaussian(g, 1.0 + 2.0 * T), Norm::L2);
  double excess = -INFINITY;
  for (const auto& s : tr.snapshots) excess = std::max(excess, s.max() - u0.max());
  return {dev <= 5e-3 && excess <= 1e-6,
          fmt("L2 deviation from heat %.3e (<= 5e-3), max u(t) - max u0 = %.3e (<= 1e-6)", dev, excess)};
}

// 3. Mass, positivity and L-infinity bound of single resolvent steps.
Outcome criterion3() {
  int checks = 0, failures = 0;
  std::string worst;
  for (const auto& s : scenarios()) {
    const Grid g(s.dim, s.n, 20.0);
    const double gamma = gamma_constant(s.kernel, g).grid_value();
    for (std::uint64_t seed : {11u, 12u, 13u}) {
      const Field f = random_mixture(g, 3, seed, s.sigma);
      for (double lambda : {1e-3, 1e-2})
        for (double eps : {1e-2, 1e-3}) {
          ResolventConfig rc;
          rc.lambda = lambda;
          rc.eps = eps;
          rc.gamma = gamma;
          ++checks;
          try {
            const auto r = resolvent_step(f, rc, NonlinearitySpec{}, s.kernel);
            const auto& ir = r.invariant_report;
            if (!ir.applicable || !ir.all_ok()) {
              ++failures;
              worst = fmt("%s lambda=%g eps=%g: dmass=%.2e min=%.2e max=%.6g bound=%.6g", s.name.c_str(), lambda,
                          eps, ir.mass_out - ir.mass_in, ir.min_u, ir.max_u, ir.bound_N);
            }
          } catch (const NumericalError& e) {
            ++failures;
            worst = s.name + ": " + e.what();
          }
        }
    }
  }
  return {failures == 0, fmt("%d/%d resolvent steps satisfy all invariants%s%s", checks - failures, checks,
                             worst.empty() ? "" : "; last failure ", worst.c_str())};
}

// 4. H^-1 quasi-contraction with a stable rate under refinement.
Outcome criterion4() {
  bool ok = true;
  std::ostringstream os;
  const double T = 0.5, shift = 0.25;
  for (const auto& s : scenarios()) {
    double omega[2];
    bool envelope = true, nonincreasing = true;
    for (int r = 0; r < 2; ++r) {
      const int n = (s.dim == 3 ? 32 : 64) << r;
      const Grid g(s.dim, n, 20.0);
      const Trajectory a = run(gaussian(g, s.sigma * s.sigma), s.kernel, T, 50);
      const Trajectory b = run(gaussian(g, s.sigma * s.sigma, shift), s.kernel, T, 50);
      const auto rep = compare_trajectories(a, b, 0.0);
      omega[r] = rep.omega_hat;
      envelope = envelope && rep.envelope_ok;
      nonincreasing = nonincreasing && rep.nonincreasing;
    }
    const bool stable = std::abs(omega[1] - omega[0]) <= 0.3 * std::abs(omega[0]);
    const bool pass = envelope && stable && (s.name != "heat" || nonincreasing);
    ok = ok && pass;
    os << s.name << fmt(" w(n)=%.4f w(2n)=%.4f%s; ", omega[0], omega[1], pass ? "" : " FAIL");
  }
  return {ok, os.str()};
}

// 5. Self-convergence of the exponential formula.
Outcome criterion5() {
  bool ok = true;
  std::ostringstream os;
  const double t = 0.5, eps = 1e-2;
  for (const auto& s : scenarios()) {
    const Grid g(s.dim, s.n, 20.0);
    const Field u0 = random_mixture(g, 3, 21, s.sigma);
    std::vector<Field> S;
    for (int n : {8, 16, 32, 64, 128}) S.push_back(exponential_formula(u0, t, n, NonlinearitySpec{}, s.kernel, eps));
    std::vector<double> d;
    for (std::size_t i = 0; i + 1 < S.size(); ++i) d.push_back(hminus1_norm(S[i] - S[i + 1]));
    bool dec = true;
    double min_order = INFINITY;
    for (std::size_t i = 0; i + 1 < d.size(); ++i) {
      dec = dec && d[i + 1] < d[i];
      min_order = std::min(min_order, std::log2(d[i] / d[i + 1]));
    }
    const bool pass = dec && min_order >= 0.8;
    ok = ok && pass;
    os << s.name << fmt(" d8=%.2e d64=%.2e order>=%.3f%s; ", d.front(), d.back(), min_order, pass ? "" : " FAIL");
  }
  return {ok, os.str()};
}

// 6. Gronwall-shaped gap between lambda and lambda/2 trajectories.
Outcome criterion6() {
  const Grid g(2, 128, 20.0);
  InitialBlock ib;
  RunConfig rc;
  rc.grid = {2, 128, 20.0};
  rc.initial.kind = "two_blobs";
  rc.initial.sigma = 1.0;
  rc.initial.offset = 2.0;
  const Field u0 = rc.make_initial(g);
  const KernelSpec k{BiotSavartKernel{}, 0.0};
  const double T = 0.5, eps_reg = 0.1;
  const Trajectory a = run(u0, k, T, 50, eps_reg, 1);
  const Trajectory b = run(u0, k, T, 100, eps_reg, 2);
  const auto probe = run_uniqueness_probe(a, b, {1e-1, 1e-2, 1e-3});
  std::ostringstream os;
  for (const auto& f : probe.fits) os << fmt("eps=%g C=%.4g h0=%.1e; ", f.eps, f.C_fit, f.h0);
  os << fmt("median C=%.4g stable(+-50%%)=%s", probe.C_median, probe.C_stable ? "yes" : "no");
  return {probe.passes(), os.str()};
}

// 7. Particle law matching against the PDE.
Outcome criterion7() {
  const Grid g(2, 128, 20.0);
  const Field u0 = gaussian(g, 1.0);
  const double T = 0.5, dt = 1e-2;
  const Trajectory pde = run(u0, KernelSpec{}, T, 50);
  const Field& uT = pde.final_state();
  std::vector<double> med;
  double floor = 0.0;
  for (std::size_t N : {1000u, 10000u, 100000u}) {
    std::vector<double> dist, boot;
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const auto res = simulate(u0, PdeFrozen{&pde}, N, dt, T, seed, NonlinearitySpec{}, KernelSpec{});
      const double bw = default_bandwidth(res.final_ensemble, g);
      dist.push_back(hminus1_norm(kde_density(res.final_ensemble, g, bw) - uT));
      const ParticleEnsemble direct = sample_initial(uT, N, 1000 + seed);
      boot.push_back(hminus1_norm(kde_density(direct, g, bw) - uT));
    }
    std::sort(dist.begin(), dist.end());
    std::sort(boot.begin(), boot.end());
    med.push_back(dist[1]);
    floor = boot[1];
  }
  const bool mono = med[1] < med[0] && med[2] < med[1];
  const bool near = med[2] <= 3.0 * floor;
  return {mono && near, fmt("median H^-1 distance %.3e, %.3e, %.3e; floor at 1e5 %.3e (ratio %.2f <= 3)", med[0],
                            med[1], med[2], floor, med[2] / floor)};
}

// 8. Oracle battery.
Outcome criterion8() {
  const auto results = run_oracle_battery();
  std::ostringstream os;
  bool ok = true;
  for (const auto& r : results) {
    ok = ok && r.passed;
    os << r.name << '=' << fmt("%.2e", r.value) << (r.passed ? "" : "(FAIL)") << ' ';
  }
  return {ok, os.str()};
}

// 9. Domain truncation: the heat error at L = 40 (same spacing) stays within 20%.
Outcome criterion9() {
  const double e20 = heat_error(20.0, 128, 500);
  const double e40 = heat_error(40.0, 256, 500);
  const double change = std::abs(e40 - e20) / e20;
  return {change <= 0.2, fmt("error L=20 %.4e, L=40 %.4e, relative change %.3f (<= 0.2)", e20, e40, change)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Outcome()>> criteria{criterion1, criterion2, criterion3, criterion4, criterion5,
                                                       criterion6, criterion7, criterion8, criterion9};
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s criterion %d: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", id, o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}

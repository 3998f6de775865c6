#pragma once

// Euler-Maruyama particle system whose one-time marginals approximate the
// PDE solution, and the kernel density estimate that maps particles back to
// grid densities.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <numeric>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "nfpe/semigroup.hpp"

namespace nfpe {

// ---------------------------------------------------------------------------
// Counter-based random numbers: every draw is a pure function of
// (seed, stream, particle, step, component), so results do not depend on how
// particles are split across threads.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t stream, std::uint64_t particle, std::uint64_t step,
                                  std::uint64_t comp) {
  std::uint64_t h = splitmix64(seed ^ (stream * 0xd1b54a32d192ed03ULL));
  h = splitmix64(h ^ particle);
  h = splitmix64(h ^ (step * 0x9e3779b97f4a7c15ULL));
  return splitmix64(h ^ comp);
}

/// Uniform in [0, 1).
inline double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t particle, std::uint64_t step,
                              std::uint64_t comp) {
  return static_cast<double>(counter_hash(seed, stream, particle, step, comp) >> 11) * 0x1.0p-53;
}

/// Standard normal by Box-Muller.
inline double counter_normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t particle, std::uint64_t step,
                             std::uint64_t comp) {
  const double u1 = 1.0 - counter_uniform(seed, stream, particle, step, 2 * comp);
  const double u2 = counter_uniform(seed, stream, particle, step, 2 * comp + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::acos(-1.0) * u2);
}

enum : std::uint64_t { kStreamInit = 1, kStreamNoise = 2 };

/// Number of worker threads: explicit value, else NFPE_THREADS, else 1.
inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("NFPE_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 1;
}

template <class F>
void parallel_for(std::size_t count, int threads, F&& fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(threads, 1), std::max<std::size_t>(count, 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  const std::size_t chunk = (count + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        const std::size_t end = std::min(count, (w + 1) * chunk);
        for (std::size_t i = w * chunk; i < end; ++i) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// ---------------------------------------------------------------------------

struct ParticleEnsemble {
  int dim = 2;
  std::array<double, 3> extent{0.0, 0.0, 0.0};
  std::vector<double> positions;  ///< particle-major: positions[p*dim + a]
  std::uint64_t seed = 0;
  std::uint64_t step = 0;
  double time = 0.0;

  std::size_t size() const { return positions.size() / static_cast<std::size_t>(dim); }
  double x(std::size_t p, int a) const { return positions[p * dim + a]; }
};

inline double wrap_coordinate(double x, double L) {
  double r = std::fmod(x, L);
  if (r < 0.0) r += L;
  if (r >= L) r = 0.0;
  return r;
}

/// N samples from the cell distribution of u0: inverse CDF on cells, then a
/// uniform position in the cell centered on the chosen node.
inline ParticleEnsemble sample_initial(const Field& u0, std::size_t N, std::uint64_t seed) {
  require_scalar(u0, "sample_initial");
  require_finite(u0, "sample_initial");
  if (N < 1) throw ConfigError("sample_initial: N must be >= 1");
  if (u0.min() < -kInitialNegativityTolerance) throw ConfigError("sample_initial: density has negative cells");
  const Grid& g = u0.grid();
  std::vector<double> cdf(g.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    acc += std::max(u0[i], 0.0);
    cdf[i] = acc;
  }
  if (!(acc > 0.0)) throw ConfigError("sample_initial: density has zero mass");

  ParticleEnsemble ens;
  ens.dim = g.dim();
  ens.extent = g.extents();
  ens.seed = seed;
  ens.positions.resize(N * g.dim());
  for (std::size_t p = 0; p < N; ++p) {
    const double target = counter_uniform(seed, kStreamInit, p, 0, 0) * acc;
    std::size_t cell = std::upper_bound(cdf.begin(), cdf.end(), target) - cdf.begin();
    cell = std::min(cell, g.size() - 1);
    while (u0[cell] <= 0.0 && cell + 1 < g.size()) ++cell;
    const auto idx = g.unflatten(cell);
    for (int a = 0; a < g.dim(); ++a) {
      const double jitter = counter_uniform(seed, kStreamInit, p, 0, 1 + a);
      ens.positions[p * g.dim() + a] = wrap_coordinate((idx[a] + jitter - 0.5) * g.spacing(a), g.extent(a));
    }
  }
  return ens;
}

/// Periodic multilinear interpolation of component c of `f` at x.
inline double interpolate(const Field& f, int c, const double* x) {
  const Grid& g = f.grid();
  const auto vals = f.component(c);
  const int d = g.dim();
  const std::size_t n = g.n();
  std::array<std::size_t, 3> i0{}, i1{};
  std::array<double, 3> w{};
  for (int a = 0; a < d; ++a) {
    const double s = x[a] / g.spacing(a);
    const double fl = std::floor(s);
    w[a] = s - fl;
    const auto base = static_cast<long long>(fl);
    const auto nn = static_cast<long long>(n);
    i0[a] = static_cast<std::size_t>(((base % nn) + nn) % nn);
    i1[a] = (i0[a] + 1) % n;
  }
  double out = 0.0;
  const int corners = 1 << d;
  for (int m = 0; m < corners; ++m) {
    std::array<std::size_t, 3> idx{};
    double weight = 1.0;
    for (int a = 0; a < d; ++a) {
      const bool hi = (m >> a) & 1;
      idx[a] = hi ? i1[a] : i0[a];
      weight *= hi ? w[a] : 1.0 - w[a];
    }
    out += weight * vals[g.flatten(idx)];
  }
  return out;
}

/// One Euler-Maruyama step X <- wrap(X + drift(X) dt + sigma(X) sqrt(dt) xi).
inline void em_step(ParticleEnsemble& ens, double dt, const Field& drift, const Field& sigma, int threads = 1) {
  if (dt < 0.0 || !std::isfinite(dt)) throw ConfigError("em_step: dt must be nonnegative");
  if (dt == 0.0) return;
  const Grid& g = drift.grid();
  if (drift.components() != g.dim() || !sigma.is_scalar()) throw ConfigError("em_step: bad field shapes");
  require_same_grid(g, sigma.grid(), "em_step");
  if (g.dim() != ens.dim) throw ConfigError("em_step: dimension mismatch");
  for (int a = 0; a < ens.dim; ++a)
    if (g.extent(a) != ens.extent[a]) throw ConfigError("em_step: torus extent mismatch");
  const double sq = std::sqrt(dt);
  const int d = ens.dim;
  parallel_for(ens.size(), resolve_threads(threads), [&](std::size_t p) {
    double* x = &ens.positions[p * d];
    const double s = interpolate(sigma, 0, x);
    std::array<double, 3> dx{};
    for (int a = 0; a < d; ++a)
      dx[a] = interpolate(drift, a, x) * dt + s * sq * counter_normal(ens.seed, kStreamNoise, p, ens.step, a);
    for (int a = 0; a < d; ++a) {
      const double nx = x[a] + dx[a];
      if (!std::isfinite(nx)) throw NumericalError("em_step: non-finite position for particle " + std::to_string(p));
      x[a] = wrap_coordinate(nx, ens.extent[a]);
    }
  });
  ens.step += 1;
  ens.time += dt;
}

struct CoefficientFields {
  Field drift;
  Field sigma;
  std::size_t clamped_cells = 0;
};

/// Drift D b(u) + K * u and diffusion sigma = sqrt(2 beta(u)/u), the latter
/// clamped into [sqrt(2 alpha), sqrt(2 sup beta')].
inline CoefficientFields build_fields(const Field& u, const NonlinearitySpec& spec, const KernelSpec& kernel) {
  require_scalar(u, "build_fields");
  const Grid& g = u.grid();
  CoefficientFields out{Field(g, g.dim()), Field(g, 1), 0};
  if (!kernel_is_zero(kernel)) {
    const Field k = sample_kernel(kernel, g);
    out.drift = KernelOperator(k).convolve(u);
  }
  if (has_drift(spec)) {
    const Field d = drift_field(spec, g);
    for (int a = 0; a < g.dim(); ++a)
      for (std::size_t i = 0; i < g.size(); ++i) out.drift.component(a)[i] += d.component(a)[i] * mobility(spec, u[i]);
  }
  const double umax = std::max(u.max(), 0.0);
  double sup_slope = beta_prime(spec, 0.0);
  for (int i = 1; i <= 64; ++i) sup_slope = std::max(sup_slope, beta_prime(spec, umax * i / 64.0));
  const double lo = std::sqrt(2.0 * alpha_floor(spec));
  const double hi = std::sqrt(2.0 * sup_slope);
  const double s0 = std::sqrt(2.0 * beta_prime(spec, 0.0));
  for (std::size_t i = 0; i < g.size(); ++i) {
    double s = u[i] < 1e-12 ? s0 : std::sqrt(2.0 * beta(spec, u[i]) / u[i]);
    if (s < lo * (1.0 - 1e-12) || s > hi * (1.0 + 1e-12)) ++out.clamped_cells;
    out.sigma[i] = std::clamp(s, lo, hi);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Kernel density estimate

/// Default bandwidth max(2 h, N^{-1/(d+4)} sigma_data), sigma_data being the
/// mean per-axis spread of the ensemble about its circular mean.
inline double default_bandwidth(const ParticleEnsemble& ens, const Grid& grid) {
  const std::size_t N = ens.size();
  double spread = 0.0;
  const double two_pi = 2.0 * std::acos(-1.0);
  for (int a = 0; a < ens.dim; ++a) {
    const double L = ens.extent[a];
    double c = 0.0, s = 0.0;
    for (std::size_t p = 0; p < N; ++p) {
      c += std::cos(two_pi * ens.x(p, a) / L);
      s += std::sin(two_pi * ens.x(p, a) / L);
    }
    const double mean = std::atan2(s, c) / two_pi * L;
    double var = 0.0;
    for (std::size_t p = 0; p < N; ++p) {
      double dx = ens.x(p, a) - mean;
      dx -= L * std::round(dx / L);
      var += dx * dx;
    }
    spread += std::sqrt(var / static_cast<double>(N));
  }
  spread /= ens.dim;
  return std::max(2.0 * grid.min_spacing(), std::pow(static_cast<double>(N), -1.0 / (ens.dim + 4)) * spread);
}

/// Periodic Gaussian KDE: linear (cloud-in-cell) deposit onto grid nodes,
/// then convolution with a normalized, periodized discrete Gaussian.
inline Field kde_density(const ParticleEnsemble& ens, const Grid& grid, double bandwidth) {
  if (ens.dim != grid.dim()) throw ConfigError("kde_density: dimension mismatch");
  if (!(bandwidth >= 2.0 * grid.min_spacing() * (1.0 - 1e-12)))
    throw ConfigError("kde_density: bandwidth must be at least 2 grid spacings");
  const std::size_t N = ens.size();
  if (N == 0) throw ConfigError("kde_density: empty ensemble");
  Field hist(grid, 1);
  const int d = grid.dim();
  const std::size_t n = grid.n();
  for (std::size_t p = 0; p < N; ++p) {
    std::array<std::size_t, 3> i0{}, i1{};
    std::array<double, 3> w{};
    for (int a = 0; a < d; ++a) {
      const double s = ens.x(p, a) / grid.spacing(a);
      const double fl = std::floor(s);
      w[a] = s - fl;
      i0[a] = static_cast<std::size_t>(fl) % n;
      i1[a] = (i0[a] + 1) % n;
    }
    for (int m = 0; m < (1 << d); ++m) {
      std::array<std::size_t, 3> idx{};
      double weight = 1.0;
      for (int a = 0; a < d; ++a) {
        const bool hi = (m >> a) & 1;
        idx[a] = hi ? i1[a] : i0[a];
        weight *= hi ? w[a] : 1.0 - w[a];
      }
      hist[grid.flatten(idx)] += weight;
    }
  }
  // Separable periodized Gaussian weights per axis, each normalized to sum 1.
  std::array<std::vector<double>, 3> axis_w;
  for (int a = 0; a < d; ++a) {
    axis_w[a].assign(n, 0.0);
    const double h = grid.spacing(a), L = grid.extent(a);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double x = static_cast<double>(i) * h;
      if (x > 0.5 * L) x -= L;
      double v = 0.0;
      for (int m = -2; m <= 2; ++m) v += std::exp(-0.5 * std::pow((x + m * L) / bandwidth, 2));
      axis_w[a][i] = v;
      sum += v;
    }
    for (double& v : axis_w[a]) v /= sum;
  }
  Field kernel(grid, 1);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto idx = grid.unflatten(i);
    double v = 1.0;
    for (int a = 0; a < d; ++a) v *= axis_w[a][idx[a]];
    kernel[i] = v;
  }
  // Circular convolution hist (*) kernel via the DFT.
  SpectralField H = dft_forward(hist);
  const SpectralField G = dft_forward(kernel);
  for (std::size_t s = 0; s < H.size(); ++s) H[s] *= G[s];
  Field out(grid, 1, inverse_values(std::move(H)));
  const double norm = 1.0 / (static_cast<double>(N) * grid.cell_volume());
  for (std::size_t i = 0; i < grid.size(); ++i) out[i] = std::max(out[i] * norm, 0.0);
  const double mass = out.integral();
  out *= 1.0 / mass;
  return out;
}

// ---------------------------------------------------------------------------

struct PdeFrozen {
  const Trajectory* trajectory = nullptr;
};

struct SelfConsistent {
  double kde_bandwidth = 0.0;
};

using CouplingMode = std::variant<PdeFrozen, SelfConsistent>;

struct SimulationOptions {
  int snapshot_every = 0;             ///< 0: only initial and final
  double output_bandwidth = 0.0;      ///< 0: default rule
  int threads = 0;
  bool keep_positions = false;
};

struct SimulationResult {
  std::vector<double> times;
  std::vector<ParticleEnsemble> ensembles;  ///< when keep_positions
  std::vector<Field> kde;
  ParticleEnsemble final_ensemble;
  std::size_t clamped_cells = 0;
};

inline SimulationResult simulate(const Field& u0, const CouplingMode& mode, std::size_t N, double dt, double T,
                                 std::uint64_t seed, const NonlinearitySpec& spec, const KernelSpec& kernel,
                                 const SimulationOptions& opts = {}) {
  require_probability_density(u0, "simulate");
  if (!(dt > 0.0)) throw ConfigError("simulate: dt must be positive");
  if (!(T >= 0.0)) throw ConfigError("simulate: T must be nonnegative");
  const long long steps = std::llround(T / dt);
  if (std::abs(steps * dt - T) > 1e-9 * std::max(1.0, T)) throw ConfigError("simulate: T must be a multiple of dt");
  const Grid& g = u0.grid();

  const Trajectory* frozen = nullptr;
  if (const auto* pf = std::get_if<PdeFrozen>(&mode)) {
    frozen = pf->trajectory;
    if (!frozen || frozen->snapshots.empty()) throw ConfigError("simulate: frozen mode needs a trajectory");
    require_same_grid(frozen->snapshots.front().grid(), g, "simulate");
    if (frozen->times.front() != 0.0 || frozen->times.back() < T - 1e-12)
      throw ConfigError("simulate: trajectory does not cover [0, T]");
    for (std::size_t j = 1; j < frozen->times.size(); ++j) {
      const double r = (frozen->times[j] - frozen->times[j - 1]) / dt;
      if (std::abs(r - std::round(r)) > 1e-6 || std::round(r) < 1)
        throw ConfigError("simulate: trajectory times are not aligned with dt multiples");
    }
  } else {
    const double bw = std::get<SelfConsistent>(mode).kde_bandwidth;
    if (!(bw > 0.0)) throw ConfigError("simulate: self-consistent mode needs a positive bandwidth");
  }

  SimulationResult res;
  ParticleEnsemble ens = sample_initial(u0, N, seed);
  const double out_bw = opts.output_bandwidth > 0.0 ? opts.output_bandwidth : default_bandwidth(ens, g);
  auto record = [&] {
    res.times.push_back(ens.time);
    res.kde.push_back(kde_density(ens, g, out_bw));
    if (opts.keep_positions) res.ensembles.push_back(ens);
  };
  record();

  std::size_t current = static_cast<std::size_t>(-1);
  CoefficientFields coeff;
  for (long long k = 0; k < steps; ++k) {
    const double t = k * dt;
    if (frozen) {
      std::size_t j = 0;
      while (j + 1 < frozen->times.size() && frozen->times[j + 1] <= t + 1e-9 * dt) ++j;
      if (j != current) {
        coeff = build_fields(frozen->snapshots[j], spec, kernel);
        res.clamped_cells += coeff.clamped_cells;
        current = j;
      }
    } else {
      const Field u = kde_density(ens, g, std::get<SelfConsistent>(mode).kde_bandwidth);
      coeff = build_fields(u, spec, kernel);
      res.clamped_cells += coeff.clamped_cells;
    }
    em_step(ens, dt, coeff.drift, coeff.sigma, opts.threads);
    ens.time = (k + 1) * dt;
    const bool last = k + 1 == steps;
    if (last || (opts.snapshot_every > 0 && (k + 1) % opts.snapshot_every == 0)) record();
  }
  res.final_ensemble = std::move(ens);
  return res;
}

/// Rows t, particle_id, x1..xd.
inline void write_particles_csv(const std::string& path, const std::vector<ParticleEnsemble>& snapshots) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << std::setprecision(17);
  const int d = snapshots.empty() ? 2 : snapshots.front().dim;
  os << "t,particle_id";
  for (int a = 0; a < d; ++a) os << ",x" << a + 1;
  os << '\n';
  for (const auto& e : snapshots)
    for (std::size_t p = 0; p < e.size(); ++p) {
      os << e.time << ',' << p;
      for (int a = 0; a < d; ++a) os << ',' << e.x(p, a);
      os << '\n';
    }
}

}  // namespace nfpe

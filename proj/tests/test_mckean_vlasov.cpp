#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>

#include "nfpe/config.hpp"
#include "nfpe/mckean_vlasov.hpp"

using namespace nfpe;

namespace {
Field blob(const Grid& g, double sigma = 1.0) { return gaussian_mixture(g, {{0.0, 0.0, 0.0}}, {sigma}, {1.0}); }

ParticleEnsemble point_cloud(int dim, double L, std::size_t N, double at, std::uint64_t seed) {
  ParticleEnsemble e;
  e.dim = dim;
  e.extent = {L, L, dim == 3 ? L : 0.0};
  e.seed = seed;
  e.positions.assign(N * dim, at);
  return e;
}
}  // namespace

TEST(Rng, CounterStreamsArePureFunctions) {
  EXPECT_EQ(counter_hash(1, 2, 3, 4, 5), counter_hash(1, 2, 3, 4, 5));
  EXPECT_NE(counter_hash(1, 2, 3, 4, 5), counter_hash(1, 2, 3, 4, 6));
  EXPECT_NE(counter_hash(1, 2, 3, 4, 5), counter_hash(2, 2, 3, 4, 5));
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = counter_normal(9, kStreamNoise, i, 0, 0);
    sum += z;
    sq += z * z;
  }
  EXPECT_NEAR(sum / n, 0.0, 5.0 / std::sqrt(n));
  EXPECT_NEAR(sq / n, 1.0, 5.0 * std::sqrt(2.0 / n));
}

TEST(Threads, ExplicitThenEnvironmentThenOne) {
  ::unsetenv("NFPE_THREADS");
  EXPECT_EQ(resolve_threads(0), 1);
  ::setenv("NFPE_THREADS", "3", 1);
  EXPECT_EQ(resolve_threads(0), 3);
  EXPECT_EQ(resolve_threads(2), 2);
  ::unsetenv("NFPE_THREADS");
}

TEST(Threads, ParallelForPropagatesExceptions) {
  EXPECT_THROW(parallel_for(100, 4, [](std::size_t i) { if (i == 57) throw NumericalError("boom"); }), NumericalError);
}

TEST(Sampling, UniformDensityPassesChiSquare) {
  const Grid g(2, 16, 8.0);
  const std::size_t N = 32000;
  const auto ens = sample_initial(Field(g, 1, 1.0 / g.volume()), N, 5);
  std::vector<double> bins(16, 0.0);
  for (std::size_t p = 0; p < N; ++p) {
    ASSERT_GE(ens.x(p, 0), 0.0);
    ASSERT_LT(ens.x(p, 0), 8.0);
    bins[static_cast<int>(ens.x(p, 0) / 2.0) * 4 + static_cast<int>(ens.x(p, 1) / 2.0)] += 1.0;
  }
  const double expected = N / 16.0;
  double chi2 = 0.0;
  for (double b : bins) chi2 += (b - expected) * (b - expected) / expected;
  EXPECT_LT(chi2, 45.0);  // 15 degrees of freedom
}

TEST(Sampling, MeanMatchesDensity) {
  const Grid g(2, 64, 20.0);
  const auto ens = sample_initial(gaussian_mixture(g, {{3.0, 0.0, 0.0}}, {1.0}, {1.0}), 20000, 1);
  double mx = 0.0;
  for (std::size_t p = 0; p < ens.size(); ++p) mx += ens.x(p, 0);
  EXPECT_NEAR(mx / ens.size(), 3.0, 0.05);
}

TEST(Sampling, RejectsBadInput) {
  const Grid g(2, 16, 8.0);
  EXPECT_THROW(sample_initial(blob(g), 0, 1), ConfigError);
  EXPECT_THROW(sample_initial(Field(g, 1), 10, 1), ConfigError);
}

TEST(EulerMaruyama, ConstantDriftTranslatesExactly) {
  const Grid g(2, 16, 10.0);
  Field drift(g, 2);
  for (std::size_t i = 0; i < g.size(); ++i) drift.component(0)[i] = 3.0;
  auto ens = point_cloud(2, 10.0, 5, 9.5, 1);
  em_step(ens, 0.5, drift, Field(g, 1), 1);
  for (std::size_t p = 0; p < 5; ++p) {
    EXPECT_NEAR(ens.x(p, 0), 1.0, 1e-12);
    EXPECT_EQ(ens.x(p, 1), 9.5);
  }
  EXPECT_EQ(ens.step, 1u);
}

TEST(EulerMaruyama, BrownianVarianceGrowsLinearly) {
  const Grid g(2, 16, 100.0);
  const double s = 0.7, dt = 0.01;
  const int steps = 50;
  const std::size_t N = 20000;
  auto ens = point_cloud(2, 100.0, N, 50.0, 77);
  for (int k = 0; k < steps; ++k) em_step(ens, dt, Field(g, 2), Field(g, 1, s), 1);
  double var = 0.0;
  for (std::size_t p = 0; p < N; ++p) var += (ens.x(p, 0) - 50.0) * (ens.x(p, 0) - 50.0);
  var /= N;
  const double expect = s * s * dt * steps;
  EXPECT_NEAR(var, expect, 5.0 * expect * std::sqrt(2.0 / N));
}

TEST(EulerMaruyama, ZeroStepIsIdentity) {
  const Grid g(2, 16, 10.0);
  auto ens = point_cloud(2, 10.0, 3, 1.25, 3);
  const auto before = ens.positions;
  em_step(ens, 0.0, Field(g, 2, 1.0), Field(g, 1, 1.0));
  EXPECT_EQ(ens.positions, before);
  EXPECT_EQ(ens.step, 0u);
  EXPECT_THROW(em_step(ens, -1.0, Field(g, 2), Field(g, 1)), ConfigError);
}

TEST(EulerMaruyama, ResultDoesNotDependOnThreadCount) {
  const Grid g(2, 32, 10.0);
  const auto fields = build_fields(blob(g), NonlinearitySpec{}, KernelSpec{BiotSavartKernel{}, 0.0});
  auto a = sample_initial(blob(g), 5000, 11);
  auto b = a;
  for (int k = 0; k < 5; ++k) {
    em_step(a, 0.01, fields.drift, fields.sigma, 1);
    em_step(b, 0.01, fields.drift, fields.sigma, 4);
  }
  EXPECT_EQ(a.positions, b.positions);
}

TEST(EulerMaruyama, NonFiniteDriftReportsParticle) {
  const Grid g(2, 16, 10.0);
  auto ens = point_cloud(2, 10.0, 2, 1.0, 1);
  Field drift(g, 2, std::numeric_limits<double>::infinity());
  EXPECT_THROW(em_step(ens, 0.1, drift, Field(g, 1)), NumericalError);
}

TEST(Coefficients, LinearBetaGivesConstantSigma) {
  const Grid g(2, 32, 10.0);
  const auto f = build_fields(blob(g), NonlinearitySpec{}, KernelSpec{});
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(f.sigma[i], std::sqrt(2.0), 1e-15);
  EXPECT_EQ(f.clamped_cells, 0u);
  EXPECT_EQ(lp_norm(f.drift, Norm::Linf), 0.0);
}

TEST(Coefficients, RieszDriftMatchesDirectConvolution) {
  const Grid g(3, 16, 10.0);
  const KernelSpec k{RieszKernel{2.0, 1.0}, 0.0};
  const Field u = blob(g, 1.5);
  const auto f = build_fields(u, NonlinearitySpec{}, k);
  const Field direct = convolve_direct(sample_kernel(k, g), u);
  EXPECT_LE(lp_norm(f.drift - direct, Norm::Linf), 1e-8 * lp_norm(direct, Norm::Linf));
}

TEST(Coefficients, PorousSigmaIsMonotoneAndBounded) {
  const Grid g(2, 32, 10.0);
  NonlinearitySpec spec;
  spec.beta = ShiftedPowerBeta{0.1, 2.0, 1.0};
  const Field u = blob(g);
  const auto f = build_fields(u, spec, KernelSpec{});
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double expect = u[i] < 1e-12 ? std::sqrt(0.2) : std::sqrt(2.0 * (0.1 + u[i]));
    EXPECT_NEAR(f.sigma[i], expect, 1e-12);
  }
}

TEST(Kde, SingleAtomGivesNormalizedGaussian) {
  const Grid g(2, 32, 8.0);
  auto ens = point_cloud(2, 8.0, 1, 4.0, 1);
  const double bw = 0.75;
  const Field k = kde_density(ens, g, bw);
  EXPECT_NEAR(k.integral(), 1.0, 1e-13);
  const std::size_t centre = g.flatten({16, 16, 0});
  EXPECT_DOUBLE_EQ(k.max(), k[centre]);
  // Ratio of neighbouring values of a Gaussian with the chosen bandwidth.
  const double h = g.spacing(0);
  EXPECT_NEAR(k[g.flatten({17, 16, 0})] / k[centre], std::exp(-0.5 * h * h / (bw * bw)), 1e-6);
  EXPECT_NEAR(k[g.flatten({15, 16, 0})], k[g.flatten({17, 16, 0})], 1e-14);
}

TEST(Kde, BandwidthBelowTwoSpacingsRejected) {
  const Grid g(2, 32, 8.0);
  auto ens = point_cloud(2, 8.0, 1, 4.0, 1);
  EXPECT_THROW(kde_density(ens, g, 0.4), ConfigError);
  EXPECT_NO_THROW(kde_density(ens, g, 0.5));
  EXPECT_GE(default_bandwidth(ens, g), 0.5);
}

TEST(Simulate, DeterministicForFixedSeed) {
  const Grid g(2, 32, 10.0);
  const Field u0 = blob(g);
  const KernelSpec bs{BiotSavartKernel{}, 0.0};
  const auto a = simulate(u0, SelfConsistent{1.0}, 2000, 0.05, 0.2, 4, NonlinearitySpec{}, bs);
  const auto b = simulate(u0, SelfConsistent{1.0}, 2000, 0.05, 0.2, 4, NonlinearitySpec{}, bs);
  const auto c = simulate(u0, SelfConsistent{1.0}, 2000, 0.05, 0.2, 5, NonlinearitySpec{}, bs);
  EXPECT_EQ(a.final_ensemble.positions, b.final_ensemble.positions);
  EXPECT_NE(a.final_ensemble.positions, c.final_ensemble.positions);
  EXPECT_EQ(a.times.size(), 2u);
  EXPECT_NEAR(a.kde.back().integral(), 1.0, 1e-12);
}

TEST(Simulate, SingleParticleRuns) {
  const Grid g(2, 16, 10.0);
  const auto r = simulate(blob(g), SelfConsistent{2.0}, 1, 0.1, 0.3, 1, NonlinearitySpec{}, KernelSpec{});
  EXPECT_EQ(r.final_ensemble.size(), 1u);
  EXPECT_NEAR(r.final_ensemble.time, 0.3, 1e-12);
}

TEST(Simulate, FrozenModeChecksTrajectory) {
  const Grid g(2, 16, 10.0);
  EvolutionConfig cfg;
  cfg.T = 0.2;
  cfg.n_steps = 4;
  const auto tr = evolve(blob(g), cfg, NonlinearitySpec{}, KernelSpec{});
  EXPECT_NO_THROW(simulate(blob(g), PdeFrozen{&tr}, 100, 0.05, 0.2, 1, NonlinearitySpec{}, KernelSpec{}));
  EXPECT_THROW(simulate(blob(g), PdeFrozen{&tr}, 100, 0.03, 0.21, 1, NonlinearitySpec{}, KernelSpec{}), ConfigError);
  EXPECT_THROW(simulate(blob(g), PdeFrozen{&tr}, 100, 0.05, 0.4, 1, NonlinearitySpec{}, KernelSpec{}), ConfigError);
  EXPECT_THROW(simulate(blob(g), PdeFrozen{nullptr}, 100, 0.05, 0.2, 1, NonlinearitySpec{}, KernelSpec{}), ConfigError);
  EXPECT_THROW(simulate(blob(g), SelfConsistent{1.0}, 100, 0.03, 0.1, 1, NonlinearitySpec{}, KernelSpec{}), ConfigError);
}

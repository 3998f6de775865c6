#include <gtest/gtest.h>

#include <cmath>

#include "nfpe/config.hpp"
#include "nfpe/diagnostics.hpp"

using namespace nfpe;

namespace {
const double kTwoPi = 2.0 * std::acos(-1.0);

Field cosine_mode(const Grid& g, int m) {
  const double L = g.extent(0);
  return Field::from_function(g, [&](const std::array<double, 3>& x) { return std::cos(kTwoPi * m * x[0] / L); });
}

std::vector<HEpsPoint> exp_series(double h0, double pre, double rate) {
  std::vector<HEpsPoint> s{{0.0, h0}};
  for (int i = 1; i <= 10; ++i) s.push_back({0.1 * i, pre * std::exp(rate * 0.1 * i)});
  return s;
}
}  // namespace

TEST(HEps, SingleModeClosedForm) {
  const Grid g(2, 32, 10.0);
  for (int m : {1, 3, 7})
    for (double eps : {1.0, 1e-2}) {
      const double k = kTwoPi * m / 10.0;
      EXPECT_NEAR(h_eps_value(cosine_mode(g, m), eps), 0.5 * g.volume() / (eps + k * k), 1e-12);
    }
}

TEST(HEps, ConstantModeIsWeightedByInverseEps) {
  const Grid g(2, 16, 4.0);
  EXPECT_NEAR(h_eps_value(Field(g, 1, 1.0), 0.25), g.volume() / 0.25, 1e-12);
}

TEST(HEps, GradientFormAgrees) {
  // The real-space gradient drops Nyquist modes, so use band-limited data.
  const Grid g(3, 16, 8.0);
  const double w = kTwoPi / 8.0;
  const Field z = Field::from_function(g, [&](const std::array<double, 3>& x) {
    return 0.3 + std::cos(w * x[0]) * std::sin(2 * w * x[1]) - 0.7 * std::sin(3 * w * (x[0] + x[2])) +
           0.2 * std::cos(5 * w * x[2]);
  });
  for (double eps : {1e-1, 1e-3}) {
    const double a = h_eps_value(z, eps);
    EXPECT_NEAR(h_eps_gradient_form(z, eps), a, 1e-12 * a);
  }
}

TEST(HEps, DecreasesAsEpsGrows) {
  const Grid g(2, 32, 10.0);
  const Field z = random_mixture(g, 3, 5, 1.0) - random_mixture(g, 3, 6, 1.0);
  double prev = INFINITY;
  for (double eps : {1e-3, 1e-2, 1e-1, 1.0}) {
    const double h = h_eps_value(z, eps);
    EXPECT_LT(h, prev);
    prev = h;
  }
  EXPECT_THROW(h_eps_value(z, 0.0), ConfigError);
}

TEST(Gronwall, RecoversExponentialGrowth) {
  const double eps = 0.01;
  const auto fit = gronwall_check(exp_series(0.0, 0.3 * std::sqrt(eps), 2.0), eps);
  EXPECT_NEAR(fit.C_rate, 2.0, 1e-10);
  EXPECT_NEAR(fit.C_prefactor, 0.3, 1e-10);
  EXPECT_NEAR(fit.C_fit, 2.0, 1e-10);
  EXPECT_TRUE(fit.envelope_ok);
  EXPECT_TRUE(fit.passes);
}

TEST(Gronwall, DecayClampsRateAtZero) {
  const auto fit = gronwall_check(exp_series(0.0, 0.5, -3.0), 0.25);
  EXPECT_EQ(fit.C_rate, 0.0);
  EXPECT_NEAR(fit.C_prefactor, 1.0, 1e-10);
  EXPECT_TRUE(fit.passes);
}

TEST(Gronwall, NonzeroInitialGapFails) {
  const auto fit = gronwall_check(exp_series(1e-6, 0.1, 1.0), 0.01);
  EXPECT_FALSE(fit.h0_ok);
  EXPECT_FALSE(fit.passes);
}

TEST(Gronwall, NeedsFivePoints) {
  std::vector<HEpsPoint> s{{0.0, 0.0}, {0.1, 1e-3}, {0.2, 2e-3}, {0.3, 3e-3}};
  EXPECT_THROW(gronwall_check(s, 0.1), ConfigError);
}

TEST(Gronwall, IdenticalTrajectoriesAreDegenerateAndPass) {
  std::vector<HEpsPoint> s;
  for (int i = 0; i <= 6; ++i) s.push_back({0.1 * i, 0.0});
  const auto fit = gronwall_check(s, 0.1);
  EXPECT_TRUE(fit.degenerate);
  EXPECT_TRUE(fit.passes);
}

TEST(Probe, EpsListIsValidated) {
  EXPECT_THROW(validate_eps_list({}), ConfigError);
  EXPECT_THROW(validate_eps_list({1e-2, 1e-1}), ConfigError);
  EXPECT_THROW(validate_eps_list({1e-1, 1e-1}), ConfigError);
  EXPECT_THROW(validate_eps_list({1e-1, -1e-2}), ConfigError);
  EXPECT_NO_THROW(validate_eps_list({1e-1, 1e-2, 1e-3}));
}

TEST(Probe, HeatDiscretizationGapShrinksUnderRefinement) {
  const Grid g(2, 64, 20.0);
  const Field u0 = random_mixture(g, 3, 31, 1.0);
  auto solve = [&](int n, int every) {
    EvolutionConfig cfg;
    cfg.T = 0.4;
    cfg.n_steps = n;
    cfg.eps = 1e-2;
    cfg.snapshot_every = every;
    cfg.monitors = {false, false};
    return evolve(u0, cfg, NonlinearitySpec{}, KernelSpec{});
  };
  const auto a = solve(10, 1), b = solve(20, 2), c = solve(40, 4);
  const auto ab = h_eps_series(a, b, 0.1);
  const auto bc = h_eps_series(b, c, 0.1);
  EXPECT_EQ(ab.front().h, 0.0);
  EXPECT_GE(ab.back().h / bc.back().h, 3.0);
  const auto probe = run_uniqueness_probe(a, b, {1e-1, 1e-2});
  EXPECT_EQ(probe.fits.size(), 2u);
  EXPECT_TRUE(probe.fits[0].h0_ok);
}

#pragma once

// Numerical check of hypotheses (i)-(v) for a configuration. Failures are
// reported, never fatal: runs proceed and carry the report.

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "nfpe/kernels.hpp"
#include "nfpe/nonlinearity.hpp"
#include "nfpe/spectral.hpp"

namespace nfpe {

struct HypothesisCheck {
  std::string id;        ///< "(i)", "(ii)", ...
  std::string what;
  bool passed = false;
  double measured = 0.0;
  std::string note;
};

struct ValidationReport {
  std::vector<HypothesisCheck> checks;
  GammaEstimate gamma;

  bool all_passed() const {
    for (const auto& c : checks)
      if (!c.passed) return false;
    return true;
  }

  const HypothesisCheck* find(const std::string& id) const {
    for (const auto& c : checks)
      if (c.id == id) return &c;
    return nullptr;
  }

  std::string to_text() const {
    std::ostringstream os;
    os.precision(6);
    for (const auto& c : checks) {
      os << (c.passed ? "PASS " : "FAIL ") << c.id << ' ' << c.what << "  measured=" << c.measured;
      if (!c.note.empty()) os << "  (" << c.note << ')';
      os << '\n';
    }
    os << "gamma value=" << gamma.value() << " grid_n=" << gamma.at_n.total() << " grid_2n=" << gamma.at_2n.total()
       << " error_bar=" << gamma.error_bar() << " diverges=" << (gamma.diverges ? "yes" : "no") << '\n';
    return os.str();
  }
};

/// Lattice used for the scalar hypotheses: 0, +-10^p for p in [-6, 3], and [-10, 10].
inline std::vector<double> validation_lattice() {
  std::vector<double> r{0.0};
  for (double p = -6.0; p <= 3.0 + 1e-12; p += 0.25) {
    r.push_back(std::pow(10.0, p));
    r.push_back(-std::pow(10.0, p));
  }
  for (int i = -200; i <= 200; ++i) r.push_back(0.05 * i);
  return r;
}

inline ValidationReport validate_hypotheses(const NonlinearitySpec& spec, const KernelSpec& kernel, const Grid& grid) {
  ValidationReport rep;
  const auto lattice = validation_lattice();

  {
    HypothesisCheck c{"(i)", "beta(0)=0, beta' >= alpha > 0"};
    double min_slope = std::numeric_limits<double>::infinity();
    bool finite = true;
    for (double r : lattice) {
      const double s = beta_prime(spec, r);
      finite = finite && std::isfinite(s);
      min_slope = std::min(min_slope, s);
    }
    const double b0 = beta(spec, 0.0);
    c.measured = min_slope;
    c.passed = finite && b0 == 0.0 && min_slope > 0.0 && min_slope >= alpha_floor(spec) * (1.0 - 1e-12);
    if (b0 != 0.0) c.note = "beta(0) != 0";
    else if (!(min_slope > 0.0)) c.note = "beta' not bounded below by a positive constant";
    rep.checks.push_back(c);
  }
  {
    HypothesisCheck c{"(ii)", "D bounded, (div D)^- = 0"};
    const Field d = drift_field(spec, grid);
    if (!d.all_finite()) {
      c.passed = false;
      c.note = "non-finite drift";
    } else {
      const Field div = divergence(d);
      double neg = 0.0;
      for (double v : div.values()) neg = std::max(neg, -v);
      c.measured = neg;
      c.passed = neg <= 1e-8;
      c.note = "|D|_inf=" + std::to_string(lp_norm(d, Norm::Linf));
    }
    rep.checks.push_back(c);
  }
  {
    HypothesisCheck c{"(iii)", "b >= 0"};
    double min_b = std::numeric_limits<double>::infinity();
    for (double r : lattice) min_b = std::min(min_b, mobility(spec, r));
    c.measured = min_b;
    c.passed = std::isfinite(min_b) && min_b >= 0.0;
    rep.checks.push_back(c);
  }

  bool kernel_ok = true;
  {
    HypothesisCheck c{"(iv)", "kernel class"};
    try {
      validate_kernel_spec(kernel, grid.dim());
      c.passed = true;
      if (std::holds_alternative<BiotSavartKernel>(kernel.kind)) {
        c.passed = false;
        c.note = "Biot-Savart lies outside (iv); only (div K)^- and (K.x)^- bounds hold";
      }
    } catch (const ConfigError& e) {
      c.passed = false;
      c.note = e.what();
      kernel_ok = false;
    }
    rep.checks.push_back(c);
  }
  if (kernel_ok) {
    rep.gamma = gamma_constant(kernel, grid);
    HypothesisCheck c{"(iv-gamma)", "(div K)^- and (K.x)^-/|x| bounded"};
    c.measured = rep.gamma.at_n.total();
    c.passed = !rep.gamma.diverges && std::isfinite(rep.gamma.value());
    c.note = "gamma(n)=" + std::to_string(rep.gamma.at_n.total()) + " gamma(2n)=" + std::to_string(rep.gamma.at_2n.total());
    if (rep.gamma.diverges) c.note += "; grows under refinement";
    rep.checks.push_back(c);

    HypothesisCheck v{"(v)", "K bounded off B_1"};
    v.measured = rep.gamma.at_n.far_field_sup;
    v.passed = std::isfinite(v.measured) &&
               (!rep.gamma.refined || rep.gamma.at_2n.far_field_sup <= 1.5 * rep.gamma.at_n.far_field_sup + 1e-9);
    rep.checks.push_back(v);
  }
  return rep;
}

}  // namespace nfpe

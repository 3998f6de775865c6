#pragma once

// Free energy of gradient-flow configurations (D = -grad Phi, K = -grad W):
//   E(u) = int e(u) + Phi u dx + 1/2 (W * u, u)_2,
// with the convex density e'' = beta'/(b u), normalized by e(1) = 0 and
// e'(1) = beta'(1)/b(1). For beta(r) = a r and b = 1 this is e(u) = a u ln u.

#include <cmath>
#include <optional>

#include "nfpe/kernels.hpp"
#include "nfpe/nonlinearity.hpp"
#include "nfpe/spectral.hpp"

namespace nfpe {

inline constexpr double kEntropyFloor = 1e-12;

/// Convex entropy density e(u) for u > 0.
inline double entropy_density(const NonlinearitySpec& spec, double u) {
  if (std::holds_alternative<UnitMobility>(spec.b)) {
    if (const auto* lin = std::get_if<LinearBeta>(&spec.beta)) return lin->slope * u * std::log(u);
    if (const auto* sp = std::get_if<ShiftedPowerBeta>(&spec.beta)) {
      const double a = sp->alpha_floor;
      const double cm = sp->c * sp->m;
      const double base = a * (u * std::log(u) - u + 1.0);
      double power;
      if (sp->m == 1.0) {
        power = cm * (u * std::log(u) - u + 1.0);
      } else {
        power = cm / (sp->m - 1.0) * ((std::pow(u, sp->m) - 1.0) / sp->m - (u - 1.0));
      }
      return base + power + (a + cm) * (u - 1.0);
    }
  }
  // e(u) = int_1^u (u - tau) beta'(tau) / (b(tau) tau) dtau + e'(1) (u - 1).
  auto integrand = [&](double tau) { return (u - tau) * beta_prime(spec, tau) / (mobility(spec, tau) * tau); };
  const double slope1 = beta_prime(spec, 1.0) / mobility(spec, 1.0);
  return detail::integrate(integrand, 1.0, u) + slope1 * (u - 1.0);
}

struct EntropyParts {
  double internal = 0.0;
  double potential = 0.0;
  double interaction = 0.0;
  double total() const { return internal + potential + interaction; }
};

/// Components of E(u); nullopt when D or K has no known potential.
inline std::optional<EntropyParts> entropy_parts(const Field& u, const NonlinearitySpec& spec, const KernelSpec& kernel) {
  require_scalar(u, "entropy");
  const Grid& g = u.grid();
  auto phi = drift_potential(spec, g);
  auto w = interaction_potential(kernel, g);
  if (!phi || !w) return std::nullopt;
  EntropyParts parts;
  const double dv = g.cell_volume();
  for (std::size_t i = 0; i < u.cells(); ++i) {
    if (u[i] >= kEntropyFloor) parts.internal += entropy_density(spec, u[i]);
    parts.potential += (*phi)[i] * u[i];
  }
  parts.internal *= dv;
  parts.potential *= dv;
  if (!kernel_is_zero(kernel)) {
    Field k(g, 1, std::vector<double>(w->values().begin(), w->values().end()));
    parts.interaction = 0.5 * l2_inner(convolve_spectral(k, u), u);
  }
  return parts;
}

inline std::optional<double> entropy(const Field& u, const NonlinearitySpec& spec, const KernelSpec& kernel) {
  auto parts = entropy_parts(u, spec, kernel);
  if (!parts) return std::nullopt;
  return parts->total();
}

}  // namespace nfpe

#pragma once

// Differential, resolvent and convolution operators on the periodic torus,
// plus the quadrature norms every other module measures with.

#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <vector>

#include "nfpe/fft.hpp"
#include "nfpe/grid.hpp"

namespace nfpe {

/// Apply a real radial multiplier m(|k|^2) to a scalar field.
template <class Multiplier>
Field apply_multiplier(const Field& f, Multiplier&& m) {
  SpectralField F = dft_forward(f);
  const Wavenumbers& kw = wavenumbers_for(f.grid());
  for (std::size_t s = 0; s < F.size(); ++s) F[s] *= m(kw.k2(s));
  return Field(f.grid(), 1, inverse_values(std::move(F)));
}

/// g = (I - Delta)^{-1} f.
inline Field inv_I_minus_laplacian(const Field& f) {
  require_scalar(f, "inv_I_minus_laplacian");
  return apply_multiplier(f, [](double k2) { return 1.0 / (1.0 + k2); });
}

/// Phi_eps(f) = (eps I - Delta)^{-1} f.
inline Field resolvent_shifted(const Field& f, double eps) {
  require_scalar(f, "resolvent_shifted");
  if (!(eps > 0.0)) throw ConfigError("resolvent_shifted: eps must be positive");
  return apply_multiplier(f, [eps](double k2) { return 1.0 / (eps + k2); });
}

inline Field laplacian(const Field& f) {
  require_scalar(f, "laplacian");
  return apply_multiplier(f, [](double k2) { return -k2; });
}

/// Spectral gradient of a scalar field (vector field result).
inline Field gradient(const Field& f) {
  require_scalar(f, "gradient");
  const Grid& g = f.grid();
  const Wavenumbers& kw = wavenumbers_for(g);
  SpectralField F = dft_forward(f);
  Field out(g, g.dim());
  for (int a = 0; a < g.dim(); ++a) {
    SpectralField D(g);
    for (std::size_t s = 0; s < F.size(); ++s) D[s] = kw.ik(a, s) * F[s];
    auto vals = inverse_values(std::move(D));
    std::copy(vals.begin(), vals.end(), out.component(a).begin());
  }
  return out;
}

/// Spectral divergence of a vector field.
inline Field divergence(const Field& v) {
  const Grid& g = v.grid();
  if (v.components() != g.dim()) throw ConfigError("divergence: expected a vector field");
  require_finite(v, "divergence");
  const Wavenumbers& kw = wavenumbers_for(g);
  SpectralField acc(g);
  for (int a = 0; a < g.dim(); ++a) {
    SpectralField C = forward_component(g, v.component(a));
    for (std::size_t s = 0; s < C.size(); ++s) acc[s] += kw.ik(a, s) * C[s];
  }
  return Field(g, 1, inverse_values(std::move(acc)));
}

/// Quadrature-consistent spectral inner product sum_k w(k) Re(U conj V) * dV / N.
template <class Weight>
double spectral_inner(const SpectralField& U, const SpectralField& V, Weight&& w) {
  const Grid& g = U.grid();
  const Wavenumbers& kw = wavenumbers_for(g);
  double s = 0.0;
  for (std::size_t i = 0; i < U.size(); ++i) {
    s += kw.weight(i) * w(kw.k2(i)) * (U[i].real() * V[i].real() + U[i].imag() * V[i].imag());
  }
  return s * g.cell_volume() / static_cast<double>(g.size());
}

/// <u, v>_{-1} = ((I - Delta)^{-1} u, v)_2.
inline double hminus1_inner(const Field& u, const Field& v) {
  require_same_grid(u.grid(), v.grid(), "hminus1_inner");
  require_scalar(u, "hminus1_inner");
  require_scalar(v, "hminus1_inner");
  return spectral_inner(dft_forward(u), dft_forward(v), [](double k2) { return 1.0 / (1.0 + k2); });
}

inline double hminus1_norm_spectral(const SpectralField& U) {
  return std::sqrt(std::max(0.0, spectral_inner(U, U, [](double k2) { return 1.0 / (1.0 + k2); })));
}

inline double hminus1_norm(const Field& u) {
  require_scalar(u, "hminus1_norm");
  return hminus1_norm_spectral(dft_forward(u));
}

/// (u, v)_2 by quadrature.
inline double l2_inner(const Field& u, const Field& v) {
  require_same_grid(u.grid(), v.grid(), "l2_inner");
  double s = 0.0;
  for (std::size_t i = 0; i < u.values().size(); ++i) s += u[i] * v[i];
  return s * u.grid().cell_volume();
}

enum class Norm { L1, L2, Linf };

/// Quadrature-weighted L1/L2 norm, or max-abs for Linf. Vector fields use
/// the Euclidean magnitude per cell.
inline double lp_norm(const Field& u, Norm p) {
  const std::size_t cells = u.cells();
  auto magnitude = [&](std::size_t i) {
    if (u.is_scalar()) return std::abs(u[i]);
    double s = 0.0;
    for (int c = 0; c < u.components(); ++c) s += u.component(c)[i] * u.component(c)[i];
    return std::sqrt(s);
  };
  double acc = 0.0;
  for (std::size_t i = 0; i < cells; ++i) {
    const double m = magnitude(i);
    switch (p) {
      case Norm::L1: acc += m; break;
      case Norm::L2: acc += m * m; break;
      case Norm::Linf: acc = std::max(acc, m); break;
    }
  }
  if (p == Norm::L1) return acc * u.grid().cell_volume();
  if (p == Norm::L2) return std::sqrt(acc * u.grid().cell_volume());
  return acc;
}

/// Spectrum of each component of a vector kernel scaled by the cell volume,
/// so that inverse(Khat * U) is the quadrature of sum_y k(x-y) u(y) dV.
inline std::vector<SpectralField> convolution_spectra(const Field& k) {
  std::vector<SpectralField> out;
  const double dv = k.grid().cell_volume();
  for (int c = 0; c < k.components(); ++c) {
    SpectralField K = forward_component(k.grid(), k.component(c));
    for (std::size_t s = 0; s < K.size(); ++s) K[s] *= dv;
    out.push_back(std::move(K));
  }
  return out;
}

/// Periodic convolution (k * u)(x) = sum_y k(x - y) u(y) dV, componentwise.
inline Field convolve_spectral(const Field& k, const Field& u) {
  require_same_grid(k.grid(), u.grid(), "convolve_spectral");
  require_scalar(u, "convolve_spectral");
  require_finite(k, "convolve_spectral");
  const SpectralField U = dft_forward(u);
  const auto spectra = convolution_spectra(k);
  Field out(k.grid(), k.components());
  for (int c = 0; c < k.components(); ++c) {
    SpectralField P(k.grid());
    for (std::size_t s = 0; s < P.size(); ++s) P[s] = spectra[c][s] * U[s];
    auto vals = inverse_values(std::move(P));
    std::copy(vals.begin(), vals.end(), out.component(c).begin());
  }
  return out;
}

inline constexpr std::size_t kDirectConvolutionMaxN = 32;

/// Direct periodic double sum; the independent oracle for convolve_spectral.
inline Field convolve_direct(const Field& k, const Field& u) {
  require_same_grid(k.grid(), u.grid(), "convolve_direct");
  require_scalar(u, "convolve_direct");
  const Grid& g = k.grid();
  if (g.n() > kDirectConvolutionMaxN)
    throw ConfigError("convolve_direct: grid too large (n=" + std::to_string(g.n()) + " > 32)");
  const std::size_t cells = g.size();
  const std::size_t n = g.n();
  const double dv = g.cell_volume();
  Field out(g, k.components());
  for (std::size_t i = 0; i < cells; ++i) {
    const auto xi = g.unflatten(i);
    for (std::size_t j = 0; j < cells; ++j) {
      const double uj = u[j];
      if (uj == 0.0) continue;
      const auto yj = g.unflatten(j);
      std::array<std::size_t, 3> diff{0, 0, 0};
      for (int a = 0; a < g.dim(); ++a) diff[a] = (xi[a] + n - yj[a]) % n;
      const std::size_t kd = g.flatten(diff);
      for (int c = 0; c < k.components(); ++c) out.component(c)[i] += k.component(c)[kd] * uj * dv;
    }
  }
  return out;
}

}  // namespace nfpe

#pragma once

// Thin RAII layer over FFTW's multi-dimensional r2c/c2r transforms.

#include <fftw3.h>

#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <tuple>
#include <vector>

#include "nfpe/grid.hpp"

namespace nfpe {

/// Half-spectrum of a real scalar field (r2c layout: the last axis keeps
/// modes 0..n/2, all other axes are full). Unnormalized forward convention.
class SpectralField {
 public:
  SpectralField() = default;
  explicit SpectralField(const Grid& grid) : grid_(grid), coeffs_(spectral_size(grid)) {}

  static std::size_t spectral_size(const Grid& g) {
    std::size_t s = g.n() / 2 + 1;
    for (int a = 0; a < g.dim() - 1; ++a) s *= g.n();
    return s;
  }

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return coeffs_.size(); }
  std::complex<double>& operator[](std::size_t i) { return coeffs_[i]; }
  const std::complex<double>& operator[](std::size_t i) const { return coeffs_[i]; }
  std::complex<double>* data() { return coeffs_.data(); }
  const std::complex<double>* data() const { return coeffs_.data(); }

 private:
  Grid grid_;
  std::vector<std::complex<double>> coeffs_;
};

namespace detail {

class FftPlanPair {
 public:
  explicit FftPlanPair(const Grid& g) {
    int dims[3];
    for (int a = 0; a < g.dim(); ++a) dims[a] = static_cast<int>(g.n());
    std::vector<double> real(g.size());
    std::vector<std::complex<double>> cplx(SpectralField::spectral_size(g));
    auto* c = reinterpret_cast<fftw_complex*>(cplx.data());
    constexpr unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    forward_ = fftw_plan_dft_r2c(g.dim(), dims, real.data(), c, flags);
    backward_ = fftw_plan_dft_c2r(g.dim(), dims, c, real.data(), flags | FFTW_DESTROY_INPUT);
    if (!forward_ || !backward_) throw NumericalError("FFTW plan creation failed");
  }
  FftPlanPair(const FftPlanPair&) = delete;
  FftPlanPair& operator=(const FftPlanPair&) = delete;
  ~FftPlanPair() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }

  void forward(double* in, std::complex<double>* out) const {
    fftw_execute_dft_r2c(forward_, in, reinterpret_cast<fftw_complex*>(out));
  }
  void backward(std::complex<double>* in, double* out) const {
    fftw_execute_dft_c2r(backward_, reinterpret_cast<fftw_complex*>(in), out);
  }

  static std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
  }

 private:
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

// Plans are shared per (dim, n); FFTW's new-array execute functions are thread-safe.
inline const FftPlanPair& plans_for(const Grid& g) {
  static std::map<std::pair<int, std::size_t>, std::unique_ptr<FftPlanPair>> cache;
  std::lock_guard lock(FftPlanPair::planner_mutex());
  auto key = std::make_pair(g.dim(), g.n());
  auto it = cache.find(key);
  if (it == cache.end()) {
    it = cache.emplace(key, std::make_unique<FftPlanPair>(g)).first;
  }
  return *it->second;
}

}  // namespace detail

/// Forward transform of one scalar component (no finiteness check).
inline SpectralField forward_component(const Grid& g, std::span<const double> values) {
  SpectralField out(g);
  std::vector<double> in(values.begin(), values.end());
  detail::plans_for(g).forward(in.data(), out.data());
  return out;
}

/// Inverse transform including the 1/n^dim normalization.
inline std::vector<double> inverse_values(SpectralField spec) {
  const Grid& g = spec.grid();
  std::vector<double> out(g.size());
  detail::plans_for(g).backward(spec.data(), out.data());
  const double scale = 1.0 / static_cast<double>(g.size());
  for (double& v : out) v *= scale;
  return out;
}

/// Unnormalized forward DFT of a scalar field.
inline SpectralField dft_forward(const Field& f) {
  require_scalar(f, "dft_forward");
  require_finite(f, "dft_forward");
  return forward_component(f.grid(), f.values());
}

/// Inverse DFT (1/n^dim normalization) back to a real scalar field.
inline Field dft_inverse(const SpectralField& F) {
  for (std::size_t i = 0; i < F.size(); ++i) {
    if (!std::isfinite(F[i].real()) || !std::isfinite(F[i].imag()))
      throw NumericalError("dft_inverse: non-finite spectral coefficient");
  }
  return Field(F.grid(), 1, inverse_values(F));
}

/// Angular wavenumbers k = 2*pi*m/L for every half-spectrum slot.
///
/// Precomputed once per grid and reused by every spectral operator.
class Wavenumbers {
 public:
  explicit Wavenumbers(const Grid& g) : grid_(g) {
    const std::size_t n = g.n();
    const std::size_t nh = n / 2 + 1;
    const std::size_t total = SpectralField::spectral_size(g);
    const int d = g.dim();
    k2_.resize(total);
    for (int a = 0; a < d; ++a) k_[a].resize(total);
    weight_.resize(total);
    std::array<std::size_t, 3> idx{0, 0, 0};
    for (std::size_t s = 0; s < total; ++s) {
      std::size_t rem = s;
      idx[d - 1] = rem % nh;
      rem /= nh;
      for (int a = d - 2; a >= 0; --a) {
        idx[a] = rem % n;
        rem /= n;
      }
      double k2 = 0.0;
      bool nyquist = false;
      for (int a = 0; a < d; ++a) {
        long m = static_cast<long>(idx[a]);
        if (a < d - 1 && idx[a] > n / 2) m -= static_cast<long>(n);
        if (static_cast<std::size_t>(std::labs(m)) == n / 2) nyquist = true;
        const double k = 2.0 * std::numbers::pi * static_cast<double>(m) / g.extent(a);
        k2 += k * k;
        k_[a][s] = k;
      }
      k2_[s] = k2;
      nyquist_.push_back(nyquist);
      // Hermitian partners of last-axis slots 1..n/2-1 are not stored.
      const std::size_t last = idx[d - 1];
      weight_[s] = (last == 0 || last == n / 2) ? 1.0 : 2.0;
    }
  }

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return k2_.size(); }
  double k2(std::size_t s) const { return k2_[s]; }
  double k(int axis, std::size_t s) const { return k_[axis][s]; }
  /// Multiplier for d/dx_axis; zero on Nyquist planes so derivatives stay real.
  std::complex<double> ik(int axis, std::size_t s) const {
    return nyquist_[s] ? std::complex<double>(0.0, 0.0) : std::complex<double>(0.0, k_[axis][s]);
  }
  /// Number of full-spectrum modes represented by slot s (1 or 2).
  double weight(std::size_t s) const { return weight_[s]; }

 private:
  Grid grid_;
  std::vector<double> k2_;
  std::array<std::vector<double>, 3> k_;
  std::vector<bool> nyquist_;
  std::vector<double> weight_;
};

/// Shared Wavenumbers for a grid (cached, immutable).
inline const Wavenumbers& wavenumbers_for(const Grid& g) {
  static std::mutex m;
  static std::map<std::tuple<int, std::size_t, double, double, double>, std::unique_ptr<Wavenumbers>> cache;
  std::lock_guard lock(m);
  auto key = std::make_tuple(g.dim(), g.n(), g.extent(0), g.extent(1), g.extent(2));
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, std::make_unique<Wavenumbers>(g)).first;
  return *it->second;
}

}  // namespace nfpe

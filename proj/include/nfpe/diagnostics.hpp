#pragma once

// Gap between two discretizations of the same problem, measured in the
// Phi_eps energy h_eps = (Phi_eps z, z)_2 with Phi_eps = (eps - Lap)^{-1}, and
// tested against the Gronwall shape h_eps(t) <= C sqrt(eps) exp(C t).

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <string>
#include <vector>

#include "nfpe/semigroup.hpp"

namespace nfpe {

struct HEpsPoint {
  double t = 0.0;
  double h = 0.0;
};

/// h_eps(z) = sum_k |z_k|^2 / (eps + |k|^2), with quadrature weights.
inline double h_eps_value(const Field& z, double eps) {
  if (!(eps > 0.0)) throw ConfigError("h_eps: eps must be positive");
  const SpectralField Z = dft_forward(z);
  return std::max(0.0, spectral_inner(Z, Z, [eps](double k2) { return 1.0 / (eps + k2); }));
}

/// eps |Phi_eps z|_2^2 + |grad Phi_eps z|_2^2 evaluated in real space.
inline double h_eps_gradient_form(const Field& z, double eps) {
  const Field p = resolvent_shifted(z, eps);
  const Field gp = gradient(p);
  return eps * l2_inner(p, p) + l2_inner(gp, gp);
}

inline std::vector<HEpsPoint> h_eps_series(const Trajectory& u, const Trajectory& v, double eps) {
  if (u.times.size() != v.times.size()) throw ConfigError("h_eps_series: trajectories have different lengths");
  std::vector<HEpsPoint> out;
  for (std::size_t i = 0; i < u.times.size(); ++i) {
    if (std::abs(u.times[i] - v.times[i]) > 1e-12 * std::max(1.0, std::abs(u.times[i])))
      throw ConfigError("h_eps_series: snapshot times differ");
    require_same_grid(u.snapshots[i].grid(), v.snapshots[i].grid(), "h_eps_series");
    out.push_back({u.times[i], h_eps_value(u.snapshots[i] - v.snapshots[i], eps)});
  }
  return out;
}

struct GronwallFit {
  double eps = 0.0;
  double C_fit = 0.0;
  double C_prefactor = 0.0;  ///< from the intercept: exp(a + max residual) / sqrt(eps)
  double C_rate = 0.0;       ///< fitted growth rate, clamped at 0
  double h0 = 0.0;
  double max_log_residual = 0.0;
  bool h0_ok = false;
  bool degenerate = false;
  bool envelope_ok = false;
  bool passes = false;
};

inline constexpr double kH0Tolerance = 1e-10;
inline constexpr double kDegenerateH = 1e-30;

/// Log-domain least squares log h = a + b t over t > 0; C is the smallest value
/// making C sqrt(eps) exp(C t) an upper envelope with both the fitted intercept
/// and rate.
inline GronwallFit gronwall_check(const std::vector<HEpsPoint>& series, double eps) {
  if (series.size() < 5) throw ConfigError("gronwall_check: series needs at least 5 points");
  GronwallFit f;
  f.eps = eps;
  f.h0 = series.front().h;
  f.h0_ok = series.front().t == 0.0 && f.h0 <= kH0Tolerance;

  std::vector<std::pair<double, double>> pts;
  for (const auto& p : series)
    if (p.t > 0.0 && p.h > kDegenerateH) pts.emplace_back(p.t, std::log(p.h));
  if (pts.empty()) {
    f.degenerate = true;
    f.envelope_ok = true;
    f.passes = f.h0_ok;
    return f;
  }
  const double m = static_cast<double>(pts.size());
  double st = 0.0, sy = 0.0;
  for (auto [t, y] : pts) {
    st += t;
    sy += y;
  }
  const double tbar = st / m, ybar = sy / m;
  double sxx = 0.0, sxy = 0.0;
  for (auto [t, y] : pts) {
    sxx += (t - tbar) * (t - tbar);
    sxy += (t - tbar) * (y - ybar);
  }
  const double b = sxx > 0.0 ? sxy / sxx : 0.0;
  const double a = ybar - b * tbar;
  f.max_log_residual = -std::numeric_limits<double>::infinity();
  for (auto [t, y] : pts) f.max_log_residual = std::max(f.max_log_residual, y - a - b * t);
  f.C_prefactor = std::exp(a + f.max_log_residual) / std::sqrt(eps);
  f.C_rate = std::max(b, 0.0);
  f.C_fit = std::max(f.C_prefactor, f.C_rate);

  f.envelope_ok = true;
  for (const auto& p : series)
    if (p.h > f.C_fit * std::sqrt(eps) * std::exp(f.C_fit * p.t) * (1.0 + 1e-9)) f.envelope_ok = false;
  f.passes = f.h0_ok && f.envelope_ok && std::isfinite(f.C_fit);
  return f;
}

struct UniquenessProbe {
  std::vector<double> eps_list{1e-1, 1e-2, 1e-3};
  std::vector<std::vector<HEpsPoint>> series;
  std::vector<GronwallFit> fits;
  double C_median = 0.0;
  bool C_stable = false;

  bool passes() const {
    return C_stable && std::all_of(fits.begin(), fits.end(), [](const GronwallFit& f) { return f.passes; });
  }
};

inline void validate_eps_list(const std::vector<double>& eps_list) {
  if (eps_list.empty()) throw ConfigError("eps_list must not be empty");
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    if (!(eps_list[i] > 0.0)) throw ConfigError("eps_list entries must be positive");
    if (i > 0 && !(eps_list[i] < eps_list[i - 1])) throw ConfigError("eps_list must be strictly decreasing");
  }
}

/// Runs h_eps/gronwall over eps_list; C is stable if every fit lies within
/// 50% of the median.
inline UniquenessProbe run_uniqueness_probe(const Trajectory& u, const Trajectory& v,
                                            std::vector<double> eps_list = {1e-1, 1e-2, 1e-3}) {
  validate_eps_list(eps_list);
  UniquenessProbe p;
  p.eps_list = std::move(eps_list);
  std::vector<double> cs;
  bool all_degenerate = true;
  for (double eps : p.eps_list) {
    p.series.push_back(h_eps_series(u, v, eps));
    p.fits.push_back(gronwall_check(p.series.back(), eps));
    all_degenerate = all_degenerate && p.fits.back().degenerate;
    cs.push_back(p.fits.back().C_fit);
  }
  std::vector<double> sorted = cs;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t k = sorted.size();
  p.C_median = k % 2 ? sorted[k / 2] : 0.5 * (sorted[k / 2 - 1] + sorted[k / 2]);
  p.C_stable = all_degenerate || std::all_of(cs.begin(), cs.end(), [&](double c) {
                 return std::abs(c - p.C_median) <= 0.5 * p.C_median;
               });
  return p;
}

/// Writes t, eps, h_eps, bound_C_sqrt_eps_exp_Ct.
inline void write_h_eps_csv(const std::string& path, const UniquenessProbe& probe) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << "t,eps,h_eps,bound_C_sqrt_eps_exp_Ct\n" << std::setprecision(17);
  for (std::size_t j = 0; j < probe.eps_list.size(); ++j) {
    const double eps = probe.eps_list[j];
    const double c = probe.fits[j].C_fit;
    for (const auto& p : probe.series[j])
      os << p.t << ',' << eps << ',' << p.h << ',' << c * std::sqrt(eps) * std::exp(c * p.t) << '\n';
  }
}

}  // namespace nfpe

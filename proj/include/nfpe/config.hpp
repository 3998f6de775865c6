#pragma once

// Run configuration: a flat `key = value` text format with [section] headers,
// scenario presets, and construction of the model objects.
//
//   # comment
//   scenario = "heat"
//   [grid]
//   dim = 2
//   n = 128
//   L = 20.0
//   [probes]
//   eps_list = [0.1, 0.01, 0.001]
//
// Keys may also be written dotted (grid.n = 128). Unknown keys are errors.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "nfpe/diagnostics.hpp"
#include "nfpe/kernels.hpp"
#include "nfpe/mckean_vlasov.hpp"
#include "nfpe/nonlinearity.hpp"
#include "nfpe/semigroup.hpp"
#include "nfpe/snapshot.hpp"

namespace nfpe {

/// A referenced input file does not exist or cannot be opened.
class MissingInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RawValue {
  std::string text;
  bool quoted = false;
  bool is_list = false;
  std::vector<std::string> items;
  int line = 0;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::string strip_comment(const std::string& line) {
  bool in_str = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_str = !in_str;
    if (line[i] == '#' && !in_str) return line.substr(0, i);
  }
  return line;
}

inline std::string unquote(const std::string& s, int line, bool& quoted) {
  quoted = s.size() >= 2 && s.front() == '"' && s.back() == '"';
  if (quoted) return s.substr(1, s.size() - 2);
  if (!s.empty() && s.front() == '"') throw ConfigError("line " + std::to_string(line) + ": unterminated string");
  return s;
}

}  // namespace detail

/// key -> value, in file order.
inline std::map<std::string, RawValue> parse_key_values(std::string_view text) {
  std::map<std::string, RawValue> out;
  std::string section;
  std::istringstream is{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string s = detail::trim(detail::strip_comment(line));
    if (s.empty()) continue;
    const std::string where = "line " + std::to_string(lineno) + ": ";
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError(where + "malformed section header");
      section = detail::trim(std::string_view(s).substr(1, s.size() - 2));
      if (section.empty()) throw ConfigError(where + "empty section name");
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    std::string key = detail::trim(std::string_view(s).substr(0, eq));
    std::string val = detail::trim(std::string_view(s).substr(eq + 1));
    if (key.empty()) throw ConfigError(where + "missing key");
    if (val.empty()) throw ConfigError(where + "missing value for '" + key + "'");
    if (!section.empty()) key = section + "." + key;
    RawValue rv;
    rv.line = lineno;
    if (val.front() == '[') {
      if (val.back() != ']') throw ConfigError(where + "unterminated list for '" + key + "'");
      rv.is_list = true;
      std::string inner = val.substr(1, val.size() - 2);
      std::stringstream ss(inner);
      std::string item;
      while (std::getline(ss, item, ',')) {
        item = detail::trim(item);
        if (item.empty()) continue;
        bool q = false;
        rv.items.push_back(detail::unquote(item, lineno, q));
      }
    } else {
      rv.text = detail::unquote(val, lineno, rv.quoted);
    }
    if (out.count(key)) throw ConfigError(where + "duplicate key '" + key + "'");
    out.emplace(key, std::move(rv));
  }
  return out;
}

// ---------------------------------------------------------------------------

struct GridBlock {
  std::optional<int> dim;
  std::optional<std::size_t> n;
  std::optional<double> L;
};

struct NonlinearityBlock {
  std::string beta = "linear";   ///< linear | shifted_power
  double slope = 1.0;
  double alpha = 0.1;
  double m = 2.0;
  double c = 1.0;
  std::string mobility = "unit";  ///< unit | logistic
  double r0 = 1.0;
  std::string drift = "none";     ///< none | shear | potential
  double drift_strength = 0.0;
};

struct KernelBlock {
  std::string kind = "none";  ///< none | riesz | bessel | biot_savart | tabulated
  double s = 2.0;
  double mu = 1.0;
  double alpha = 1.0;
  double eps_cut = 0.0;
  std::string path;
};

struct InitialBlock {
  std::string kind = "gaussian";  ///< gaussian | two_blobs | mixture | uniform | snapshot
  double sigma = 1.0;
  std::vector<double> center;
  double shift = 0.0;
  double offset = 2.0;
  int count = 3;
  std::uint64_t seed = 1;
  std::string path;
};

struct EvolutionBlock {
  double T = 0.5;
  int n_steps = 50;
  std::optional<double> eps;
  int snapshot_every = 1;
  double fp_tol = 1e-10;
  int max_iter = 500;
  bool clip_negative = false;
};

struct ParticleBlock {
  std::size_t N = 10000;
  double dt = 1e-2;
  double T = 0.5;
  std::string mode = "frozen";  ///< frozen | self_consistent
  double bandwidth = 0.0;       ///< 0: default rule
  std::string trajectory;       ///< run directory of a previous solve (frozen mode)
  int snapshot_every = 0;
  bool write_positions = false;
};

struct ProbeBlock {
  bool enabled = false;
  std::vector<double> eps_list{1e-1, 1e-2, 1e-3};
};

struct RunConfig {
  std::string scenario;
  std::uint64_t seed = 1;
  std::string out_dir = "run";
  GridBlock grid;
  NonlinearityBlock nonlinearity;
  KernelBlock kernel;
  InitialBlock initial;
  EvolutionBlock evolution;
  ParticleBlock particles;
  ProbeBlock probes;
  std::filesystem::path base_dir;  ///< relative paths resolve against this

  Grid make_grid() const { return Grid(*grid.dim, *grid.n, *grid.L); }

  std::string resolve_path(const std::string& p) const {
    if (p.empty()) return p;
    std::filesystem::path q(p);
    return q.is_absolute() || base_dir.empty() ? q.string() : (base_dir / q).string();
  }

  NonlinearitySpec make_nonlinearity(const Grid& g) const {
    NonlinearitySpec spec;
    const auto& nb = nonlinearity;
    if (nb.beta == "linear") spec.beta = LinearBeta{nb.slope};
    else if (nb.beta == "shifted_power") spec.beta = ShiftedPowerBeta{nb.alpha, nb.m, nb.c};
    else throw ConfigError("nonlinearity.beta: unknown preset '" + nb.beta + "'");
    if (nb.mobility == "unit") spec.b = UnitMobility{};
    else if (nb.mobility == "logistic") spec.b = LogisticMobility{nb.r0};
    else throw ConfigError("nonlinearity.mobility: unknown preset '" + nb.mobility + "'");
    const double two_pi = 2.0 * std::acos(-1.0);
    if (nb.drift == "none") {
      spec.drift = NoDrift{};
    } else if (nb.drift == "shear") {
      // Divergence-free shear D = (A sin(2 pi x2 / L2), 0, ...).
      Field d(g, g.dim());
      for (std::size_t i = 0; i < g.size(); ++i)
        d.component(0)[i] = nb.drift_strength * std::sin(two_pi * g.point(i)[1] / g.extent(1));
      spec.drift = FieldDrift{d};
    } else if (nb.drift == "potential") {
      // D = -grad Phi, Phi = A sum_a cos(2 pi x_a / L_a).
      spec.drift = GradPotentialDrift{Field::from_function(g, [&](const std::array<double, 3>& x) {
        double v = 0.0;
        for (int a = 0; a < g.dim(); ++a) v += std::cos(two_pi * x[a] / g.extent(a));
        return nb.drift_strength * v;
      })};
    } else {
      throw ConfigError("nonlinearity.drift: unknown preset '" + nb.drift + "'");
    }
    return spec;
  }

  KernelSpec make_kernel(const Grid& g) const {
    KernelSpec k;
    k.eps_cut = kernel.eps_cut;
    if (kernel.kind == "none") k.kind = NoKernel{};
    else if (kernel.kind == "riesz") k.kind = RieszKernel{kernel.s, kernel.mu};
    else if (kernel.kind == "bessel") k.kind = BesselKernel{kernel.alpha};
    else if (kernel.kind == "biot_savart") k.kind = BiotSavartKernel{};
    else if (kernel.kind == "tabulated") {
      const std::string p = resolve_path(kernel.path);
      if (p.empty()) throw ConfigError("kernel.path is required for a tabulated kernel");
      if (!std::filesystem::exists(p)) throw MissingInput("kernel.path: no such file " + p);
      Field f = load_snapshot(p);
      require_same_grid(f.grid(), g, "tabulated kernel");
      k.kind = TabulatedKernel{f};
    } else {
      throw ConfigError("kernel.kind: unknown kernel '" + kernel.kind + "'");
    }
    validate_kernel_spec(k, g.dim());
    return k;
  }

  Field make_initial(const Grid& g) const;

  EvolutionConfig make_evolution() const {
    EvolutionConfig e;
    e.T = evolution.T;
    e.n_steps = evolution.n_steps;
    e.eps = evolution.eps;
    e.snapshot_every = evolution.snapshot_every;
    e.fp_tol = evolution.fp_tol;
    e.max_iter = evolution.max_iter;
    e.clip_negative = evolution.clip_negative;
    e.validate();
    return e;
  }

  std::string resolved_text() const;
};

/// Unit-mass Gaussian mixtures sampled on the centered grid.
inline Field gaussian_mixture(const Grid& g, const std::vector<std::array<double, 3>>& centers,
                              const std::vector<double>& sigmas, const std::vector<double>& weights) {
  Field f(g, 1);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto x = g.centered_point(i);
    double v = 0.0;
    for (std::size_t c = 0; c < centers.size(); ++c) {
      double r2 = 0.0;
      for (int a = 0; a < g.dim(); ++a) {
        double dx = x[a] - centers[c][a];
        dx -= g.extent(a) * std::round(dx / g.extent(a));
        r2 += dx * dx;
      }
      v += weights[c] * std::exp(-0.5 * r2 / (sigmas[c] * sigmas[c]));
    }
    f[i] = v;
  }
  f *= 1.0 / f.integral();
  return f;
}

/// Random mixture of `count` Gaussians, reproducible from `seed`.
inline Field random_mixture(const Grid& g, int count, std::uint64_t seed, double sigma) {
  std::vector<std::array<double, 3>> centers;
  std::vector<double> sigmas, weights;
  for (int c = 0; c < count; ++c) {
    std::array<double, 3> ctr{0.0, 0.0, 0.0};
    for (int a = 0; a < g.dim(); ++a) ctr[a] = (counter_uniform(seed, 7, c, 0, a) - 0.5) * 0.3 * g.extent(a);
    centers.push_back(ctr);
    sigmas.push_back(sigma * (0.6 + 0.8 * counter_uniform(seed, 7, c, 1, 0)));
    weights.push_back(0.2 + counter_uniform(seed, 7, c, 2, 0));
  }
  return gaussian_mixture(g, centers, sigmas, weights);
}

inline Field RunConfig::make_initial(const Grid& g) const {
  const auto& ib = initial;
  if (!(ib.sigma > 0.0)) throw ConfigError("initial.sigma must be positive");
  std::array<double, 3> ctr{0.0, 0.0, 0.0};
  if (!ib.center.empty()) {
    if (static_cast<int>(ib.center.size()) != g.dim()) throw ConfigError("initial.center must have dim entries");
    for (int a = 0; a < g.dim(); ++a) ctr[a] = ib.center[a];
  }
  ctr[0] += ib.shift;
  if (ib.kind == "gaussian") return gaussian_mixture(g, {ctr}, {ib.sigma}, {1.0});
  if (ib.kind == "two_blobs") {
    std::array<double, 3> a = ctr, b = ctr;
    a[0] -= 0.5 * ib.offset;
    b[0] += 0.5 * ib.offset;
    a[1] -= 0.25 * ib.offset;
    b[1] += 0.25 * ib.offset;
    return gaussian_mixture(g, {a, b}, {ib.sigma, 0.7 * ib.sigma}, {0.6, 0.4});
  }
  if (ib.kind == "mixture") {
    if (ib.count < 1) throw ConfigError("initial.count must be >= 1");
    return random_mixture(g, ib.count, ib.seed, ib.sigma);
  }
  if (ib.kind == "uniform") return Field(g, 1, 1.0 / g.volume());
  if (ib.kind == "snapshot") {
    const std::string p = resolve_path(ib.path);
    if (p.empty()) throw ConfigError("initial.path is required for a snapshot initial datum");
    if (!std::filesystem::exists(p)) throw MissingInput("initial.path: no such file " + p);
    Field f = load_snapshot(p);
    require_same_grid(f.grid(), g, "initial snapshot");
    return f;
  }
  throw ConfigError("initial.kind: unknown kind '" + ib.kind + "'");
}

// ---------------------------------------------------------------------------
// Scenario presets

inline const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names{"heat", "biot_savart_lamb_oseen", "riesz", "bessel", "keller_segel",
                                              "porous_medium"};
  return names;
}

inline void apply_scenario(RunConfig& c, const std::string& name) {
  c.scenario = name;
  if (name == "heat") {
    c.grid.dim = 2;
  } else if (name == "biot_savart_lamb_oseen") {
    c.grid.dim = 2;
    c.kernel.kind = "biot_savart";
  } else if (name == "riesz") {
    c.grid.dim = 3;
    c.kernel.kind = "riesz";
    c.kernel.s = 2.0;
    c.initial.sigma = 1.5;
  } else if (name == "bessel" || name == "keller_segel") {
    c.grid.dim = 3;
    c.kernel.kind = "bessel";
    c.kernel.alpha = 1.0;
    c.initial.sigma = 1.5;
  } else if (name == "porous_medium") {
    c.grid.dim = 2;
    c.nonlinearity.beta = "shifted_power";
    c.nonlinearity.alpha = 0.1;
    c.nonlinearity.m = 2.0;
    c.nonlinearity.c = 1.0;
  } else {
    throw ConfigError("unknown scenario '" + name + "'");
  }
}

namespace detail {

inline std::string at(const RawValue& v, const std::string& key) {
  return "line " + std::to_string(v.line) + ": key '" + key + "'";
}

inline double as_double(const RawValue& v, const std::string& key) {
  if (v.is_list) throw ConfigError(at(v, key) + " expects a number");
  try {
    std::size_t pos = 0;
    const double d = std::stod(v.text, &pos);
    if (pos != v.text.size() || !std::isfinite(d)) throw std::invalid_argument("");
    return d;
  } catch (const std::exception&) {
    throw ConfigError(at(v, key) + " expects a number, got '" + v.text + "'");
  }
}

inline long long as_int(const RawValue& v, const std::string& key) {
  const double d = as_double(v, key);
  if (d != std::floor(d)) throw ConfigError(at(v, key) + " expects an integer");
  return static_cast<long long>(d);
}

inline bool as_bool(const RawValue& v, const std::string& key) {
  if (v.text == "true") return true;
  if (v.text == "false") return false;
  throw ConfigError(at(v, key) + " expects true or false");
}

inline std::vector<double> as_list(const RawValue& v, const std::string& key) {
  if (!v.is_list) throw ConfigError(at(v, key) + " expects a list [a, b, ...]");
  std::vector<double> out;
  for (const auto& item : v.items) {
    RawValue r;
    r.text = item;
    r.line = v.line;
    out.push_back(as_double(r, key));
  }
  return out;
}

using Setter = std::function<void(RunConfig&, const RawValue&, const std::string&)>;

inline const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> s = [] {
    std::map<std::string, Setter> m;
    auto str = [](auto member) { return [member](RunConfig& c, const RawValue& v, const std::string&) { member(c) = v.text; }; };
    auto dbl = [](auto member) { return [member](RunConfig& c, const RawValue& v, const std::string& k) { member(c) = as_double(v, k); }; };
    auto positive_int = [](auto member) {
      return [member](RunConfig& c, const RawValue& v, const std::string& k) {
        const long long x = as_int(v, k);
        if (x < 0) throw ConfigError(at(v, k) + " must be nonnegative");
        member(c) = static_cast<std::remove_reference_t<decltype(member(c))>>(x);
      };
    };
    m["seed"] = positive_int([](RunConfig& c) -> std::uint64_t& { return c.seed; });
    m["output.dir"] = str([](RunConfig& c) -> std::string& { return c.out_dir; });
    m["grid.dim"] = [](RunConfig& c, const RawValue& v, const std::string& k) { c.grid.dim = static_cast<int>(as_int(v, k)); };
    m["grid.n"] = [](RunConfig& c, const RawValue& v, const std::string& k) {
      const long long n = as_int(v, k);
      if (n < 1) throw ConfigError(at(v, k) + " must be positive");
      c.grid.n = static_cast<std::size_t>(n);
    };
    m["grid.L"] = [](RunConfig& c, const RawValue& v, const std::string& k) { c.grid.L = as_double(v, k); };

    m["nonlinearity.beta"] = str([](RunConfig& c) -> std::string& { return c.nonlinearity.beta; });
    m["nonlinearity.slope"] = dbl([](RunConfig& c) -> double& { return c.nonlinearity.slope; });
    m["nonlinearity.alpha"] = dbl([](RunConfig& c) -> double& { return c.nonlinearity.alpha; });
    m["nonlinearity.m"] = dbl([](RunConfig& c) -> double& { return c.nonlinearity.m; });
    m["nonlinearity.c"] = dbl([](RunConfig& c) -> double& { return c.nonlinearity.c; });
    m["nonlinearity.mobility"] = str([](RunConfig& c) -> std::string& { return c.nonlinearity.mobility; });
    m["nonlinearity.r0"] = dbl([](RunConfig& c) -> double& { return c.nonlinearity.r0; });
    m["nonlinearity.drift"] = str([](RunConfig& c) -> std::string& { return c.nonlinearity.drift; });
    m["nonlinearity.drift_strength"] = dbl([](RunConfig& c) -> double& { return c.nonlinearity.drift_strength; });

    m["kernel.kind"] = str([](RunConfig& c) -> std::string& { return c.kernel.kind; });
    m["kernel.s"] = dbl([](RunConfig& c) -> double& { return c.kernel.s; });
    m["kernel.mu"] = dbl([](RunConfig& c) -> double& { return c.kernel.mu; });
    m["kernel.alpha"] = dbl([](RunConfig& c) -> double& { return c.kernel.alpha; });
    m["kernel.eps_cut"] = dbl([](RunConfig& c) -> double& { return c.kernel.eps_cut; });
    m["kernel.path"] = str([](RunConfig& c) -> std::string& { return c.kernel.path; });

    m["initial.kind"] = str([](RunConfig& c) -> std::string& { return c.initial.kind; });
    m["initial.sigma"] = dbl([](RunConfig& c) -> double& { return c.initial.sigma; });
    m["initial.center"] = [](RunConfig& c, const RawValue& v, const std::string& k) { c.initial.center = as_list(v, k); };
    m["initial.shift"] = dbl([](RunConfig& c) -> double& { return c.initial.shift; });
    m["initial.offset"] = dbl([](RunConfig& c) -> double& { return c.initial.offset; });
    m["initial.count"] = positive_int([](RunConfig& c) -> int& { return c.initial.count; });
    m["initial.seed"] = positive_int([](RunConfig& c) -> std::uint64_t& { return c.initial.seed; });
    m["initial.path"] = str([](RunConfig& c) -> std::string& { return c.initial.path; });

    m["evolution.T"] = dbl([](RunConfig& c) -> double& { return c.evolution.T; });
    m["evolution.n_steps"] = positive_int([](RunConfig& c) -> int& { return c.evolution.n_steps; });
    m["evolution.eps"] = [](RunConfig& c, const RawValue& v, const std::string& k) {
      if (v.text == "auto") c.evolution.eps.reset();
      else c.evolution.eps = as_double(v, k);
    };
    m["evolution.snapshot_every"] = positive_int([](RunConfig& c) -> int& { return c.evolution.snapshot_every; });
    m["evolution.fp_tol"] = dbl([](RunConfig& c) -> double& { return c.evolution.fp_tol; });
    m["evolution.max_iter"] = positive_int([](RunConfig& c) -> int& { return c.evolution.max_iter; });
    m["evolution.clip_negative"] = [](RunConfig& c, const RawValue& v, const std::string& k) {
      c.evolution.clip_negative = as_bool(v, k);
    };

    m["particles.N"] = positive_int([](RunConfig& c) -> std::size_t& { return c.particles.N; });
    m["particles.dt"] = dbl([](RunConfig& c) -> double& { return c.particles.dt; });
    m["particles.T"] = dbl([](RunConfig& c) -> double& { return c.particles.T; });
    m["particles.mode"] = str([](RunConfig& c) -> std::string& { return c.particles.mode; });
    m["particles.bandwidth"] = dbl([](RunConfig& c) -> double& { return c.particles.bandwidth; });
    m["particles.trajectory"] = str([](RunConfig& c) -> std::string& { return c.particles.trajectory; });
    m["particles.snapshot_every"] = positive_int([](RunConfig& c) -> int& { return c.particles.snapshot_every; });
    m["particles.write_positions"] = [](RunConfig& c, const RawValue& v, const std::string& k) {
      c.particles.write_positions = as_bool(v, k);
    };

    m["probes.enabled"] = [](RunConfig& c, const RawValue& v, const std::string& k) { c.probes.enabled = as_bool(v, k); };
    m["probes.eps_list"] = [](RunConfig& c, const RawValue& v, const std::string& k) {
      c.probes.eps_list = as_list(v, k);
    };
    return m;
  }();
  return s;
}

}  // namespace detail

/// Parses and validates a run configuration. Errors name the line and key.
inline RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir = {}) {
  const auto kv = parse_key_values(text);
  RunConfig c;
  c.base_dir = base_dir;
  for (const auto& [key, v] : kv)
    if (key != "scenario" && !detail::setters().count(key))
      throw ConfigError("line " + std::to_string(v.line) + ": unknown key '" + key + "'");
  if (auto it = kv.find("scenario"); it != kv.end()) {
    try {
      apply_scenario(c, it->second.text);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(it->second.line) + ": " + e.what());
    }
  }
  for (const auto& [key, v] : kv)
    if (key != "scenario") detail::setters().at(key)(c, v, key);
  if (kv.count("probes.eps_list") && !kv.count("probes.enabled")) c.probes.enabled = true;

  for (const char* req : {"grid.dim", "grid.n", "grid.L"}) {
    const bool present = std::string(req) == "grid.dim" ? c.grid.dim.has_value()
                         : std::string(req) == "grid.n" ? c.grid.n.has_value()
                                                        : c.grid.L.has_value();
    if (!present) throw ConfigError(std::string("missing required key '") + req + "'");
  }
  // Constructing the grid and evolution settings validates them.
  (void)c.make_grid();
  (void)c.make_evolution();
  if (c.particles.mode != "frozen" && c.particles.mode != "self_consistent")
    throw ConfigError("particles.mode must be 'frozen' or 'self_consistent'");
  if (c.probes.enabled) validate_eps_list(c.probes.eps_list);
  return c;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw MissingInput("cannot open config file " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_run_config(ss.str(), std::filesystem::path(path).parent_path());
}

/// A complete config text that reproduces this run when parsed again.
inline std::string RunConfig::resolved_text() const {
  std::ostringstream os;
  os << std::setprecision(17);
  auto q = [](const std::string& s) { return "\"" + s + "\""; };
  auto list = [](const std::vector<double>& v) {
    std::ostringstream o;
    o << std::setprecision(17) << '[';
    for (std::size_t i = 0; i < v.size(); ++i) o << (i ? ", " : "") << v[i];
    o << ']';
    return o.str();
  };
  if (!scenario.empty()) os << "scenario = " << q(scenario) << '\n';
  os << "seed = " << seed << '\n';
  os << "\n[output]\ndir = " << q(out_dir) << '\n';
  os << "\n[grid]\ndim = " << *grid.dim << "\nn = " << *grid.n << "\nL = " << *grid.L << '\n';
  const auto& nb = nonlinearity;
  os << "\n[nonlinearity]\nbeta = " << q(nb.beta) << "\nslope = " << nb.slope << "\nalpha = " << nb.alpha
     << "\nm = " << nb.m << "\nc = " << nb.c << "\nmobility = " << q(nb.mobility) << "\nr0 = " << nb.r0
     << "\ndrift = " << q(nb.drift) << "\ndrift_strength = " << nb.drift_strength << '\n';
  os << "\n[kernel]\nkind = " << q(kernel.kind) << "\ns = " << kernel.s << "\nmu = " << kernel.mu
     << "\nalpha = " << kernel.alpha << "\neps_cut = " << kernel.eps_cut << '\n';
  if (!kernel.path.empty()) os << "path = " << q(resolve_path(kernel.path)) << '\n';
  const auto& ib = initial;
  os << "\n[initial]\nkind = " << q(ib.kind) << "\nsigma = " << ib.sigma << "\nshift = " << ib.shift
     << "\noffset = " << ib.offset << "\ncount = " << ib.count << "\nseed = " << ib.seed << '\n';
  if (!ib.center.empty()) os << "center = " << list(ib.center) << '\n';
  if (!ib.path.empty()) os << "path = " << q(resolve_path(ib.path)) << '\n';
  const auto& eb = evolution;
  os << "\n[evolution]\nT = " << eb.T << "\nn_steps = " << eb.n_steps << "\neps = ";
  if (eb.eps) os << *eb.eps; else os << q("auto");
  os << "\nsnapshot_every = " << eb.snapshot_every << "\nfp_tol = " << eb.fp_tol << "\nmax_iter = " << eb.max_iter
     << "\nclip_negative = " << (eb.clip_negative ? "true" : "false") << '\n';
  const auto& pb = particles;
  os << "\n[particles]\nN = " << pb.N << "\ndt = " << pb.dt << "\nT = " << pb.T << "\nmode = " << q(pb.mode)
     << "\nbandwidth = " << pb.bandwidth << "\nsnapshot_every = " << pb.snapshot_every
     << "\nwrite_positions = " << (pb.write_positions ? "true" : "false") << '\n';
  if (!pb.trajectory.empty()) os << "trajectory = " << q(resolve_path(pb.trajectory)) << '\n';
  os << "\n[probes]\nenabled = " << (probes.enabled ? "true" : "false") << "\neps_list = " << list(probes.eps_list)
     << '\n';
  return os.str();
}

}  // namespace nfpe

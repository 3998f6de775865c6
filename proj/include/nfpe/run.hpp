#pragma once

// Command drivers shared by the CLI and the integration tests. Each returns a
// process exit code and writes a self-describing run directory.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>

#include "nfpe/config.hpp"
#include "nfpe/diagnostics.hpp"
#include "nfpe/mckean_vlasov.hpp"
#include "nfpe/oracles.hpp"
#include "nfpe/semigroup.hpp"
#include "nfpe/snapshot.hpp"
#include "nfpe/validation.hpp"

namespace nfpe {

enum ExitCode : int {
  kExitOk = 0,
  kExitSolver = 1,
  kExitHypothesis = 2,
  kExitConfig = 64,
  kExitMissingInput = 66,
};

struct RunOptions {
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::ostream* log = &std::cout;
};

namespace io {

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  os << std::setprecision(17);
  return os;
}

inline void write_monitors_csv(const std::filesystem::path& p, const std::vector<MonitorRow>& rows) {
  auto os = open_out(p);
  os << "t,mass,min_u,max_u,l2,h1_energy,entropy,resolvent_iters,residual\n";
  for (const auto& r : rows)
    os << r.t << ',' << r.mass << ',' << r.min_u << ',' << r.max_u << ',' << r.l2 << ',' << r.h1_energy << ','
       << r.entropy << ',' << r.resolvent_iters << ',' << r.residual << '\n';
}

/// snapshots/snap_NNNNN.nfpe plus snapshots/index.csv (index, t, file).
inline void write_snapshot_series(const std::filesystem::path& dir, const std::vector<double>& times,
                                  const std::vector<Field>& fields, const std::string& stem) {
  std::filesystem::create_directories(dir);
  auto idx = open_out(dir / "index.csv");
  idx << "index,t,file\n";
  for (std::size_t i = 0; i < fields.size(); ++i) {
    std::ostringstream name;
    name << stem << '_' << std::setw(5) << std::setfill('0') << i << ".nfpe";
    save_snapshot((dir / name.str()).string(), fields[i]);
    idx << i << ',' << times[i] << ',' << name.str() << '\n';
  }
}

/// Reads a snapshot series written by write_snapshot_series.
inline Trajectory read_snapshot_series(const std::filesystem::path& dir) {
  const auto index = dir / "index.csv";
  std::ifstream is(index);
  if (!is) throw MissingInput("no snapshot index at " + index.string());
  Trajectory tr;
  std::string line;
  std::getline(is, line);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string i, t, file;
    std::getline(ss, i, ',');
    std::getline(ss, t, ',');
    std::getline(ss, file, ',');
    const auto path = dir / file;
    if (!std::filesystem::exists(path)) throw MissingInput("missing snapshot " + path.string());
    tr.times.push_back(std::stod(t));
    tr.snapshots.push_back(load_snapshot(path.string()));
  }
  if (tr.snapshots.empty()) throw MissingInput("empty snapshot index " + index.string());
  return tr;
}

inline std::filesystem::path prepare_out_dir(const RunConfig& cfg, const RunOptions& opts) {
  const std::filesystem::path out = opts.out_dir ? *opts.out_dir : cfg.out_dir;
  std::filesystem::create_directories(out);
  RunConfig frozen = cfg;
  frozen.out_dir = out.string();
  auto os = open_out(out / "config.resolved");
  os << frozen.resolved_text();
  return out;
}

}  // namespace io

/// Applies --seed and builds the configuration's model objects.
struct Model {
  RunConfig cfg;
  Grid grid;
  NonlinearitySpec spec;
  KernelSpec kernel;
  ValidationReport report;

  explicit Model(RunConfig c, const RunOptions& opts) : cfg(std::move(c)) {
    if (opts.seed) cfg.seed = *opts.seed;
    grid = cfg.make_grid();
    spec = cfg.make_nonlinearity(grid);
    kernel = cfg.make_kernel(grid);
    report = validate_hypotheses(spec, kernel, grid);
  }
};

inline void write_validation(const std::filesystem::path& out, const ValidationReport& report) {
  auto os = io::open_out(out / "validation.txt");
  os << report.to_text();
}

inline int cmd_solve(const RunConfig& config, const RunOptions& opts = {}) {
  Model m(config, opts);
  std::ostream& log = *opts.log;
  const auto out = io::prepare_out_dir(m.cfg, opts);
  write_validation(out, m.report);
  const Field u0 = m.cfg.make_initial(m.grid);
  EvolutionConfig ec = m.cfg.make_evolution();
  ec.gamma = m.report.gamma.grid_value();

  const Trajectory tr = evolve(u0, ec, m.spec, m.kernel);
  io::write_monitors_csv(out / "monitors.csv", tr.monitors);
  io::write_snapshot_series(out / "snapshots", tr.times, tr.snapshots, "snap");

  auto summary = io::open_out(out / "summary.txt");
  summary << "scenario=" << m.cfg.scenario << "\nlambda=" << tr.lambda << "\neps=" << tr.eps
          << "\ngamma=" << m.report.gamma.value() << "\ngamma_grid=" << m.report.gamma.grid_value()
          << "\ngamma_error_bar=" << m.report.gamma.error_bar() << '\n';
  log << m.report.to_text();
  if (!tr.ok()) {
    summary << "error=" << *tr.error << '\n';
    log << "solver error: " << *tr.error << '\n';
    return kExitSolver;
  }

  if (m.cfg.probes.enabled) {
    EvolutionConfig half = ec;
    half.n_steps *= 2;
    half.snapshot_every *= 2;
    half.eps = tr.eps;
    const Trajectory tr2 = evolve(u0, half, m.spec, m.kernel);
    if (!tr2.ok()) {
      summary << "error=probe trajectory: " << *tr2.error << '\n';
      log << "solver error in probe trajectory: " << *tr2.error << '\n';
      return kExitSolver;
    }
    const auto probe = run_uniqueness_probe(tr, tr2, m.cfg.probes.eps_list);
    write_h_eps_csv((out / "h_eps.csv").string(), probe);
    summary << "probe_C_median=" << probe.C_median << "\nprobe_C_stable=" << probe.C_stable
            << "\nprobe_passes=" << probe.passes() << '\n';
    log << "uniqueness probe: C_median=" << probe.C_median << " stable=" << (probe.C_stable ? "yes" : "no") << '\n';
  }
  const auto& last = tr.monitors.back();
  log << "solve finished: t=" << last.t << " mass=" << std::setprecision(17) << last.mass << " max_u=" << last.max_u
      << '\n';
  return m.report.all_passed() ? kExitOk : kExitHypothesis;
}

inline int cmd_particles(const RunConfig& config, const RunOptions& opts = {}) {
  Model m(config, opts);
  std::ostream& log = *opts.log;
  const auto& pb = m.cfg.particles;
  const Field u0 = m.cfg.make_initial(m.grid);

  std::optional<Trajectory> pde;
  if (!pb.trajectory.empty()) {
    const std::filesystem::path dir = m.cfg.resolve_path(pb.trajectory);
    if (!std::filesystem::exists(dir)) throw MissingInput("particles.trajectory: no such directory " + dir.string());
    const auto sub = dir / "snapshots";
    pde = io::read_snapshot_series(std::filesystem::exists(sub) ? sub : dir);
    require_same_grid(pde->snapshots.front().grid(), m.grid, "particles.trajectory");
  } else if (pb.mode == "frozen") {
    EvolutionConfig ec = m.cfg.make_evolution();
    ec.T = pb.T;
    ec.n_steps = std::max(1, static_cast<int>(std::llround(pb.T / pb.dt)));
    ec.snapshot_every = 1;
    ec.monitors = {false, false};
    Trajectory tr = evolve(u0, ec, m.spec, m.kernel);
    if (!tr.ok()) {
      log << "solver error: " << *tr.error << '\n';
      return kExitSolver;
    }
    pde = std::move(tr);
  }

  const auto out = io::prepare_out_dir(m.cfg, opts);
  write_validation(out, m.report);
  CouplingMode mode = pb.mode == "frozen" ? CouplingMode(PdeFrozen{&*pde}) : CouplingMode(SelfConsistent{pb.bandwidth > 0.0 ? pb.bandwidth : 2.0 * m.grid.min_spacing()});
  SimulationOptions so;
  so.snapshot_every = pb.snapshot_every;
  so.output_bandwidth = pb.bandwidth;
  so.threads = opts.threads;
  so.keep_positions = pb.write_positions;
  const SimulationResult res = simulate(u0, mode, pb.N, pb.dt, pb.T, m.cfg.seed, m.spec, m.kernel, so);

  io::write_snapshot_series(out / "kde", res.times, res.kde, "kde");
  if (pb.write_positions) write_particles_csv((out / "particles.csv").string(), res.ensembles);
  auto mon = io::open_out(out / "monitors.csv");
  mon << "t,mass,min_u,max_u,hm1_to_pde,clamped_cells\n";
  for (std::size_t i = 0; i < res.times.size(); ++i) {
    const Field& k = res.kde[i];
    mon << res.times[i] << ',' << k.integral() << ',' << k.min() << ',' << k.max() << ',';
    if (pde) {
      for (std::size_t j = 0; j < pde->times.size(); ++j)
        if (std::abs(pde->times[j] - res.times[i]) <= 1e-9 * std::max(1.0, res.times[i])) {
          const double d = hminus1_norm(k - pde->snapshots[j]);
          mon << d;
          log << "t=" << res.times[i] << " H^-1 distance to PDE " << d << '\n';
          break;
        }
    }
    mon << ',' << res.clamped_cells << '\n';
  }
  log << "particles finished: N=" << pb.N << " steps=" << std::llround(pb.T / pb.dt)
      << " sigma clamps=" << res.clamped_cells << '\n';
  return m.report.all_passed() ? kExitOk : kExitHypothesis;
}

inline int cmd_kernels(const RunConfig& config, const RunOptions& opts = {}) {
  Model m(config, opts);
  std::ostream& log = *opts.log;
  const auto out = io::prepare_out_dir(m.cfg, opts);
  write_validation(out, m.report);
  if (!kernel_is_zero(m.kernel)) save_snapshot((out / "kernel.nfpe").string(), sample_kernel(m.kernel, m.grid));
  auto g = io::open_out(out / "gamma.csv");
  g << "resolution,n,divergence_part,radial_part,far_field_sup,gamma\n";
  const auto& ge = m.report.gamma;
  g << "n," << m.grid.n() << ',' << ge.at_n.divergence_part << ',' << ge.at_n.radial_part << ','
    << ge.at_n.far_field_sup << ',' << ge.at_n.total() << '\n';
  if (ge.refined)
    g << "2n," << 2 * m.grid.n() << ',' << ge.at_2n.divergence_part << ',' << ge.at_2n.radial_part << ','
      << ge.at_2n.far_field_sup << ',' << ge.at_2n.total() << '\n';
  log << "kernel " << kernel_name(m.kernel) << '\n' << m.report.to_text();
  return m.report.all_passed() ? kExitOk : kExitHypothesis;
}

inline int cmd_validate(const RunOptions& opts = {}, const OracleOptions& oo = {}) {
  std::ostream& log = *opts.log;
  const auto results = run_oracle_battery(oo);
  bool ok = true;
  log << std::left << std::setw(40) << "oracle" << std::setw(14) << "value" << std::setw(12) << "tolerance"
      << "result\n";
  for (const auto& r : results) {
    log << std::setw(40) << r.name << std::setw(14) << std::setprecision(4) << r.value << std::setw(12)
        << r.tolerance << (r.passed ? "PASS" : "FAIL") << '\n';
    ok = ok && r.passed;
  }
  if (opts.out_dir) {
    std::filesystem::create_directories(*opts.out_dir);
    auto os = io::open_out(std::filesystem::path(*opts.out_dir) / "validate.csv");
    os << "oracle,value,tolerance,passed,seconds\n";
    for (const auto& r : results)
      os << r.name << ',' << r.value << ',' << r.tolerance << ',' << (r.passed ? 1 : 0) << ',' << r.seconds << '\n';
  }
  return ok ? kExitOk : kExitSolver;
}

/// Runs `fn`, mapping exceptions onto exit codes.
template <class F>
int guarded(F&& fn, std::ostream& err = std::cerr) {
  try {
    return fn();
  } catch (const MissingInput& e) {
    err << "missing input: " << e.what() << '\n';
    return kExitMissingInput;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const SnapshotError& e) {
    err << "input error: " << e.what() << '\n';
    return kExitMissingInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitSolver;
  }
}

}  // namespace nfpe

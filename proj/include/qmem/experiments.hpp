// experiments.hpp
// Batch experiments behind the command-line front end. Each experiment reads
// an ExperimentConfig, writes CSV files into an output directory and always
// leaves a manifest.txt describing the run (including failures).

#pragma once

#include "qmem/composite.hpp"
#include "qmem/config.hpp"
#include "qmem/csv.hpp"
#include "qmem/grw.hpp"
#include "qmem/master_equation.hpp"
#include "qmem/nonmarkov.hpp"
#include "qmem/parallel.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#ifndef QMEM_VERSION
#define QMEM_VERSION "0.1.0"
#endif

namespace qmem {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitNumericalFailure = 3;

struct RunOptions {
  std::filesystem::path out_dir = ".";
  std::size_t threads = 1;
  std::optional<std::uint64_t> seed;  // overrides the config's seed
};

struct RunResult {
  int exit_code = kExitOk;
  std::string message;
  std::vector<std::string> outputs;
  std::vector<std::string> notes;
};

namespace detail {

struct RunContext {
  const ExperimentConfig& cfg;
  std::uint64_t seed;
  std::filesystem::path out;
  std::size_t threads;
  RunResult& result;

  std::ofstream open(const std::string& name) {
    std::ofstream os(out / name, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + (out / name).string());
    result.outputs.push_back(name);
    return os;
  }
};

inline grw::PositionGrid grid_from_config(const ExperimentConfig& c, std::size_t default_points,
                                         std::size_t max_points = std::numeric_limits<std::size_t>::max()) {
  const double x_min = c.real("x_min", -8.0);
  const double x_max = c.real("x_max", 8.0);
  if (!(x_min < x_max)) {
    if (const auto* e = c.find("x_max")) throw c.error(*e, "must exceed x_min");
    throw ConfigError("config error: field 'x_min' must be below the default x_max = 8");
  }
  const auto n = c.count("n_points", default_points, 8);
  if (n > max_points) throw c.error(*c.find("n_points"), "must be <= " + std::to_string(max_points));
  return {x_min, x_max, n};
}

inline void run_grw_mc(RunContext& ctx) {
  const auto& c = ctx.cfg;
  const grw::GrwParams p{c.positive("lambda", 1.0), c.positive("r_c", 1.0)};
  const double separation = c.positive("separation", 4.0 * p.r_c);
  const double width = c.positive("packet_width", 0.3);
  const auto times = c.sorted_times("times", {0.5, 1.0, 2.0});
  const auto n_traj = c.count("trajectories", 10000, 1);
  const std::string ham = c.choice("hamiltonian", "none", {"none", "free"});
  const double mass = c.positive("mass", 1.0);
  const auto save = c.count("save_trajectories", 0);

  const grw::PositionGrid grid = grid_from_config(c, 64);
  const double centers[2] = {-0.5 * separation, 0.5 * separation};
  const grw::WaveFunction psi0 = grw::gaussian_superposition(grid, centers, width);
  if (auto warn = grw::boundary_warning(psi0, p)) ctx.result.notes.push_back(*warn);
  const grw::GridPropagator prop = ham == "free" ? grw::GridPropagator(grw::free_particle_hamiltonian(grid, mass))
                                                 : grw::GridPropagator();
  if (ham == "free") ctx.result.notes.push_back("analytic columns assume H0 = 0 and do not apply with hamiltonian = free");

  std::vector<grw::Trajectory> traj(n_traj);
  parallel_for(n_traj, ctx.threads, [&](std::size_t i) {
    traj[i] = grw::simulate_trajectory(psi0, p, prop, times, ctx.seed + i);
  });

  const std::size_t left = grid.nearest_index(centers[0]);
  const std::size_t right = grid.nearest_index(centers[1]);
  const DensityMatrix rho0 = grid_density_matrix(psi0);
  const Complex c0 = rho0(static_cast<Eigen::Index>(left), static_cast<Eigen::Index>(right));
  const double gamma = grw_decoherence_rate(grid.point(left) - grid.point(right), p);

  auto os = ctx.open("grw_coherence.csv");
  csv::Writer w(os);
  w.header({"time[time]", "x_left[length]", "x_right[length]", "coherence_re[1]", "coherence_im[1]",
            "coherence_abs[1]", "std_error[1]", "analytic_abs[1]", "factor_mc[1]",
            "factor_analytic[1]", "factor_std_error[1]", "population_left[1]",
            "population_left_std_error[1]", "population_left_initial[1]", "mean_jumps[count]"});
  for (std::size_t k = 0; k < times.size(); ++k) {
    const auto coh = grw::coherence_statistics(traj, k, left, right);
    const auto pop = grw::coherence_statistics(traj, k, left, left);
    double jumps = 0.0;
    for (const auto& tr : traj) {
      for (const auto& j : tr.jumps) jumps += j.time <= times[k] ? 1.0 : 0.0;
    }
    const double analytic = std::exp(-gamma * times[k]) * std::abs(c0);
    w.row(times[k], grid.point(left), grid.point(right), coh.mean.real(), coh.mean.imag(), std::abs(coh.mean),
          coh.standard_error, analytic, std::abs(coh.mean) / std::abs(c0), std::exp(-gamma * times[k]),
          coh.standard_error / std::abs(c0), pop.mean.real(), pop.standard_error,
          rho0(static_cast<Eigen::Index>(left), static_cast<Eigen::Index>(left)).real(),
          jumps / static_cast<double>(n_traj));
  }
  for (std::size_t i = 0; i < std::min<std::size_t>(save, traj.size()); ++i) {
    auto ts = ctx.open("trajectory_" + std::to_string(i) + ".csv");
    grw::write_trajectory_csv(ts, traj[i]);
  }
}

inline void write_state_rows(csv::Writer& w, double t, const DensityMatrix& rho) {
  std::vector<std::string> cells{csv::format(t), csv::format(rho.matrix().trace().real()), csv::format(rho.purity())};
  for (Eigen::Index i = 0; i < rho.matrix().rows(); ++i) {
    for (Eigen::Index j = 0; j < rho.matrix().cols(); ++j) {
      cells.push_back(csv::format(rho(i, j).real()));
      cells.push_back(csv::format(rho(i, j).imag()));
    }
  }
  w.line(cells);
}

inline void run_lindblad(RunContext& ctx) {
  const auto& c = ctx.cfg;
  const std::string model = c.choice("model", "dephasing", {"dephasing", "random", "grw"});
  const auto times = c.sorted_times("times", {0.0, 0.5, 1.0, 2.0});
  Superoperator gen;
  std::optional<DensityMatrix> rho0;
  if (model == "dephasing") {
    gen = lindblad_superoperator(qubit_dephasing(c.positive("rate", 1.0)));
    rho0 = DensityMatrix::pure(ComplexVector::Constant(2, Complex(1.0, 0.0)));
  } else if (model == "random") {
    const auto dim = static_cast<Eigen::Index>(c.count("dim", 2, 1));
    Rng rng(ctx.seed);
    gen = lindblad_superoperator(random_lindblad_generator(dim, c.count("channels", 2), rng, c.positive("max_rate", 1.0)));
    rho0 = random_state(dim, rng);
  } else {
    const grw::GrwParams p{c.positive("lambda", 1.0), c.positive("r_c", 1.0)};
    const grw::PositionGrid grid = grid_from_config(c, 16, kMaxSuperoperatorGrid);
    const double sep = c.positive("separation", 4.0 * p.r_c);
    const double centers[2] = {-0.5 * sep, 0.5 * sep};
    gen = grw_generator(grid, p);
    rho0 = grid_density_matrix(grw::gaussian_superposition(grid, centers, c.positive("packet_width", 1.0)));
  }
  if (c.choice("generator", "yes", {"yes", "no"}) == "yes") {
    auto g = ctx.open("generator.csv");
    csv::write_matrix(g, gen.matrix, "1/time");
  }
  const auto states = integrate_lindblad(*rho0, gen, times);
  auto os = ctx.open("states.csv");
  csv::Writer w(os);
  std::vector<std::string> header{"time[time]", "trace[1]", "purity[1]"};
  for (Eigen::Index i = 0; i < gen.dim; ++i) {
    for (Eigen::Index j = 0; j < gen.dim; ++j) {
      header.push_back("re_" + std::to_string(i) + "_" + std::to_string(j) + "[1]");
      header.push_back("im_" + std::to_string(i) + "_" + std::to_string(j) + "[1]");
    }
  }
  w.header(header);
  for (std::size_t k = 0; k < times.size(); ++k) write_state_rows(w, times[k], states[k]);
}

// Exchange coupling g (sigma+ sigma- + sigma- sigma+) between a system qubit
// and an environment qubit prepared in |0>.
inline CompositeModel exchange_model(double coupling) {
  ComplexMatrix lower = ComplexMatrix::Zero(2, 2);
  lower(0, 1) = 1.0;
  const ComplexMatrix raise = lower.adjoint();
  ComplexMatrix h = coupling * (kron(raise, lower) + kron(lower, raise));
  ComplexVector ground = ComplexVector::Zero(2);
  ground(0) = 1.0;
  return {{2, 2}, std::move(h), DensityMatrix::pure(ground)};
}

inline MapFamily build_family(RunContext& ctx) {
  const auto& c = ctx.cfg;
  const std::string model = c.choice("model", "dephasing", {"dephasing", "semigroup", "exchange", "file"});
  if (model == "file") {
    const std::string path = c.text("family_file", "");
    if (path.empty()) throw ConfigError("config error: model = file requires field 'family_file'");
    std::ifstream in(path);
    if (!in) throw c.error(*c.find("family_file"), "cannot be opened");
    return read_family_csv(in);
  }
  const double t_final = c.positive("t_final", std::nullopt);
  const auto steps = c.count("steps", 4000, 1);
  std::vector<double> times(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) times[k] = t_final * static_cast<double>(k) / static_cast<double>(steps);
  if (model == "dephasing") {
    const double gamma = c.number("gamma", 1.0, [](double v) { return v >= 0.0; }, ">= 0");
    const double omega = c.real("omega", std::numbers::pi);
    std::vector<double> f(times.size());
    for (std::size_t k = 0; k < times.size(); ++k) f[k] = std::exp(-gamma * times[k]) * std::cos(omega * times[k]);
    return dephasing_family(f, times);
  }
  if (model == "semigroup") {
    Rng rng(ctx.seed);
    const auto gen = random_lindblad_generator(static_cast<Eigen::Index>(c.count("dim", 2, 1)), c.count("channels", 2),
                                               rng, c.positive("max_rate", 1.0));
    return semigroup_family(lindblad_superoperator(gen), times);
  }
  return reduced_family(exchange_model(c.positive("coupling", 1.0)), times);
}

inline BlpQuadrature parse_quadrature(const ExperimentConfig& c) {
  const std::string q = c.choice("quadrature", "refined", {"refined", "variation", "trapezoid"});
  if (q == "variation") return BlpQuadrature::PositiveVariation;
  if (q == "trapezoid") return BlpQuadrature::CenteredTrapezoid;
  return BlpQuadrature::RefinedExtrema;
}

inline void run_blp(RunContext& ctx) {
  const auto quadrature = parse_quadrature(ctx.cfg);
  const PairStrategy strategy{ctx.cfg.count("pairs", 64, 1), ctx.seed};
  const MapFamily family = build_family(ctx);
  const BlpResult r = blp_measure(family, strategy, quadrature, ctx.threads);
  {
    auto os = ctx.open("blp.csv");
    csv::Writer w(os);
    w.header({"time[time]", "distance[1]", "sigma[1/time]"});
    for (std::size_t k = 0; k < family.size(); ++k) w.row(family.times()[k], r.distances[k], r.sigma[k]);
  }
  {
    auto os = ctx.open("blp_pairs.csv");
    csv::Writer w(os);
    w.header({"pair_id", "label", "measure[1]"});
    for (const auto& e : r.pair_search_log) w.row(e.pair_id, e.label, e.measure);
  }
  auto os = ctx.open("blp_summary.csv");
  csv::Writer w(os);
  w.header({"measure[1]", "best_pair", "label", "quadrature"});
  w.row(r.measure, r.best_pair, r.state_pair.label, ctx.cfg.text("quadrature", "refined"));
}

inline void run_divisibility(RunContext& ctx) {
  const MapFamily family = build_family(ctx);
  const auto steps = divisibility_scan(family);
  auto os = ctx.open("divisibility.csv");
  csv::Writer w(os);
  w.header({"s[time]", "t[time]", "verdict", "min_choi_eigenvalue[1]", "condition_number[1]"});
  for (const auto& s : steps) {
    w.row(family.times()[s.s_index], family.times()[s.t_index], std::string(to_string(s.verdict)), s.min_choi_eigenvalue,
          s.condition_number);
  }
}

inline void run_bound_campaign(RunContext& ctx) {
  const auto& c = ctx.cfg;
  CampaignSettings cfg;
  cfg.instances = c.count("instances", 10000, 1);
  cfg.dim_s = c.count("dim_s", 2, 1);
  cfg.dim_e_options.clear();
  for (double d : c.list("dim_e", {2.0, 3.0})) {
    if (d < 1.0 || d > static_cast<double>(kMaxEnvironmentDim) || d != std::floor(d)) {
      throw c.error(*c.find("dim_e"), "must list integers in [1, 8]");
    }
    cfg.dim_e_options.push_back(static_cast<std::size_t>(d));
  }
  cfg.t_max = c.positive("t_max", 3.0);
  cfg.seed = ctx.seed;
  cfg.threads = ctx.threads;
  const auto rows = qmem::run_bound_campaign(cfg);
  {
    auto os = ctx.open("bound_campaign.csv");
    write_campaign_csv(os, rows);
  }
  double min_slack = std::numeric_limits<double>::infinity();
  std::size_t violations = 0;
  for (const auto& r : rows) {
    min_slack = std::min(min_slack, r.report.slack());
    violations += r.report.slack() < -1e-10 ? 1 : 0;
  }
  if (violations) ctx.result.notes.push_back(std::to_string(violations) + " instances violate the bound beyond 1e-10");
  auto os = ctx.open("bound_summary.csv");
  csv::Writer w(os);
  w.header({"instances[count]", "min_slack[1]", "violations[count]"});
  w.row(rows.size(), min_slack, violations);
}

inline void run_export_family(RunContext& ctx) {
  const MapFamily family = build_family(ctx);
  auto os = ctx.open("family.csv");
  write_family_csv(os, family);
}

inline void write_manifest(const std::filesystem::path& out, const ExperimentConfig& cfg, std::uint64_t seed,
                           std::size_t threads, const RunResult& r, double wall_seconds) {
  std::ofstream os(out / "manifest.txt", std::ios::binary);
  if (!os) return;
  const char* status = r.exit_code == kExitOk ? "ok" : r.exit_code == kExitConfigError ? "config-error" : "numerical-failure";
  os << "experiment = " << to_string(cfg.kind()) << '\n'
     << "status = " << status << '\n'
     << "exit_code = " << r.exit_code << '\n';
  if (!r.message.empty()) os << "message = " << r.message << '\n';
  os << "seed = " << seed << '\n'
     << "version = " << QMEM_VERSION << '\n'
     << "threads = " << threads << '\n'
     << "wall_time_s = " << csv::format(wall_seconds) << '\n';
  std::string outputs;
  for (const auto& f : r.outputs) outputs += (outputs.empty() ? "" : ", ") + f;
  os << "outputs = " << outputs << '\n';
  for (const auto& n : r.notes) os << "note = " << n << '\n';
  os << "\n# configuration\n" << cfg.serialize();
}

}  // namespace detail

inline RunResult run_experiment(const ExperimentConfig& config, const RunOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentConfig cfg = config;
  RunResult result;
  std::uint64_t seed = 0;
  try {
    seed = opts.seed ? *opts.seed : cfg.count("seed", 0);
  } catch (const ConfigError& e) {
    result.exit_code = kExitConfigError;
    result.message = e.what();
  }
  if (opts.seed) cfg.set("seed", std::to_string(*opts.seed));

  std::error_code ec;
  std::filesystem::create_directories(opts.out_dir, ec);
  if (ec) {
    result.exit_code = kExitConfigError;
    result.message = "cannot create output directory '" + opts.out_dir.string() + "': " + ec.message();
    return result;
  }
  if (result.exit_code == kExitOk) {
    detail::RunContext ctx{cfg, seed, opts.out_dir, std::max<std::size_t>(1, opts.threads), result};
    try {
      cfg.check_keys();
      switch (cfg.kind()) {
        case ExperimentKind::GrwMc: detail::run_grw_mc(ctx); break;
        case ExperimentKind::Lindblad: detail::run_lindblad(ctx); break;
        case ExperimentKind::Blp: detail::run_blp(ctx); break;
        case ExperimentKind::Divisibility: detail::run_divisibility(ctx); break;
        case ExperimentKind::BoundCampaign: detail::run_bound_campaign(ctx); break;
        case ExperimentKind::ExportFamily: detail::run_export_family(ctx); break;
      }
    } catch (const ConfigError& e) {
      result.exit_code = kExitConfigError;
      result.message = e.what();
    } catch (const std::exception& e) {
      result.exit_code = kExitNumericalFailure;
      result.message = std::string(to_string(cfg.kind())) + ": " + e.what();
    }
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  detail::write_manifest(opts.out_dir, cfg, seed, std::max<std::size_t>(1, opts.threads), result, wall);
  return result;
}

}  // namespace qmem

#include "atomarray/runner.hpp"

#include "atomarray/errors.hpp"
#include "atomarray/seeding.hpp"

#include <Eigen/Core>
#include <fmt/format.h>

#include <atomic>
#include <chrono>
#include <exception>
#include <fstream>
#include <mutex>
#include <optional>
#include <ostream>
#include <thread>

namespace atomarray {

namespace {

constexpr const char* kVersion = "1.0.0";

// One ensemble: fixed sigma pair, all detunings.
struct Ensemble {
  double sigma_xy = 0.0;
  double sigma_z = 0.0;
};

unsigned worker_count(const RunConfig& c, std::size_t units) {
  unsigned n = c.threads > 0 ? c.threads : std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(units, 1)));
}

AtomArray base_array(const RunConfig& c) {
  if (c.atoms() == 0) return empty_array(c.species);
  return build_square_lattice(c.n_x, c.n_y, c.spacing, c.species);
}

// Shared, read-only physics for one disorder realization.
struct Realization {
  AtomArray array;
  std::shared_ptr<const SiteModel> model;
  std::shared_ptr<const ModalBasis> basis;  // null unless modal
};

Realization realize(const RunConfig& c, const AtomArray& lattice, const Ensemble& e,
                    std::optional<std::uint64_t> disorder_seed, bool modal) {
  Realization r;
  r.array = disorder_seed ? apply_disorder(lattice, e.sigma_xy, e.sigma_z, *disorder_seed) : lattice;
  const CouplingKernel kernel = build_coupling(r.array);
  // Detuning is carried by the propagator; the model is detuning independent.
  r.model = std::make_shared<const SiteModel>(make_site_model(r.array, kernel, c.scheme_config(0.0)));
  if (modal) r.basis = make_modal_basis(r.model);
  return r;
}

struct UnitResult {
  Probabilities probabilities;
  std::size_t jumps = 0;
  std::size_t steps = 0;
};

struct EnsembleOutput {
  std::vector<SpectrumPoint> points;
  std::optional<TrajectoryResult> sample;  // point 0, trajectory 0
  SweepStats stats;
};

EnsembleOutput run_ensemble(const RunConfig& c, const Ensemble& e,
                            const std::vector<double>& detunings) {
  const bool disordered = e.sigma_xy > 0.0 || e.sigma_z > 0.0;
  const bool annealed = disordered && !c.frozen_disorder;
  const bool modal = c.propagator == PropagatorChoice::modal ||
                     (c.propagator == PropagatorChoice::automatic && !annealed && !c.include_doubles);
  if (modal && c.include_doubles)
    throw ConfigError("the modal propagator does not support the doubles sector");

  const AtomArray lattice = base_array(c);
  const std::size_t points = detunings.size();
  const std::size_t m_total = c.trajectories;
  // Without jumps and without per-trajectory disorder every trajectory is the same.
  const bool deterministic = c.jump_mode == JumpMode::no_jump && !annealed;
  const std::size_t m_run = deterministic ? 1 : m_total;

  std::optional<Realization> shared;
  if (!annealed) {
    std::optional<std::uint64_t> seed;
    if (disordered) seed = derive_seed(c.seed, {kDisorderStream, 0});
    shared = realize(c, lattice, e, seed, modal);
  }

  const double spacing = c.output_spacing_gamma / c.species.gamma_e;
  const std::vector<double> grid = time_grid(c.scheme_config(0.0).probe, spacing);

  TrajectoryOptions options;
  options.rtol = c.rtol;
  options.atol = c.atol;
  options.diagnostics = c.diagnostics;

  // Units are ordered trajectory-major so a worker handling an annealed
  // realization tends to reuse it for neighbouring detunings.
  const std::size_t units = points * m_run;
  std::vector<UnitResult> results(units);
  std::optional<TrajectoryResult> sample;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex error_mutex;
  std::exception_ptr error;
  std::size_t error_unit = 0;

  auto work = [&] {
    std::optional<Realization> local;
    std::size_t local_m = static_cast<std::size_t>(-1);
    for (;;) {
      const std::size_t u = next.fetch_add(1);
      if (u >= units || failed.load()) return;
      const std::size_t m = u / points;
      const std::size_t p = u % points;
      try {
        const Realization* real = shared ? &*shared : nullptr;
        if (!real) {
          if (local_m != m) {
            local = realize(c, lattice, e, derive_seed(c.seed, {kDisorderStream, m}), modal);
            local_m = m;
          }
          real = &*local;
        }
        std::unique_ptr<Propagator> prop;
        if (real->basis)
          prop = std::make_unique<ModalPropagator>(real->basis, detunings[p]);
        else
          prop = std::make_unique<DirectPropagator>(real->model, detunings[p]);

        TrajectoryState start =
            ground_state(real->model->layout, derive_seed(c.seed, {kJumpStream, p, m}), 0.0);
        TrajectoryResult r = evolve_trajectory(*prop, std::move(start), grid, c.jump_mode, options);
        UnitResult& out = results[p * m_run + m];
        out.probabilities = integrate_probabilities(r.record);
        out.jumps = r.jumps.size();
        out.steps = r.steps;
        if (p == 0 && m == 0 && c.dump_trajectory) sample = std::move(r);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error || u < error_unit) {
          error = std::current_exception();
          error_unit = u;
        }
        failed = true;
        return;
      }
    }
  };

  const unsigned workers = worker_count(c, units);
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  if (error) {
    const std::size_t p = error_unit % points;
    try {
      std::rethrow_exception(error);
    } catch (const IntegrationFailure& ex) {
      throw IntegrationFailure(fmt::format("detuning point {} ({:.6g} Gamma_e), trajectory {}: {}", p,
                                           detunings[p] / c.species.gamma_e, error_unit / points,
                                           ex.what()));
    } catch (const std::exception& ex) {
      throw std::runtime_error(fmt::format("detuning point {} ({:.6g} Gamma_e), trajectory {}: {}", p,
                                           detunings[p] / c.species.gamma_e, error_unit / points,
                                           ex.what()));
    }
  }

  EnsembleOutput out;
  out.stats.propagator = modal ? "modal" : "direct";
  std::vector<Probabilities> samples(m_total);
  for (std::size_t p = 0; p < points; ++p) {
    std::size_t jumps = 0;
    for (std::size_t m = 0; m < m_total; ++m) {
      const UnitResult& r = results[p * m_run + (deterministic ? 0 : m)];
      samples[m] = r.probabilities;
      jumps += r.jumps;
    }
    for (std::size_t m = 0; m < m_run; ++m) out.stats.steps += results[p * m_run + m].steps;
    SpectrumPoint pt = reduce_ensemble(std::span<const Probabilities>(samples), detunings[p]);
    pt.mean_jumps = static_cast<double>(jumps) / static_cast<double>(m_total);
    out.points.push_back(pt);
    out.stats.jumps += jumps;
  }
  out.stats.trajectories_run = units;
  out.sample = std::move(sample);
  return out;
}

RunMetadata metadata(const RunConfig& c) {
  RunMetadata m;
  m.atoms = c.atoms();
  m.spacing = c.spacing;
  m.sigma_xy = c.sigma_xy;
  m.sigma_z = c.sigma_z;
  m.scheme = to_string(c.scheme);
  m.trajectories = c.trajectories;
  m.seed = c.seed;
  m.config_hash = config_hash(c);
  m.jump_mode = c.jump_mode == JumpMode::stochastic ? "stochastic" : "no-jump";
  m.gamma_e = c.species.gamma_e;
  return m;
}

void merge(SweepStats* into, const SweepStats& from) {
  if (!into) return;
  into->trajectories_run += from.trajectories_run;
  into->jumps += from.jumps;
  into->steps += from.steps;
  into->propagator = from.propagator;
}

void write_trajectory_dump(const std::filesystem::path& dir, const TrajectoryResult& r) {
  std::ofstream out(dir / "trajectory.csv");
  out << "time_s,norm2,flux_T,flux_R,excited\n";
  const FieldRecord& rec = r.record;
  for (std::size_t k = 0; k < rec.size(); ++k) {
    out << fmt::format("{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}\n", rec.times[k], rec.norm2[k],
                       std::norm(rec.alpha_T[k]), std::norm(rec.alpha_R[k]), rec.excited[k]);
  }
  std::ofstream jumps(dir / "jumps.csv");
  jumps << "time_s,channel\n";
  for (const auto& j : r.jumps) jumps << fmt::format("{:.12e},{}\n", j.time, j.channel);
}

}  // namespace

SpectrumResult sweep_detuning(const RunConfig& config, const std::vector<double>& detunings,
                              SweepStats* stats) {
  config.validate();
  if (detunings.empty()) throw ConfigError("sweep_detuning: empty detuning list");
  EnsembleOutput e = run_ensemble(config, {config.sigma_xy, config.sigma_z}, detunings);
  merge(stats, e.stats);
  return {std::move(e.points), metadata(config)};
}

DisorderTable sweep_disorder(const RunConfig& config, const std::vector<double>& sigmas,
                             DisorderAxis axis, SweepStats* stats) {
  RunConfig c = config;
  c.sweep = SweepKind::disorder;
  c.sigmas = sigmas;
  c.axis = axis;
  c.validate();
  DisorderTable table;
  table.axis = axis;
  table.detuning = c.detunings_gamma.front() * c.species.gamma_e;
  table.meta = metadata(c);
  for (double s : sigmas) {
    Ensemble e;
    switch (axis) {
      case DisorderAxis::xy: e = {s, c.sigma_base}; break;
      case DisorderAxis::z: e = {c.sigma_base, s}; break;
      case DisorderAxis::xyz: e = {s, s}; break;
    }
    EnsembleOutput out = run_ensemble(c, e, {table.detuning});
    merge(stats, out.stats);
    table.rows.push_back({s, out.points.front()});
  }
  return table;
}

void write_disorder_csv(std::ostream& out, const DisorderTable& table) {
  out << "sigma_m,p_T,err_T,p_R,err_R,p_S,err_S\n";
  for (const auto& r : table.rows) {
    const SpectrumPoint& p = r.point;
    out << fmt::format("{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}\n", r.sigma, p.p_T,
                       p.err_T, p.p_R, p.err_R, p.p_S, p.err_S);
  }
}

nlohmann::json disorder_to_json(const DisorderTable& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : table.rows) {
    const SpectrumPoint& p = r.point;
    rows.push_back({{"sigma_m", r.sigma},
                    {"p_T", p.p_T},
                    {"err_T", p.err_T},
                    {"p_R", p.p_R},
                    {"err_R", p.err_R},
                    {"p_S", p.p_S},
                    {"err_S", p.err_S},
                    {"trajectories", p.trajectories},
                    {"mean_jumps", p.mean_jumps}});
  }
  return {{"metadata", metadata_to_json(table.meta)},
          {"axis", to_string(table.axis)},
          {"detuning_rad_s", table.detuning},
          {"rows", std::move(rows)}};
}

void run(const RunConfig& config, std::ostream& log) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const std::vector<std::string> warnings = bandwidth_warnings(config);
  for (const auto& w : warnings) log << "warning: " << w << '\n';

  const std::filesystem::path dir(config.out_dir);
  std::filesystem::create_directories(dir);
  const bool csv = config.format != OutputFormat::json;
  const bool json = config.format != OutputFormat::csv;

  if (config.dump_positions || config.dump_channels) {
    AtomArray array = base_array(config);
    if (config.disordered())
      array = apply_disorder(array, config.sigma_xy, config.sigma_z,
                             derive_seed(config.seed, {kDisorderStream, 0}));
    if (config.dump_positions) {
      std::ofstream out(dir / "positions.csv");
      write_positions_csv(out, array);
    }
    if (config.dump_channels) {
      std::ofstream out(dir / "channels.csv");
      write_channels_csv(out, build_coupling(array));
    }
  }

  SweepStats stats;
  if (config.sweep == SweepKind::detuning) {
    std::vector<double> detunings;
    for (double d : config.detunings_gamma) detunings.push_back(d * config.species.gamma_e);
    const EnsembleOutput e = run_ensemble(config, {config.sigma_xy, config.sigma_z}, detunings);
    stats = e.stats;
    const SpectrumResult result{e.points, metadata(config)};
    if (csv) {
      std::ofstream out(dir / "spectrum.csv");
      write_spectrum_csv(out, result);
    }
    if (json) {
      std::ofstream out(dir / "spectrum.json");
      out << spectrum_to_json(result).dump(2) << '\n';
    }
    if (e.sample) write_trajectory_dump(dir, *e.sample);
  } else {
    const DisorderTable table = sweep_disorder(config, config.sigmas, config.axis, &stats);
    if (csv) {
      std::ofstream out(dir / "disorder.csv");
      write_disorder_csv(out, table);
    }
    if (json) {
      std::ofstream out(dir / "disorder.json");
      out << disorder_to_json(table).dump(2) << '\n';
    }
  }

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  nlohmann::json meta = {
      {"config", config_to_json(config)},
      {"config_hash", config_hash(config)},
      {"wall_time_s", wall},
      {"warnings", warnings},
      {"propagator", stats.propagator},
      {"trajectories_run", stats.trajectories_run},
      {"total_jumps", stats.jumps},
      {"total_steps", stats.steps},
      {"versions",
       {{"atomarray", kVersion},
        {"eigen", fmt::format("{}.{}.{}", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION, EIGEN_MINOR_VERSION)},
        {"fmt", FMT_VERSION},
        {"compiler", __VERSION__}}},
  };
  std::ofstream out(dir / "run-meta.json");
  out << meta.dump(2) << '\n';
}

}  // namespace atomarray

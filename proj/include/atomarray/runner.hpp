#pragma once

#include "atomarray/dynamics.hpp"
#include "atomarray/geometry.hpp"
#include "atomarray/observables.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace atomarray {

enum class SchemeKind { two_level, scheme_a, scheme_b };
enum class PropagatorChoice { automatic, direct, modal };
enum class SweepKind { detuning, disorder };
enum class DisorderAxis { xy, z, xyz };
enum class OutputFormat { csv, json, both };

// All quantities SI (m, s, rad/s). Defaults reproduce the two-level ordered
// array: 16 x 16 Rb atoms at s = 532 nm, tau = 2 us, n = 1, w0 = 3 lambda_e.
struct RunConfig {
  std::string preset;  // informational

  // [array]; n_x or n_y = 0 runs the empty reference path
  int n_x = 16;
  int n_y = 16;
  double spacing = 532e-9;
  double sigma_xy = 0.0;
  double sigma_z = 0.0;
  bool frozen_disorder = false;

  // [species]
  AtomSpecies species = rubidium87();

  // [probe]
  double duration = 2e-6;
  double mean_photons = 1.0;
  double waist = 3.0 * 780e-9;
  PulseShape shape = PulseShape::gaussian;
  double window_tau = 10.0;               // simulated window in units of tau, pulse centred
  std::vector<double> detunings_gamma{0.172};

  // [scheme]
  SchemeKind scheme = SchemeKind::two_level;
  bool include_doubles = false;
  double drive_rabi = 0.0;
  double drive_detuning = 0.0;
  Vec3 drive_wavevector = Vec3::Zero();
  double cavity_strength = 0.0;
  double cavity_detuning = 0.0;
  int photon_number = 0;
  double gamma_s = 0.0;
  double gamma_r = 0.0;

  // [mc]
  std::size_t trajectories = 200;
  std::uint64_t seed = 1;
  JumpMode jump_mode = JumpMode::stochastic;
  unsigned threads = 0;                   // 0: hardware concurrency
  double rtol = 1e-6;
  double atol = 1e-9;
  double output_spacing_gamma = 0.025;    // output grid step in units of 1/Gamma_e
  PropagatorChoice propagator = PropagatorChoice::automatic;
  bool diagnostics = false;               // record P_1e, P_2e

  // [sweep]
  SweepKind sweep = SweepKind::detuning;
  DisorderAxis axis = DisorderAxis::xyz;
  std::vector<double> sigmas;             // m
  double sigma_base = 0.0;                // the held coordinate for xy and z sweeps

  // [output]
  std::string out_dir = "out";
  OutputFormat format = OutputFormat::both;
  bool dump_positions = false;
  bool dump_channels = false;
  bool dump_trajectory = false;

  bool disordered() const { return sigma_xy > 0.0 || sigma_z > 0.0; }
  std::size_t atoms() const;
  SchemeConfig scheme_config(double detuning) const;
  // Throws ConfigError on any out-of-range field.
  void validate() const;
};

std::vector<std::string> preset_names();
// fig1, fig3-empty, fig3-photon, fig4-empty, fig4-photon. Throws ConfigError
// naming the known presets otherwise.
RunConfig preset(std::string_view name);

// "start:stop:count" (inclusive, evenly spaced) or "v1,v2,...".
std::vector<double> parse_list(std::string_view text);

// INI document applied on top of `base`. Unknown sections or keys, malformed
// values and conflicting unit variants are ConfigErrors.
RunConfig parse_config(std::istream& in, const RunConfig& base = {});
RunConfig load_config(const std::filesystem::path& path, const RunConfig& base = {});

nlohmann::json config_to_json(const RunConfig& config);
// FNV-1a 64 of the physics-relevant part of the canonical JSON, as 16 hex digits.
std::string config_hash(const RunConfig& config);

// Pulse-bandwidth checks; one message per violated condition.
std::vector<std::string> bandwidth_warnings(const RunConfig& config);

struct SweepStats {
  std::size_t trajectories_run = 0;
  std::size_t jumps = 0;
  std::size_t steps = 0;
  std::string propagator;
};

// Runs config.trajectories per detuning (rad/s). Disorder, when present, is
// resampled per trajectory unless frozen; realization m is shared by all
// detunings. Errors are rethrown with the failing point index.
SpectrumResult sweep_detuning(const RunConfig& config, const std::vector<double>& detunings,
                              SweepStats* stats = nullptr);

struct DisorderRow {
  double sigma = 0.0;
  SpectrumPoint point;
};

struct DisorderTable {
  DisorderAxis axis = DisorderAxis::xyz;
  double detuning = 0.0;
  std::vector<DisorderRow> rows;
  RunMetadata meta;
};

// One row per sigma at the single detuning config.detunings_gamma[0].
DisorderTable sweep_disorder(const RunConfig& config, const std::vector<double>& sigmas,
                             DisorderAxis axis, SweepStats* stats = nullptr);

// sigma_m,p_T,err_T,p_R,err_R,p_S,err_S
void write_disorder_csv(std::ostream& out, const DisorderTable& table);
nlohmann::json disorder_to_json(const DisorderTable& table);

// Full CLI run: sweep, then write spectrum/disorder files and run-meta.json to
// config.out_dir. Warnings go to `log`.
void run(const RunConfig& config, std::ostream& log);

std::string to_string(SchemeKind kind);
std::string to_string(DisorderAxis axis);

}  // namespace atomarray

#pragma once

#include "atomarray/state.hpp"

#include <Eigen/Core>
#include <json.hpp>

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace atomarray {

// Per-trajectory time series on the shared output grid. Fluxes are in photons/s.
struct FieldRecord {
  std::vector<double> times;
  std::vector<double> alpha_in;                   // alpha_p(t), real envelope
  std::vector<std::complex<double>> alpha_T;
  std::vector<std::complex<double>> alpha_R;
  std::vector<double> norm2;                      // squared norm of the unnormalized state
  std::vector<double> excited;                    // 1 - |a|^2 / norm2
  std::vector<double> p1e;                        // only with diagnostics
  std::vector<double> p2e;                        // only with diagnostics and doubles

  std::size_t size() const { return times.size(); }
  void reserve(std::size_t n);
};

// <sigma_ge^j> = conj(a) b_j + sum_{i != j} conj(b_i) b2_ij on the normalized state.
// The state is normalized by its recomputed amplitude norm.
Eigen::VectorXcd polarization(const TrajectoryState& state);

struct FieldAmplitudes {
  std::complex<double> transmitted;
  std::complex<double> reflected;
};

// alpha_T = alpha_p + i C sum_j conj(f_j) sigma_j,  alpha_R = i C sum_j conj(r_j) sigma_j
// with f = g(r_j) the forward and r = g*(r_j) the backward mode overlaps.
FieldAmplitudes project_fields(const Eigen::VectorXcd& polarizations,
                               const Eigen::VectorXcd& forward,
                               const Eigen::VectorXcd& backward, double alpha_p,
                               double rabi_per_flux);

// Same, from the already contracted sums sum_j conj(f_j) sigma_j and sum_j conj(r_j) sigma_j.
FieldAmplitudes fields_from_sums(std::complex<double> forward_sum,
                                 std::complex<double> backward_sum, double alpha_p,
                                 double rabi_per_flux);

struct Probabilities {
  double p_T = 0.0;
  double p_R = 0.0;
  double p_S = 0.0;
  bool window_short = false;
};

// Trapezoid integrals of |alpha_T|^2 and |alpha_R|^2, divided by the trapezoid
// integral of |alpha_in|^2 on the same grid (which equals mean_photons up to the
// truncated tails). p_S = 1 - p_T - p_R. window_short is set when the outgoing
// flux at either end of the record exceeds 1e-4 of the peak incident flux.
Probabilities integrate_probabilities(const FieldRecord& record);

struct SpectrumPoint {
  double detuning = 0.0;  // rad/s
  double p_T = 0.0, err_T = 0.0;
  double p_R = 0.0, err_R = 0.0;
  double p_S = 0.0, err_S = 0.0;
  std::size_t trajectories = 0;
  double mean_jumps = 0.0;
  std::size_t window_short = 0;  // trajectories whose record was flagged
};

// Sample means and standard errors (sample deviation / sqrt(M)) in index order.
// p_S of the point is the complement of the mean p_T and p_R.
// Throws std::invalid_argument when fewer than two samples are given.
SpectrumPoint reduce_ensemble(std::span<const Probabilities> samples, double detuning);
SpectrumPoint reduce_ensemble(std::span<const FieldRecord> records, double detuning);

struct RunMetadata {
  std::size_t atoms = 0;
  double spacing = 0.0;
  double sigma_xy = 0.0;
  double sigma_z = 0.0;
  std::string scheme;
  std::size_t trajectories = 0;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string jump_mode;
  double gamma_e = 0.0;
};

struct SpectrumResult {
  std::vector<SpectrumPoint> points;
  RunMetadata meta;
};

// detuning_gamma,p_T,err_T,p_R,err_R,p_S,err_S
void write_spectrum_csv(std::ostream& out, const SpectrumResult& result);
nlohmann::json spectrum_to_json(const SpectrumResult& result);
nlohmann::json metadata_to_json(const RunMetadata& meta);

}  // namespace atomarray

#include "atomarray/observables.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace atomarray {

using cd = std::complex<double>;
constexpr cd kI{0.0, 1.0};

void FieldRecord::reserve(std::size_t n) {
  times.reserve(n);
  alpha_in.reserve(n);
  alpha_T.reserve(n);
  alpha_R.reserve(n);
  norm2.reserve(n);
  excited.reserve(n);
}

Eigen::VectorXcd polarization(const TrajectoryState& state) {
  const StateLayout& L = state.layout;
  const Eigen::Index n = L.atoms;
  const double norm2 = state.amplitudes.squaredNorm();
  if (!(norm2 > 0.0)) throw std::invalid_argument("polarization: zero state");

  Eigen::VectorXcd sigma = std::conj(state.a()) * state.b();
  if (L.doubles) {
    const auto b = state.b();
    const auto b2 = state.b2();
    for (Eigen::Index i = 0, k = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j, ++k) {
        sigma[j] += std::conj(b[i]) * b2[k];
        sigma[i] += std::conj(b[j]) * b2[k];
      }
    }
  }
  return sigma / norm2;
}

FieldAmplitudes fields_from_sums(cd forward_sum, cd backward_sum, double alpha_p,
                                 double rabi_per_flux) {
  return {alpha_p + kI * rabi_per_flux * forward_sum, kI * rabi_per_flux * backward_sum};
}

FieldAmplitudes project_fields(const Eigen::VectorXcd& polarizations,
                               const Eigen::VectorXcd& forward, const Eigen::VectorXcd& backward,
                               double alpha_p, double rabi_per_flux) {
  if (forward.size() != polarizations.size() || backward.size() != polarizations.size())
    throw std::invalid_argument("project_fields: size mismatch");
  return fields_from_sums(forward.dot(polarizations), backward.dot(polarizations), alpha_p,
                          rabi_per_flux);
}

Probabilities integrate_probabilities(const FieldRecord& record) {
  const std::size_t n = record.size();
  if (n < 2) throw std::invalid_argument("integrate_probabilities: need at least two samples");

  double in = 0.0, tr = 0.0, re = 0.0, peak = 0.0;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double h = 0.5 * (record.times[k + 1] - record.times[k]);
    in += h * (record.alpha_in[k] * record.alpha_in[k] +
               record.alpha_in[k + 1] * record.alpha_in[k + 1]);
    tr += h * (std::norm(record.alpha_T[k]) + std::norm(record.alpha_T[k + 1]));
    re += h * (std::norm(record.alpha_R[k]) + std::norm(record.alpha_R[k + 1]));
  }
  for (double a : record.alpha_in) peak = std::max(peak, a * a);
  if (!(in > 0.0)) throw std::invalid_argument("integrate_probabilities: no incident flux");

  Probabilities p;
  p.p_T = tr / in;
  p.p_R = re / in;
  p.p_S = 1.0 - p.p_T - p.p_R;
  const auto outgoing = [&](std::size_t k) {
    return std::norm(record.alpha_T[k]) + std::norm(record.alpha_R[k]);
  };
  p.window_short = std::max(outgoing(0), outgoing(n - 1)) > 1e-4 * peak;
  return p;
}

namespace {

struct MeanError {
  double mean = 0.0;
  double error = 0.0;
};

template <class F>
MeanError mean_error(std::span<const Probabilities> s, F value) {
  const auto m = static_cast<double>(s.size());
  double sum = 0.0;
  for (const auto& p : s) sum += value(p);
  const double mean = sum / m;
  double ss = 0.0;
  for (const auto& p : s) {
    const double d = value(p) - mean;
    ss += d * d;
  }
  return {mean, std::sqrt(ss / (m - 1.0) / m)};
}

}  // namespace

SpectrumPoint reduce_ensemble(std::span<const Probabilities> samples, double detuning) {
  if (samples.size() < 2)
    throw std::invalid_argument("reduce_ensemble: need at least two trajectories");
  SpectrumPoint pt;
  pt.detuning = detuning;
  pt.trajectories = samples.size();
  const MeanError t = mean_error(samples, [](const Probabilities& p) { return p.p_T; });
  const MeanError r = mean_error(samples, [](const Probabilities& p) { return p.p_R; });
  const MeanError s =
      mean_error(samples, [](const Probabilities& p) { return 1.0 - p.p_T - p.p_R; });
  pt.p_T = t.mean;
  pt.err_T = t.error;
  pt.p_R = r.mean;
  pt.err_R = r.error;
  pt.p_S = 1.0 - pt.p_T - pt.p_R;
  pt.err_S = s.error;
  pt.window_short = static_cast<std::size_t>(
      std::count_if(samples.begin(), samples.end(), [](const Probabilities& p) {
        return p.window_short;
      }));
  return pt;
}

SpectrumPoint reduce_ensemble(std::span<const FieldRecord> records, double detuning) {
  std::vector<Probabilities> samples;
  samples.reserve(records.size());
  for (const auto& r : records) samples.push_back(integrate_probabilities(r));
  return reduce_ensemble(std::span<const Probabilities>(samples), detuning);
}

void write_spectrum_csv(std::ostream& out, const SpectrumResult& result) {
  out << "detuning_gamma,p_T,err_T,p_R,err_R,p_S,err_S\n";
  const double g = result.meta.gamma_e;
  for (const auto& p : result.points) {
    out << fmt::format("{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}\n",
                       g > 0.0 ? p.detuning / g : p.detuning, p.p_T, p.err_T, p.p_R, p.err_R,
                       p.p_S, p.err_S);
  }
}

nlohmann::json metadata_to_json(const RunMetadata& meta) {
  return {
      {"atoms", meta.atoms},
      {"spacing_m", meta.spacing},
      {"sigma_xy_m", meta.sigma_xy},
      {"sigma_z_m", meta.sigma_z},
      {"scheme", meta.scheme},
      {"trajectories", meta.trajectories},
      {"seed", meta.seed},
      {"config_hash", meta.config_hash},
      {"jump_mode", meta.jump_mode},
      {"gamma_e_rad_s", meta.gamma_e},
  };
}

nlohmann::json spectrum_to_json(const SpectrumResult& result) {
  nlohmann::json points = nlohmann::json::array();
  const double g = result.meta.gamma_e;
  for (const auto& p : result.points) {
    points.push_back({
        {"detuning_rad_s", p.detuning},
        {"detuning_gamma", g > 0.0 ? p.detuning / g : p.detuning},
        {"p_T", p.p_T},
        {"err_T", p.err_T},
        {"p_R", p.p_R},
        {"err_R", p.err_R},
        {"p_S", p.p_S},
        {"err_S", p.err_S},
        {"trajectories", p.trajectories},
        {"mean_jumps", p.mean_jumps},
        {"window_short", p.window_short},
    });
  }
  return {{"metadata", metadata_to_json(result.meta)}, {"points", std::move(points)}};
}

}  // namespace atomarray

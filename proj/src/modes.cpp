#include "atomarray/modes.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace atomarray {

using cd = std::complex<double>;
constexpr double kPi = std::numbers::pi;

double BeamGeometry::cross_section() const { return 0.5 * kPi * waist * waist; }

double CavityCoupling::rabi() const {
  return strength * std::sqrt(static_cast<double>(photon_number));
}

ProbePulse gaussian_pulse(double duration, double mean_photons, double detuning) {
  ProbePulse p;
  p.duration = duration;
  p.mean_photons = mean_photons;
  p.detuning = detuning;
  p.center = 5.0 * duration;
  p.shape = PulseShape::gaussian;
  return p;
}

cd gaussian_mode(const Vec3& r, const BeamGeometry& beam) {
  const double zeta = beam.rayleigh_length();
  const cd q_conj{r.z(), -zeta};
  const double rho2 = r.x() * r.x() + r.y() * r.y();
  const cd i{0.0, 1.0};
  return zeta / q_conj * std::exp(i * beam.wavenumber * (r.z() + rho2 / (2.0 * q_conj)));
}

double pulse_envelope(double t, const ProbePulse& pulse) {
  if (!(pulse.duration > 0.0))
    throw std::invalid_argument("pulse_envelope: duration must be positive");
  switch (pulse.shape) {
    case PulseShape::continuous:
      return std::sqrt(pulse.mean_photons / pulse.duration);
    case PulseShape::gaussian:
    default: {
      const double u = (t - pulse.center) / (2.0 * pulse.duration);
      return std::sqrt(pulse.mean_photons / (std::sqrt(2.0 * kPi) * pulse.duration)) *
             std::exp(-u * u);
    }
  }
}

double flux_to_rabi(const AtomSpecies& species, const BeamGeometry& beam) {
  const double lam2 = species.lambda_e * species.lambda_e;
  return std::sqrt(3.0 * lam2 * species.gamma_e / (8.0 * kPi * beam.cross_section()));
}

cd probe_rabi(const Vec3& r, double t, const ProbePulse& pulse, const BeamGeometry& beam,
              const AtomSpecies& species) {
  return flux_to_rabi(species, beam) * gaussian_mode(r, beam) * pulse_envelope(t, pulse);
}

cd probe_rabi_backward(const Vec3& r, double t, const ProbePulse& pulse,
                       const BeamGeometry& beam, const AtomSpecies& species) {
  return flux_to_rabi(species, beam) * std::conj(gaussian_mode(r, beam)) *
         pulse_envelope(t, pulse);
}

Eigen::VectorXcd mode_overlaps(const AtomArray& array, const BeamGeometry& beam) {
  Eigen::VectorXcd g(static_cast<Eigen::Index>(array.size()));
  for (std::size_t j = 0; j < array.size(); ++j)
    g[static_cast<Eigen::Index>(j)] = gaussian_mode(array.positions[j], beam);
  return g;
}

Eigen::VectorXcd drive_phases(const AtomArray& array, const Vec3& wavevector) {
  Eigen::VectorXcd phases(static_cast<Eigen::Index>(array.size()));
  for (std::size_t j = 0; j < array.size(); ++j)
    phases[static_cast<Eigen::Index>(j)] = std::polar(1.0, wavevector.dot(array.positions[j]));
  return phases;
}

std::vector<double> time_grid(const ProbePulse& pulse, double spacing) {
  if (!(spacing > 0.0)) throw std::invalid_argument("time_grid: spacing must be positive");
  const double end = pulse.window();
  const auto steps = static_cast<std::size_t>(std::ceil(end / spacing - 1e-9));
  std::vector<double> grid(steps + 1);
  for (std::size_t k = 0; k < steps; ++k) grid[k] = end * static_cast<double>(k) / static_cast<double>(steps);
  grid[steps] = end;
  return grid;
}

}  // namespace atomarray

#pragma once

#include "atomarray/geometry.hpp"

#include <Eigen/Core>

#include <complex>
#include <vector>

namespace atomarray {

// Paraxial Gaussian beam focused at the origin, propagating along +z.
struct BeamGeometry {
  double waist = 0.0;       // w0, m
  double wavenumber = 0.0;  // k, rad/m

  double rayleigh_length() const { return 0.5 * wavenumber * waist * waist; }
  // A = pi w0^2 / 2
  double cross_section() const;
};

enum class PulseShape { gaussian, continuous };

// Probe photon flux |alpha_p(t)|^2 in photons/s.
//   gaussian:   alpha_p = sqrt(n) (sqrt(2 pi) tau)^(-1/2) exp(-((t - t0)/(2 tau))^2)
//   continuous: alpha_p = sqrt(n / tau), i.e. n photons per duration tau.
struct ProbePulse {
  double duration = 2e-6;   // tau, s
  double mean_photons = 1.0;
  double detuning = 0.0;    // Delta_p = omega_p - omega_e, rad/s
  double center = 10e-6;    // t0, s
  PulseShape shape = PulseShape::gaussian;

  // End of the default simulation window [0, 2 t0].
  double window() const { return 2.0 * center; }
};

// Gaussian pulse centred at 5 tau, so the window [0, 10 tau] leaves < 1e-6 of
// the photon number outside.
ProbePulse gaussian_pulse(double duration, double mean_photons, double detuning);

struct DriveField {
  std::complex<double> rabi{0.0, 0.0};  // Omega_d, rad/s
  double detuning = 0.0;                // Delta_d, rad/s
  Vec3 wavevector = Vec3::Zero();       // k_d, rad/m
};

struct CavityCoupling {
  double strength = 0.0;  // eta, rad/s
  double detuning = 0.0;  // Delta_c, rad/s
  int photon_number = 0;  // n_c

  // Omega_c = eta sqrt(n_c)
  double rabi() const;
};

// Dimensionless forward mode g(r) = (zeta/q*(z)) exp[i k (z + (x^2+y^2)/(2 q*(z)))],
// q(z) = z + i zeta. |g| = 1 on axis at the focus.
std::complex<double> gaussian_mode(const Vec3& r, const BeamGeometry& beam);

// alpha_p(t) in s^(-1/2). Throws std::invalid_argument for tau <= 0.
double pulse_envelope(double t, const ProbePulse& pulse);

// Flux-to-Rabi constant C with C^2 = 3 lambda_e^2 Gamma_e / (8 pi A): the Rabi
// frequency at r is C g(r) alpha_p(t), and an atomic coherence sigma radiates
// the flux amplitude i C g*(r) sigma into the forward mode.
double flux_to_rabi(const AtomSpecies& species, const BeamGeometry& beam);

// Omega_p(r, t) for the forward mode and its backward partner (g -> g*).
std::complex<double> probe_rabi(const Vec3& r, double t, const ProbePulse& pulse,
                                const BeamGeometry& beam, const AtomSpecies& species);
std::complex<double> probe_rabi_backward(const Vec3& r, double t, const ProbePulse& pulse,
                                         const BeamGeometry& beam,
                                         const AtomSpecies& species);

// {g(r_j)} for every atom.
Eigen::VectorXcd mode_overlaps(const AtomArray& array, const BeamGeometry& beam);

// e^{i k_d . r_j} for every atom.
Eigen::VectorXcd drive_phases(const AtomArray& array, const Vec3& wavevector);

// Uniform output grid over [0, pulse.window()] with the given spacing; the last
// point is exactly the window end.
std::vector<double> time_grid(const ProbePulse& pulse, double spacing);

}  // namespace atomarray

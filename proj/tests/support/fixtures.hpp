#pragma once

#include "atomarray/dynamics.hpp"

#include <memory>
#include <numbers>

namespace atomarray::testing {

inline constexpr double kPi = std::numbers::pi;

inline BeamGeometry beam_for(const AtomSpecies& species, double waist_lambdas = 3.0) {
  return {waist_lambdas * species.lambda_e, species.wavenumber()};
}

inline ProbePulse continuous_probe(double flux, double detuning, double window) {
  ProbePulse p;
  p.shape = PulseShape::continuous;
  p.duration = 1e-6;
  p.mean_photons = flux * p.duration;
  p.detuning = detuning;
  p.center = 0.5 * window;
  return p;
}

inline SchemeConfig two_level_scheme(const AtomArray& array, const ProbePulse& probe,
                                     bool doubles = false) {
  return {TwoLevel{doubles}, probe, beam_for(array.species)};
}

inline std::shared_ptr<const SiteModel> model_for(const AtomArray& array,
                                                  const SchemeConfig& scheme) {
  return std::make_shared<const SiteModel>(make_site_model(array, build_coupling(array), scheme));
}

// Uniform grid over [0, end] with `count` intervals.
inline std::vector<double> uniform_grid(double end, std::size_t count) {
  std::vector<double> g(count + 1);
  for (std::size_t k = 0; k <= count; ++k)
    g[k] = end * static_cast<double>(k) / static_cast<double>(count);
  return g;
}

}  // namespace atomarray::testing

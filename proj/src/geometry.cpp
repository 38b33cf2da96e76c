#include "atomarray/geometry.hpp"

#include <fmt/format.h>

#include <cmath>
#include <ostream>
#include <random>
#include <stdexcept>

namespace atomarray {

CVec3 circular_dipole() {
  const double h = 1.0 / std::sqrt(2.0);
  return CVec3(std::complex<double>(h, 0.0), std::complex<double>(0.0, h),
               std::complex<double>(0.0, 0.0));
}

void AtomSpecies::validate() const {
  if (!(lambda_e > 0.0) || !std::isfinite(lambda_e))
    throw std::invalid_argument("species: lambda_e must be positive");
  if (!(gamma_e > 0.0) || !std::isfinite(gamma_e))
    throw std::invalid_argument("species: gamma_e must be positive");
  if (std::abs(dipole.norm() - 1.0) > 1e-12)
    throw std::invalid_argument("species: dipole orientation must have unit norm");
}

AtomSpecies rubidium87() { return AtomSpecies{}; }

AtomArray build_square_lattice(int n_x, int n_y, double spacing,
                               const AtomSpecies& species) {
  if (n_x < 1 || n_y < 1)
    throw std::invalid_argument("build_square_lattice: n_x and n_y must be >= 1");
  if (!(spacing > 0.0) || !std::isfinite(spacing))
    throw std::invalid_argument("build_square_lattice: spacing must be positive");
  species.validate();

  AtomArray array;
  array.species = species;
  array.lattice_spacing = spacing;
  array.n_x = n_x;
  array.n_y = n_y;
  array.positions.reserve(static_cast<std::size_t>(n_x) * n_y);
  const double x0 = 0.5 * (n_x - 1);
  const double y0 = 0.5 * (n_y - 1);
  for (int ix = 0; ix < n_x; ++ix) {
    for (int iy = 0; iy < n_y; ++iy) {
      array.positions.emplace_back((ix - x0) * spacing, (iy - y0) * spacing, 0.0);
    }
  }
  array.equilibrium = array.positions;
  return array;
}

AtomArray empty_array(const AtomSpecies& species) {
  species.validate();
  AtomArray array;
  array.species = species;
  return array;
}

AtomArray apply_disorder(const AtomArray& array, double sigma_xy, double sigma_z,
                         std::uint64_t seed) {
  if (!(sigma_xy >= 0.0) || !(sigma_z >= 0.0))
    throw std::invalid_argument("apply_disorder: standard deviations must be >= 0");

  AtomArray out = array;
  out.disorder = DisorderSpec{sigma_xy, sigma_z, seed};
  out.positions = out.equilibrium;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  // Draw all three coordinates unconditionally so the x/y stream does not
  // depend on whether sigma_z is zero.
  for (Vec3& r : out.positions) {
    const double dx = unit(rng);
    const double dy = unit(rng);
    const double dz = unit(rng);
    r.x() += sigma_xy * dx;
    r.y() += sigma_xy * dy;
    if (sigma_z > 0.0) r.z() += sigma_z * dz;
  }
  return out;
}

void write_positions_csv(std::ostream& out, const AtomArray& array) {
  out << "x,y,z\n";
  for (const Vec3& r : array.positions) {
    out << fmt::format("{:.9e},{:.9e},{:.9e}\n", r.x(), r.y(), r.z());
  }
}

}  // namespace atomarray

#pragma once

#include <Eigen/Core>

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <numbers>
#include <vector>

namespace atomarray {

using Vec3 = Eigen::Vector3d;
using CVec3 = Eigen::Vector3cd;

// sigma_+ transition dipole (x + i y)/sqrt(2).
CVec3 circular_dipole();

// Two-level optical transition shared by every atom of the array.
struct AtomSpecies {
  double lambda_e = 780e-9;                                // m
  double gamma_e = 2.0 * std::numbers::pi * 6.0e6;        // rad/s
  CVec3 dipole = circular_dipole();                        // unit norm

  double wavenumber() const { return 2.0 * std::numbers::pi / lambda_e; }

  // Throws std::invalid_argument on non-positive constants or a non-unit dipole.
  void validate() const;
};

// 87Rb D2 line, sigma_+ polarized.
AtomSpecies rubidium87();

struct DisorderSpec {
  double sigma_xy = 0.0;  // m, shared by x and y
  double sigma_z = 0.0;   // m
  std::uint64_t seed = 0;
};

// Immutable once built; shared read-only between trajectory workers.
struct AtomArray {
  AtomSpecies species;
  std::vector<Vec3> positions;    // m
  std::vector<Vec3> equilibrium;  // lattice sites before disorder
  double lattice_spacing = 0.0;
  int n_x = 0;
  int n_y = 0;
  DisorderSpec disorder;

  std::size_t size() const { return positions.size(); }
  bool empty() const { return positions.empty(); }
};

// Centered n_x by n_y square grid in the z = 0 plane.
AtomArray build_square_lattice(int n_x, int n_y, double spacing,
                               const AtomSpecies& species);

// Array with no atoms; used for the reference (empty-path) run.
AtomArray empty_array(const AtomSpecies& species);

// Quenched Gaussian displacement of every site: x and y draw from N(0, sigma_xy),
// z from N(0, sigma_z). Displacements are applied to the equilibrium sites, so
// re-applying to an already disordered array replaces rather than compounds.
AtomArray apply_disorder(const AtomArray& array, double sigma_xy, double sigma_z,
                         std::uint64_t seed);

// x,y,z in meters, one row per atom.
void write_positions_csv(std::ostream& out, const AtomArray& array);

}  // namespace atomarray

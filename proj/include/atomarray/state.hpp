#pragma once

#include <Eigen/Core>

#include <complex>
#include <cstdint>
#include <random>

namespace atomarray {

// Packing of the site-basis amplitude vector [a | b | b2 | c | d].
// b2 holds the pairs i < j in row-major order.
struct StateLayout {
  Eigen::Index atoms = 0;
  bool doubles = false;
  bool rydberg = false;

  Eigen::Index pair_count() const { return doubles ? atoms * (atoms - 1) / 2 : 0; }
  Eigen::Index b_offset() const { return 1; }
  Eigen::Index b2_offset() const { return 1 + atoms; }
  Eigen::Index c_offset() const { return b2_offset() + pair_count(); }
  Eigen::Index d_offset() const { return c_offset() + (rydberg ? atoms : 0); }
  Eigen::Index size() const { return d_offset() + (rydberg ? atoms : 0); }

  // Packed position of the unordered pair {i, j}, i != j.
  Eigen::Index pair_index(Eigen::Index i, Eigen::Index j) const {
    if (i > j) std::swap(i, j);
    return i * atoms - i * (i + 1) / 2 + (j - i - 1);
  }

  bool operator==(const StateLayout&) const = default;
};

// Unnormalized rotating-frame amplitudes of one trajectory.
//   |Psi> = a|G> + sum_j b_j|e_j> + sum_{i<j} b2_ij|e_i e_j> + sum_j (c_j|s_j> + d_j|r_j>)
struct TrajectoryState {
  StateLayout layout;
  Eigen::VectorXcd amplitudes;
  double t = 0.0;
  double norm2 = 1.0;  // tracked; equals amplitudes.squaredNorm() to integrator tolerance
  int jump_count = 0;
  std::mt19937_64 rng;

  std::complex<double> a() const { return amplitudes[0]; }
  auto b() const { return amplitudes.segment(layout.b_offset(), layout.atoms); }
  auto b2() const { return amplitudes.segment(layout.b2_offset(), layout.pair_count()); }
  auto c() const {
    return amplitudes.segment(layout.c_offset(), layout.rydberg ? layout.atoms : 0);
  }
  auto d() const {
    return amplitudes.segment(layout.d_offset(), layout.rydberg ? layout.atoms : 0);
  }
};

// |G> at time t0 with a freshly seeded generator.
TrajectoryState ground_state(const StateLayout& layout, std::uint64_t seed, double t0 = 0.0);

}  // namespace atomarray

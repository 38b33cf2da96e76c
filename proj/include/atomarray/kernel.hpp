#pragma once

#include "atomarray/geometry.hpp"

#include <Eigen/Core>

#include <iosfwd>

namespace atomarray {

// Outgoing free-space dyadic Green's tensor
//   G(r, r', k) = e^{ikR}/(4 pi R) [ (1 + i/kR - 1/(kR)^2) I
//                                  + (-1 - 3i/kR + 3/(kR)^2) R^ R^ ],
// R = r - r'. Throws SingularSeparation when k R < 1e-9.
Eigen::Matrix3cd green_tensor(const Vec3& r, const Vec3& r_prime, double k);

// Dipole-contracted couplings between two atoms of the given species, in rad/s:
//   V     = (3 pi Gamma_e / k) p^* . Re G . p
//   Gamma = (6 pi Gamma_e / k) p^* . Im G . p
// For a real dipole these are the familiar closed forms in cos(kr)/kr etc.;
// for a complex dipole (p.r^)^2 is replaced by |p.r^|^2.
struct PairCoupling {
  double v = 0.0;
  double gamma = 0.0;
};
PairCoupling pair_coupling(const Vec3& r_j, const Vec3& r_i, const AtomSpecies& species);

// Gamma = P^T diag(rates) P, rates sorted in descending order.
// Row l of `transform` holds the weights of jump operator
// Sigma_l = sum_j P_lj sigma_ge^(j).
struct CollectiveChannels {
  Eigen::VectorXd rates;
  Eigen::MatrixXd transform;
};

// Throws PsdViolation if an eigenvalue is below -1e-10 * gamma_e.
CollectiveChannels collective_channels(const Eigen::MatrixXd& gamma_matrix,
                                       double gamma_e);

struct CouplingKernel {
  Eigen::MatrixXd v_matrix;      // zero diagonal
  Eigen::MatrixXd gamma_matrix;  // diagonal = gamma_e
  CollectiveChannels channels;
  double gamma_e = 0.0;

  Eigen::Index size() const { return v_matrix.rows(); }
};

// Throws SingularSeparation on coincident atoms.
CouplingKernel build_coupling(const AtomArray& array);

// channel,rate_over_gamma_e
void write_channels_csv(std::ostream& out, const CouplingKernel& kernel);

}  // namespace atomarray

#include "atomarray/kernel.hpp"

#include "atomarray/errors.hpp"

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <ostream>

namespace atomarray {

using cd = std::complex<double>;
constexpr double kPi = std::numbers::pi;

Eigen::Matrix3cd green_tensor(const Vec3& r, const Vec3& r_prime, double k) {
  const Vec3 sep = r - r_prime;
  const double dist = sep.norm();
  const double x = k * dist;
  if (!(x >= 1e-9))
    throw SingularSeparation(fmt::format("green_tensor: separation {:.3e} m is singular", dist));

  const Vec3 unit = sep / dist;
  const cd i{0.0, 1.0};
  const cd prefactor = std::exp(i * x) / (4.0 * kPi * dist);
  const cd transverse = 1.0 + i / x - 1.0 / (x * x);
  const cd longitudinal = -1.0 - 3.0 * i / x + 3.0 / (x * x);

  Eigen::Matrix3cd g = transverse * Eigen::Matrix3cd::Identity();
  g += longitudinal * (unit * unit.transpose()).cast<cd>();
  return prefactor * g;
}

PairCoupling pair_coupling(const Vec3& r_j, const Vec3& r_i, const AtomSpecies& species) {
  const double k = species.wavenumber();
  const Eigen::Matrix3cd g = green_tensor(r_j, r_i, k);
  const CVec3& p = species.dipole;
  const double re = (p.adjoint() * g.real().cast<cd>() * p)(0, 0).real();
  const double im = (p.adjoint() * g.imag().cast<cd>() * p)(0, 0).real();
  return {3.0 * kPi * species.gamma_e / k * re, 6.0 * kPi * species.gamma_e / k * im};
}

CollectiveChannels collective_channels(const Eigen::MatrixXd& gamma_matrix, double gamma_e) {
  const Eigen::Index n = gamma_matrix.rows();
  CollectiveChannels out;
  if (n == 0) return out;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gamma_matrix);
  if (solver.info() != Eigen::Success)
    throw PsdViolation("collective_channels: eigensolver did not converge");

  const Eigen::VectorXd& values = solver.eigenvalues();
  if (values.minCoeff() < -1e-10 * gamma_e)
    throw PsdViolation(fmt::format("collective_channels: eigenvalue {:.3e} Gamma_e below zero",
                                   values.minCoeff() / gamma_e));

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return values[a] > values[b]; });

  out.rates.resize(n);
  out.transform.resize(n, n);
  for (Eigen::Index l = 0; l < n; ++l) {
    const Eigen::Index src = order[static_cast<std::size_t>(l)];
    out.rates[l] = values[src];
    out.transform.row(l) = solver.eigenvectors().col(src).transpose();
  }
  return out;
}

CouplingKernel build_coupling(const AtomArray& array) {
  const auto n = static_cast<Eigen::Index>(array.size());
  const double gamma_e = array.species.gamma_e;

  CouplingKernel kernel;
  kernel.gamma_e = gamma_e;
  kernel.v_matrix = Eigen::MatrixXd::Zero(n, n);
  kernel.gamma_matrix = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    kernel.gamma_matrix(j, j) = gamma_e;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const PairCoupling c = pair_coupling(array.positions[static_cast<std::size_t>(j)],
                                           array.positions[static_cast<std::size_t>(i)],
                                           array.species);
      kernel.v_matrix(j, i) = kernel.v_matrix(i, j) = c.v;
      kernel.gamma_matrix(j, i) = kernel.gamma_matrix(i, j) = c.gamma;
    }
  }
  kernel.channels = collective_channels(kernel.gamma_matrix, gamma_e);
  return kernel;
}

void write_channels_csv(std::ostream& out, const CouplingKernel& kernel) {
  out << "channel,rate_over_gamma_e\n";
  for (Eigen::Index l = 0; l < kernel.channels.rates.size(); ++l) {
    out << fmt::format("{},{:.12e}\n", l, kernel.channels.rates[l] / kernel.gamma_e);
  }
}

}  // namespace atomarray

#include "atomarray/dynamics.hpp"

#include "atomarray/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <fmt/format.h>

#include <stdexcept>

namespace atomarray {

using cd = std::complex<double>;
constexpr cd kI{0.0, 1.0};

namespace {

Readout readout_site(const SiteModel& model, const Eigen::VectorXcd& y) {
  const StateLayout& L = model.layout;
  const Eigen::Index n = L.atoms;
  const cd a = y[0];
  const auto b = y.segment(L.b_offset(), n);

  Readout r;
  r.norm2 = y.squaredNorm();
  r.ground = std::norm(a);
  r.singles = b.squaredNorm();
  r.forward_sum = std::conj(a) * model.forward.dot(b);
  r.backward_sum = std::conj(a) * model.backward.dot(b);
  if (L.doubles && n >= 2) {
    const auto b2 = y.segment(L.b2_offset(), L.pair_count());
    r.doubles = b2.squaredNorm();
    // sum_j conj(f_j) sum_i conj(b_i) B_ij
    Eigen::VectorXcd bf = Eigen::VectorXcd::Zero(n);
    Eigen::VectorXcd bb = Eigen::VectorXcd::Zero(n);
    for (Eigen::Index i = 0, k = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j, ++k) {
        const cd p = b2[k];
        bf[i] += p * std::conj(model.forward[j]);
        bf[j] += p * std::conj(model.forward[i]);
        bb[i] += p * std::conj(model.backward[j]);
        bb[j] += p * std::conj(model.backward[i]);
      }
    }
    r.forward_sum += b.dot(bf);
    r.backward_sum += b.dot(bb);
  }
  return r;
}

}  // namespace

// --- direct -----------------------------------------------------------------

DirectPropagator::DirectPropagator(std::shared_ptr<const SiteModel> model, double detuning)
    : model_(std::move(model)), detuning_(detuning) {
  if (!model_) throw std::invalid_argument("DirectPropagator: null model");
}

void DirectPropagator::derivative(double t, const Eigen::VectorXcd& y,
                                  Eigen::VectorXcd& dy) const {
  if (model_->layout.rydberg)
    derivative_four_level(*model_, detuning_, t, y, dy);
  else
    derivative_two_level(*model_, detuning_, t, y, dy);
}

Eigen::VectorXcd DirectPropagator::ground() const {
  Eigen::VectorXcd y = Eigen::VectorXcd::Zero(dim());
  y[0] = 1.0;
  return y;
}

std::pair<double, double> DirectPropagator::norm2_with_rate(const Eigen::VectorXcd& y,
                                                            const Eigen::VectorXcd& dy) const {
  return {y.squaredNorm(), 2.0 * y.dot(dy).real()};
}

Projection DirectPropagator::project(const Eigen::VectorXcd& y) const {
  const auto b = y.segment(model_->layout.b_offset(), model_->layout.atoms);
  return {y[0], model_->forward.dot(b), model_->backward.dot(b)};
}

Readout DirectPropagator::readout(const Eigen::VectorXcd& y) const {
  return readout_site(*model_, y);
}

int DirectPropagator::jump(Eigen::VectorXcd& y, std::mt19937_64& rng) const {
  const StateLayout& L = model_->layout;
  const Eigen::Index n = L.atoms;
  if (!L.doubles || n < 2) {
    y = ground();
    return -1;
  }

  // Sigma_l = sum_j P_lj sigma_ge^j maps b -> a' = (P b)_l and b2 -> b'_i = (B P^T)_il.
  const Eigen::MatrixXd& p = model_->channels.transform;
  const Eigen::VectorXd& rates = model_->channels.rates;
  const auto b = y.segment(L.b_offset(), n);
  Eigen::MatrixXcd pairs = Eigen::MatrixXcd::Zero(n, n);
  for (Eigen::Index i = 0, k = L.b2_offset(); i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j, ++k) pairs(i, j) = pairs(j, i) = y[k];
  }
  const Eigen::VectorXcd lowered_a = p.cast<cd>() * b;
  const Eigen::MatrixXcd lowered_b = pairs * p.transpose().cast<cd>();

  std::vector<double> weights(static_cast<std::size_t>(n));
  double total = 0.0;
  for (Eigen::Index l = 0; l < n; ++l) {
    const double w =
        std::max(rates[l], 0.0) * (std::norm(lowered_a[l]) + lowered_b.col(l).squaredNorm());
    weights[static_cast<std::size_t>(l)] = w;
    total += w;
  }
  if (!(total > 0.0)) {
    y = ground();
    return -1;
  }
  std::discrete_distribution<int> pick(weights.begin(), weights.end());
  const int l = pick(rng);

  y.setZero();
  y[0] = lowered_a[l];
  y.segment(L.b_offset(), n) = lowered_b.col(l);
  y.normalize();
  return l;
}

// --- modal ------------------------------------------------------------------

std::shared_ptr<const ModalBasis> make_modal_basis(std::shared_ptr<const SiteModel> model) {
  if (!model) throw std::invalid_argument("make_modal_basis: null model");
  if (model->layout.doubles)
    throw std::invalid_argument("make_modal_basis: the doubles sector needs the direct propagator");

  auto basis = std::make_shared<ModalBasis>();
  const Eigen::Index n = model->layout.atoms;
  basis->model = model;
  if (n == 0) return basis;

  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(model->effective, true);
  if (solver.info() != Eigen::Success)
    throw IntegrationFailure("make_modal_basis: eigensolver did not converge");
  basis->eigenvalues = solver.eigenvalues();
  basis->vectors = solver.eigenvectors();

  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(basis->vectors);
  basis->inverse = lu.inverse();
  basis->condition = basis->vectors.norm() * basis->inverse.norm() / static_cast<double>(n);
  if (!std::isfinite(basis->condition) || basis->condition > 1e8)
    throw IntegrationFailure(
        fmt::format("make_modal_basis: eigenvector condition {:.3e} too large", basis->condition));

  const double residual =
      (model->effective * basis->vectors - basis->vectors * basis->eigenvalues.asDiagonal())
          .norm();
  if (residual > 1e-8 * model->effective.norm())
    throw IntegrationFailure(
        fmt::format("make_modal_basis: eigen-residual {:.3e} too large", residual));

  basis->gram = basis->vectors.adjoint() * basis->vectors;
  basis->source = basis->inverse * model->forward;
  basis->forward_out = model->forward.adjoint() * basis->vectors;
  basis->backward_out = model->backward.adjoint() * basis->vectors;
  return basis;
}

ModalPropagator::ModalPropagator(std::shared_ptr<const ModalBasis> basis, double detuning)
    : basis_(std::move(basis)), detuning_(detuning) {
  if (!basis_ || !basis_->model) throw std::invalid_argument("ModalPropagator: null basis");
  if (basis_->model->layout.atoms > 0)
    shifted_ = basis_->eigenvalues.array() + kI * detuning_;
}

void ModalPropagator::derivative(double t, const Eigen::VectorXcd& y,
                                 Eigen::VectorXcd& dy) const {
  const SiteModel& m = model();
  const StateLayout& L = m.layout;
  const Eigen::Index n = L.atoms;
  dy.resize(y.size());
  const double drive = m.rabi_per_flux * pulse_envelope(t, m.probe);
  const cd a = y[0];
  const auto beta = y.segment(1, n);

  dy[0] = kI * drive * (basis_->forward_out * beta).value();
  if (n == 0) return;
  auto dbeta = dy.segment(1, n);
  dbeta = shifted_.cwiseProduct(beta) + (kI * drive * a) * basis_->source;

  if (!L.rydberg) return;
  const auto gamma = y.segment(L.c_offset(), n);
  const auto delta = y.segment(L.d_offset(), n);
  const cd od = m.drive_rabi;
  const cd oc = m.cavity_rabi;
  const cd c_rate = kI * (detuning_ + m.drive_detuning) - 0.5 * m.gamma_s;
  const cd d_rate = kI * (detuning_ + m.drive_detuning + m.cavity_detuning) - 0.5 * m.gamma_r;
  dbeta += (kI * std::conj(od)) * gamma;
  dy.segment(L.c_offset(), n) = c_rate * gamma + (kI * od) * beta + (kI * std::conj(oc)) * delta;
  dy.segment(L.d_offset(), n) = d_rate * delta + (kI * oc) * gamma;
}

Eigen::VectorXcd ModalPropagator::ground() const {
  Eigen::VectorXcd y = Eigen::VectorXcd::Zero(dim());
  y[0] = 1.0;
  return y;
}

Eigen::VectorXcd ModalPropagator::from_site(const Eigen::VectorXcd& site) const {
  const StateLayout& L = model().layout;
  const Eigen::Index n = L.atoms;
  if (site.size() != L.size())
    throw std::invalid_argument("ModalPropagator::from_site: layout mismatch");
  Eigen::VectorXcd y(L.size());
  y[0] = site[0];
  if (n == 0) return y;
  y.segment(1, n) = basis_->inverse * site.segment(1, n);
  if (L.rydberg) {
    const Eigen::VectorXcd unphase = model().drive_phase.conjugate();
    y.segment(L.c_offset(), n) =
        basis_->inverse * unphase.cwiseProduct(site.segment(L.c_offset(), n));
    y.segment(L.d_offset(), n) =
        basis_->inverse * unphase.cwiseProduct(site.segment(L.d_offset(), n));
  }
  return y;
}

Eigen::VectorXcd ModalPropagator::to_site(const Eigen::VectorXcd& y) const {
  const StateLayout& L = model().layout;
  const Eigen::Index n = L.atoms;
  Eigen::VectorXcd site(L.size());
  site[0] = y[0];
  if (n == 0) return site;
  site.segment(1, n) = basis_->vectors * y.segment(1, n);
  if (L.rydberg) {
    const Eigen::VectorXcd& phase = model().drive_phase;
    site.segment(L.c_offset(), n) =
        phase.cwiseProduct(basis_->vectors * y.segment(L.c_offset(), n));
    site.segment(L.d_offset(), n) =
        phase.cwiseProduct(basis_->vectors * y.segment(L.d_offset(), n));
  }
  return site;
}

double ModalPropagator::norm2(const Eigen::VectorXcd& y) const {
  const StateLayout& L = model().layout;
  const Eigen::Index n = L.atoms;
  double total = std::norm(y[0]);
  const int sectors = L.rydberg ? 3 : 1;
  for (int s = 0; s < sectors; ++s) {
    const auto v = y.segment(1 + s * n, n);
    total += v.dot(basis_->gram * v).real();
  }
  return total;
}

std::pair<double, double> ModalPropagator::norm2_with_rate(const Eigen::VectorXcd& y,
                                                           const Eigen::VectorXcd& dy) const {
  const StateLayout& L = model().layout;
  const Eigen::Index n = L.atoms;
  double total = std::norm(y[0]);
  double rate = 2.0 * (std::conj(y[0]) * dy[0]).real();
  const int sectors = L.rydberg ? 3 : 1;
  Eigen::VectorXcd gv(n);
  for (int s = 0; s < sectors; ++s) {
    const auto v = y.segment(1 + s * n, n);
    gv.noalias() = basis_->gram * v;
    total += v.dot(gv).real();
    rate += 2.0 * gv.dot(dy.segment(1 + s * n, n)).real();
  }
  return {total, rate};
}

Projection ModalPropagator::project(const Eigen::VectorXcd& y) const {
  const Eigen::Index n = model().layout.atoms;
  if (n == 0) return {y[0], 0.0, 0.0};
  const auto beta = y.segment(1, n);
  return {y[0], (basis_->forward_out * beta).value(), (basis_->backward_out * beta).value()};
}

Readout ModalPropagator::readout(const Eigen::VectorXcd& y) const {
  return readout_site(model(), to_site(y));
}

int ModalPropagator::jump(Eigen::VectorXcd& y, std::mt19937_64&) const {
  y = ground();
  return -1;
}

}  // namespace atomarray

#include "atomarray/dynamics.hpp"

#include <fmt/format.h>

#include <stdexcept>

namespace atomarray {

using cd = std::complex<double>;
constexpr cd kI{0.0, 1.0};

TrajectoryState ground_state(const StateLayout& layout, std::uint64_t seed, double t0) {
  TrajectoryState s;
  s.layout = layout;
  s.amplitudes = Eigen::VectorXcd::Zero(layout.size());
  s.amplitudes[0] = 1.0;
  s.t = t0;
  s.norm2 = 1.0;
  s.rng.seed(seed);
  return s;
}

void SchemeConfig::validate() const {
  if (!(probe.duration > 0.0)) throw std::invalid_argument("scheme: pulse duration must be positive");
  if (!(probe.mean_photons >= 0.0))
    throw std::invalid_argument("scheme: mean photon number must be non-negative");
  if (!(beam.waist > 0.0) || !(beam.wavenumber > 0.0))
    throw std::invalid_argument("scheme: beam waist and wavenumber must be positive");
  if (const auto* four = std::get_if<FourLevel>(&level)) {
    if (four->gamma_s < 0.0 || four->gamma_r < 0.0)
      throw std::invalid_argument("scheme: Rydberg decay rates must be non-negative");
    if (four->cavity.photon_number < 0)
      throw std::invalid_argument("scheme: cavity photon number must be non-negative");
  }
}

SiteModel make_site_model(const AtomArray& array, const CouplingKernel& kernel,
                          const SchemeConfig& scheme) {
  scheme.validate();
  const auto n = static_cast<Eigen::Index>(array.size());
  if (kernel.size() != n)
    throw std::invalid_argument(
        fmt::format("make_site_model: kernel has {} atoms, array has {}", kernel.size(), n));

  SiteModel m;
  m.layout.atoms = n;
  m.gamma_e = array.species.gamma_e;
  m.probe = scheme.probe;
  m.rabi_per_flux = flux_to_rabi(array.species, scheme.beam);
  m.effective = (-0.5 * kernel.gamma_matrix).cast<cd>() + kI * kernel.v_matrix.cast<cd>();
  m.forward = mode_overlaps(array, scheme.beam);
  m.backward = m.forward.conjugate();
  m.drive_phase = Eigen::VectorXcd::Ones(n);

  if (const auto* two = std::get_if<TwoLevel>(&scheme.level)) {
    m.layout.doubles = two->include_doubles;
    if (m.layout.doubles) m.channels = kernel.channels;
  } else {
    const auto& four = std::get<FourLevel>(scheme.level);
    m.layout.rydberg = true;
    m.drive_phase = drive_phases(array, four.drive.wavevector);
    m.drive_rabi = four.drive.rabi;
    m.drive_detuning = four.drive.detuning;
    m.cavity_rabi = four.cavity.rabi();
    m.cavity_detuning = four.cavity.detuning;
    m.gamma_s = four.gamma_s;
    m.gamma_r = four.gamma_r;
  }
  return m;
}

namespace {

void check_layout(const SiteModel& model, const Eigen::VectorXcd& y, const char* who) {
  if (y.size() != model.layout.size())
    throw std::invalid_argument(fmt::format("{}: state has {} components, layout expects {}",
                                            who, y.size(), model.layout.size()));
}

// Probe sector: a, b and (optionally) b2.
void probe_sector(const SiteModel& model, double detuning, double t, const Eigen::VectorXcd& y,
                  Eigen::VectorXcd& dy) {
  const StateLayout& L = model.layout;
  const Eigen::Index n = L.atoms;
  const double drive = model.rabi_per_flux * pulse_envelope(t, model.probe);
  const cd a = y[0];
  const auto b = y.segment(L.b_offset(), n);
  const Eigen::VectorXcd& g = model.forward;

  dy[0] = kI * drive * g.dot(b);
  auto db = dy.segment(L.b_offset(), n);
  db.noalias() = model.effective * b;
  db += kI * detuning * b + (kI * drive * a) * g;

  if (!L.doubles || n < 2) {
    if (L.doubles) dy.segment(L.b2_offset(), L.pair_count()).setZero();
    return;
  }

  Eigen::MatrixXcd pairs = Eigen::MatrixXcd::Zero(n, n);
  for (Eigen::Index i = 0, k = L.b2_offset(); i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j, ++k) pairs(i, j) = pairs(j, i) = y[k];
  }
  db += (kI * drive) * (pairs * g.conjugate());

  const Eigen::MatrixXcd kb = model.effective * pairs;
  for (Eigen::Index i = 0, k = L.b2_offset(); i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j, ++k) {
      dy[k] = 2.0 * kI * detuning * pairs(i, j) + kb(i, j) + kb(j, i) +
              kI * drive * (g[i] * b[j] + g[j] * b[i]);
    }
  }
}

}  // namespace

void derivative_two_level(const SiteModel& model, double detuning, double t,
                          const Eigen::VectorXcd& y, Eigen::VectorXcd& dy) {
  check_layout(model, y, "derivative_two_level");
  if (model.layout.rydberg)
    throw std::invalid_argument("derivative_two_level: layout carries Rydberg sectors");
  dy.resize(y.size());
  probe_sector(model, detuning, t, y, dy);
}

void derivative_four_level(const SiteModel& model, double detuning, double t,
                           const Eigen::VectorXcd& y, Eigen::VectorXcd& dy) {
  check_layout(model, y, "derivative_four_level");
  const StateLayout& L = model.layout;
  if (!L.rydberg || L.doubles)
    throw std::invalid_argument("derivative_four_level: layout must be singles with Rydberg sectors");
  dy.resize(y.size());
  probe_sector(model, detuning, t, y, dy);

  const Eigen::Index n = L.atoms;
  const auto b = y.segment(L.b_offset(), n);
  const auto c = y.segment(L.c_offset(), n);
  const auto d = y.segment(L.d_offset(), n);
  const cd od = model.drive_rabi;
  const cd oc = model.cavity_rabi;
  const cd c_rate = kI * (detuning + model.drive_detuning) - 0.5 * model.gamma_s;
  const cd d_rate =
      kI * (detuning + model.drive_detuning + model.cavity_detuning) - 0.5 * model.gamma_r;
  const auto& phase = model.drive_phase;

  dy.segment(L.b_offset(), n) += (kI * std::conj(od)) * phase.conjugate().cwiseProduct(c);
  dy.segment(L.c_offset(), n) =
      c_rate * c + (kI * od) * phase.cwiseProduct(b) + (kI * std::conj(oc)) * d;
  dy.segment(L.d_offset(), n) = d_rate * d + (kI * oc) * c;
}

}  // namespace atomarray

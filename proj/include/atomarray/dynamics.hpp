#pragma once

#include "atomarray/geometry.hpp"
#include "atomarray/kernel.hpp"
#include "atomarray/modes.hpp"
#include "atomarray/observables.hpp"
#include "atomarray/ode.hpp"
#include "atomarray/state.hpp"

#include <Eigen/Core>

#include <complex>
#include <functional>
#include <memory>
#include <random>
#include <utility>
#include <variant>
#include <vector>

namespace atomarray {

struct TwoLevel {
  bool include_doubles = false;
};

// |g> -> |e> (probe) -> |s> (drive) -> |r> (cavity), singles only.
struct FourLevel {
  DriveField drive;
  CavityCoupling cavity;
  double gamma_s = 0.0;  // rad/s
  double gamma_r = 0.0;  // rad/s
};

struct SchemeConfig {
  std::variant<TwoLevel, FourLevel> level;
  ProbePulse probe;
  BeamGeometry beam;

  // Throws std::invalid_argument on negative Rydberg rates or a bad pulse/beam.
  void validate() const;
};

// Everything the equations of motion need, in the site basis. Amplitudes are
// taken in the frame b~ = b e^{i Dp t}, b2~ = b2 e^{2i Dp t}, c~ = c e^{i(Dp+Dd)t},
// d~ = d e^{i(Dp+Dd+Dc)t}, so the coefficients are time independent apart from
// the pulse envelope. The probe detuning Dp is supplied per propagator.
struct SiteModel {
  StateLayout layout;
  Eigen::MatrixXcd effective;      // K = -Gamma/2 + iV
  Eigen::VectorXcd forward;        // g(r_j), drives the atoms
  Eigen::VectorXcd backward;       // g*(r_j)
  Eigen::VectorXcd drive_phase;    // e^{i k_d . r_j}
  std::complex<double> drive_rabi{0.0, 0.0};
  double drive_detuning = 0.0;
  std::complex<double> cavity_rabi{0.0, 0.0};
  double cavity_detuning = 0.0;
  double gamma_s = 0.0;
  double gamma_r = 0.0;
  double gamma_e = 0.0;
  double rabi_per_flux = 0.0;      // C
  ProbePulse probe;
  CollectiveChannels channels;     // used by doubles-sector jumps
};

SiteModel make_site_model(const AtomArray& array, const CouplingKernel& kernel,
                          const SchemeConfig& scheme);

// Site-basis right-hand sides. derivative_four_level includes the probe sector.
// Both throw std::invalid_argument when y does not match model.layout.
void derivative_two_level(const SiteModel& model, double detuning, double t,
                          const Eigen::VectorXcd& y, Eigen::VectorXcd& dy);
void derivative_four_level(const SiteModel& model, double detuning, double t,
                           const Eigen::VectorXcd& y, Eigen::VectorXcd& dy);

// Linear read-out of a propagator state.
struct Projection {
  std::complex<double> ground;    // a
  std::complex<double> forward;   // sum_j conj(f_j) b_j
  std::complex<double> backward;  // sum_j conj(r_j) b_j
};

// Full read-out; sums are unnormalized (divide by norm2).
struct Readout {
  double norm2 = 0.0;
  double ground = 0.0;                 // |a|^2
  std::complex<double> forward_sum;    // sum_j conj(f_j) <sigma_j> norm2
  std::complex<double> backward_sum;   // sum_j conj(r_j) <sigma_j> norm2
  double singles = 0.0;                // sum_j |b_j|^2
  double doubles = 0.0;                // sum_{i<j} |b2_ij|^2
};

// Non-Hermitian evolution of one trajectory in some basis, plus the operations
// the trajectory driver needs. Implementations are immutable and shareable.
class Propagator : public OdeSystem {
 public:
  virtual Eigen::Index dim() const = 0;
  virtual Eigen::VectorXcd ground() const = 0;
  virtual Eigen::VectorXcd from_site(const Eigen::VectorXcd& site) const = 0;
  virtual Eigen::VectorXcd to_site(const Eigen::VectorXcd& y) const = 0;
  virtual double norm2(const Eigen::VectorXcd& y) const = 0;
  // {norm2, d(norm2)/dt} for dy = f(t, y).
  virtual std::pair<double, double> norm2_with_rate(const Eigen::VectorXcd& y,
                                                    const Eigen::VectorXcd& dy) const = 0;
  virtual Projection project(const Eigen::VectorXcd& y) const = 0;
  virtual Readout readout(const Eigen::VectorXcd& y) const = 0;
  // Applies a quantum jump in place and renormalizes. Returns the collective
  // channel index, or -1 for a reset to |G>.
  virtual int jump(Eigen::VectorXcd& y, std::mt19937_64& rng) const = 0;

  // True when the polarization needs only a and b, so project() is enough.
  bool singles_only() const { return !model().layout.doubles; }
  virtual const SiteModel& model() const = 0;
  virtual double detuning() const = 0;
};

class DirectPropagator final : public Propagator {
 public:
  DirectPropagator(std::shared_ptr<const SiteModel> model, double detuning);

  void derivative(double t, const Eigen::VectorXcd& y, Eigen::VectorXcd& dy) const override;
  Eigen::Index dim() const override { return model_->layout.size(); }
  Eigen::VectorXcd ground() const override;
  Eigen::VectorXcd from_site(const Eigen::VectorXcd& site) const override { return site; }
  Eigen::VectorXcd to_site(const Eigen::VectorXcd& y) const override { return y; }
  double norm2(const Eigen::VectorXcd& y) const override { return y.squaredNorm(); }
  std::pair<double, double> norm2_with_rate(const Eigen::VectorXcd& y,
                                            const Eigen::VectorXcd& dy) const override;
  Projection project(const Eigen::VectorXcd& y) const override;
  Readout readout(const Eigen::VectorXcd& y) const override;
  int jump(Eigen::VectorXcd& y, std::mt19937_64& rng) const override;
  const SiteModel& model() const override { return *model_; }
  double detuning() const override { return detuning_; }

 private:
  std::shared_ptr<const SiteModel> model_;
  double detuning_;
};

// Eigenbasis of K = R diag(lambda) R^{-1}, shared by every detuning of a sweep
// (the detuning only shifts lambda). Singles only.
struct ModalBasis {
  std::shared_ptr<const SiteModel> model;
  Eigen::VectorXcd eigenvalues;        // lambda_l
  Eigen::MatrixXcd vectors;            // R
  Eigen::MatrixXcd inverse;            // R^{-1}
  Eigen::MatrixXcd gram;               // R^dagger R
  Eigen::VectorXcd source;             // R^{-1} g
  Eigen::RowVectorXcd forward_out;     // f^dagger R
  Eigen::RowVectorXcd backward_out;    // r^dagger R
  double condition = 1.0;              // ||R||_F ||R^{-1}||_F / N
};

// Throws std::invalid_argument for a doubles layout and IntegrationFailure when
// the eigenvector matrix is too ill-conditioned (> 1e8) to be used.
std::shared_ptr<const ModalBasis> make_modal_basis(std::shared_ptr<const SiteModel> model);

// State layout [a | beta | gamma | delta] with b~ = R beta, c~ = phase R gamma,
// d~ = phase R delta; the drive phases are gauged into c~ and d~.
class ModalPropagator final : public Propagator {
 public:
  ModalPropagator(std::shared_ptr<const ModalBasis> basis, double detuning);

  void derivative(double t, const Eigen::VectorXcd& y, Eigen::VectorXcd& dy) const override;
  Eigen::Index dim() const override { return model().layout.size(); }
  Eigen::VectorXcd ground() const override;
  Eigen::VectorXcd from_site(const Eigen::VectorXcd& site) const override;
  Eigen::VectorXcd to_site(const Eigen::VectorXcd& y) const override;
  double norm2(const Eigen::VectorXcd& y) const override;
  std::pair<double, double> norm2_with_rate(const Eigen::VectorXcd& y,
                                            const Eigen::VectorXcd& dy) const override;
  Projection project(const Eigen::VectorXcd& y) const override;
  Readout readout(const Eigen::VectorXcd& y) const override;
  int jump(Eigen::VectorXcd& y, std::mt19937_64& rng) const override;
  const SiteModel& model() const override { return *basis_->model; }
  double detuning() const override { return detuning_; }

 private:
  std::shared_ptr<const ModalBasis> basis_;
  double detuning_;
  Eigen::VectorXcd shifted_;  // lambda + i Dp
};

enum class JumpMode { stochastic, no_jump };

struct JumpEvent {
  double time = 0.0;
  int channel = -1;
};

struct TrajectoryOptions {
  double rtol = 1e-6;
  double atol = 1e-9;
  // Record P_1e and P_2e; materializes the site amplitudes at every output time.
  bool diagnostics = false;
  // Called at every output time with the normalized site-basis state.
  std::function<void(const TrajectoryState&)> observer;
};

struct TrajectoryResult {
  TrajectoryState final_state;  // site basis, unnormalized, norm2 tracked
  FieldRecord record;
  std::vector<JumpEvent> jumps;
  std::size_t steps = 0;
  std::size_t rejected = 0;
};

// Integrates from initial.t through the output grid (ascending, grid[0] >=
// initial.t). In stochastic mode a threshold u ~ U(0,1) is drawn from the
// state's generator and a jump fires when norm2 falls to u; the jump time is
// located by bisection to 1e-3 / Gamma_e. Fields are recorded with normalized
// amplitudes. Throws IntegrationFailure from the stepper.
TrajectoryResult evolve_trajectory(const Propagator& propagator, TrajectoryState initial,
                                   const std::vector<double>& grid, JumpMode mode,
                                   const TrajectoryOptions& options = {});

}  // namespace atomarray

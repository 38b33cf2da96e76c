#include "atomarray/dynamics.hpp"

#include "atomarray/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <limits>
#include <stdexcept>

namespace atomarray {

using cd = std::complex<double>;

namespace {

// Cubic Hermite interpolant of norm2 over one accepted step.
struct NormSpline {
  double t0 = 0.0, h = 0.0;
  double n0 = 1.0, r0 = 0.0, n1 = 1.0, r1 = 0.0;

  double operator()(double t) const {
    if (h <= 0.0) return n1;
    const double s = (t - t0) / h;
    const double s2 = s * s, s3 = s2 * s;
    return (2.0 * s3 - 3.0 * s2 + 1.0) * n0 + (s3 - 2.0 * s2 + s) * h * r0 +
           (-2.0 * s3 + 3.0 * s2) * n1 + (s3 - s2) * h * r1;
  }
};

class Recorder {
 public:
  Recorder(const Propagator& prop, const TrajectoryOptions& options, FieldRecord& record)
      : prop_(prop),
        options_(options),
        record_(record),
        fast_(prop.singles_only() && !options.diagnostics && !options.observer) {}

  bool fast() const { return fast_; }

  // Output from an explicit state.
  void emit_state(double t, const Eigen::VectorXcd& y) {
    const Readout r = prop_.readout(y);
    push(t, r.forward_sum / r.norm2, r.backward_sum / r.norm2, r.norm2, r.ground / r.norm2);
    if (options_.diagnostics) {
      record_.p1e.push_back(r.singles / r.norm2);
      record_.p2e.push_back(r.doubles / r.norm2);
    }
    if (options_.observer) {
      TrajectoryState s;
      s.layout = prop_.model().layout;
      s.amplitudes = prop_.to_site(y) / std::sqrt(r.norm2);
      s.t = t;
      s.norm2 = 1.0;
      options_.observer(s);
    }
  }

  // Output from the projected continuous extension of the last step.
  void emit_projected(double t, const DormandPrince5& stepper, const NormSpline& norm) {
    if (!projected_) {
      const Projection p0 = prop_.project(stepper.y_old());
      base_ = {p0.ground, p0.forward, p0.backward};
      for (std::size_t i = 0; i < 7; ++i) {
        const Projection pk = prop_.project(stepper.stage(i));
        stages_[i] = {pk.ground, pk.forward, pk.backward};
      }
      projected_ = true;
    }
    const double h = stepper.step_size();
    const auto w = DormandPrince5::dense_weights((t - stepper.t_old()) / h);
    std::array<cd, 3> v = base_;
    for (std::size_t i = 0; i < 7; ++i) {
      if (w[i] == 0.0) continue;
      for (std::size_t c = 0; c < 3; ++c) v[c] += (h * w[i]) * stages_[i][c];
    }
    const double n2 = norm(t);
    const cd ca = std::conj(v[0]);
    push(t, ca * v[1] / n2, ca * v[2] / n2, n2, std::norm(v[0]) / n2);
  }

  void new_step() { projected_ = false; }

 private:
  void push(double t, cd forward, cd backward, double n2, double ground) {
    const double alpha = pulse_envelope(t, prop_.model().probe);
    const FieldAmplitudes f =
        fields_from_sums(forward, backward, alpha, prop_.model().rabi_per_flux);
    record_.times.push_back(t);
    record_.alpha_in.push_back(alpha);
    record_.alpha_T.push_back(f.transmitted);
    record_.alpha_R.push_back(f.reflected);
    record_.norm2.push_back(n2);
    record_.excited.push_back(1.0 - ground);
  }

  const Propagator& prop_;
  const TrajectoryOptions& options_;
  FieldRecord& record_;
  bool fast_;
  bool projected_ = false;
  std::array<cd, 3> base_{};
  std::array<std::array<cd, 3>, 7> stages_{};
};

}  // namespace

TrajectoryResult evolve_trajectory(const Propagator& propagator, TrajectoryState initial,
                                   const std::vector<double>& grid, JumpMode mode,
                                   const TrajectoryOptions& options) {
  const SiteModel& model = propagator.model();
  if (!(initial.layout == model.layout) || initial.amplitudes.size() != model.layout.size())
    throw std::invalid_argument("evolve_trajectory: initial state does not match the model layout");
  if (grid.empty()) throw std::invalid_argument("evolve_trajectory: empty output grid");
  if (grid.front() < initial.t || !std::is_sorted(grid.begin(), grid.end()))
    throw std::invalid_argument("evolve_trajectory: grid must be ascending and start at or after t0");

  TrajectoryResult result;
  result.record.reserve(grid.size());
  Recorder recorder(propagator, options, result.record);

  std::mt19937_64 rng = initial.rng;
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  auto draw_threshold = [&] {
    return mode == JumpMode::stochastic ? uniform(rng) : -std::numeric_limits<double>::infinity();
  };

  DormandPrince5::Options ode;
  ode.rtol = options.rtol;
  ode.atol = options.atol;
  ode.max_step = 0.25 * model.probe.duration;
  DormandPrince5 stepper(propagator, ode);

  const double t_tolerance = 1e-3 / model.gamma_e;
  double t = initial.t;
  Eigen::VectorXcd y = propagator.from_site(initial.amplitudes);
  {
    const double n = propagator.norm2(y);
    if (!(n > 0.0)) throw std::invalid_argument("evolve_trajectory: zero initial state");
    y /= std::sqrt(n);
  }
  stepper.reset(t, y);
  auto [n_start, r_start] = propagator.norm2_with_rate(y, stepper.stage(0));
  double threshold = draw_threshold();
  int jump_count = initial.jump_count;

  std::size_t next = 0;
  while (next < grid.size() && grid[next] <= t) recorder.emit_state(grid[next++], y);

  const double t_end = grid.back();
  Eigen::VectorXcd scratch;
  while (next < grid.size()) {
    stepper.step(t_end);
    recorder.new_step();
    auto [n_end, r_end] = propagator.norm2_with_rate(stepper.y(), stepper.stage(6));
    NormSpline spline{stepper.t_old(), stepper.step_size(), n_start, r_start, n_end, r_end};

    double cut = stepper.t();
    const bool jumped = n_end <= threshold;
    if (jumped) {
      double lo = stepper.t_old(), hi = stepper.t();
      while (hi - lo > t_tolerance) {
        const double mid = 0.5 * (lo + hi);
        (spline(mid) > threshold ? lo : hi) = mid;
      }
      cut = hi;
    }

    for (; next < grid.size() && grid[next] <= cut; ++next) {
      if (recorder.fast()) {
        recorder.emit_projected(grid[next], stepper, spline);
      } else {
        stepper.dense_state(grid[next], scratch);
        recorder.emit_state(grid[next], scratch);
      }
    }

    if (jumped) {
      stepper.dense_state(cut, scratch);
      const int channel = propagator.jump(scratch, rng);
      result.jumps.push_back({cut, channel});
      ++jump_count;
      t = cut;
      stepper.reset(t, scratch);
      std::tie(n_start, r_start) = propagator.norm2_with_rate(scratch, stepper.stage(0));
      threshold = draw_threshold();
    } else {
      t = stepper.t();
      n_start = n_end;
      r_start = r_end;
    }
  }

  result.steps = stepper.accepted_steps();
  result.rejected = stepper.rejected_steps();
  TrajectoryState& out = result.final_state;
  out.layout = model.layout;
  out.amplitudes = propagator.to_site(stepper.y());
  out.t = t;
  out.norm2 = n_start;
  out.jump_count = jump_count;
  out.rng = rng;
  return result;
}

}  // namespace atomarray

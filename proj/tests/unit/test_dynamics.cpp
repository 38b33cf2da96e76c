#include "atomarray/dynamics.hpp"
#include "atomarray/errors.hpp"

#include "fixtures.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>

using namespace atomarray;
using atomarray::testing::kPi;
using cd = std::complex<double>;

namespace {

const AtomSpecies kRb = rubidium87();
const double kGe = kRb.gamma_e;

// Continuous probe flux giving |Omega| = rabi on a single atom at the focus.
double flux_for_rabi(double rabi) {
  const double c = flux_to_rabi(kRb, testing::beam_for(kRb));
  return rabi * rabi / (c * c);
}

TrajectoryResult no_jump(const Propagator& prop, const std::vector<double>& grid,
                         double rtol = 1e-9, double atol = 1e-12) {
  TrajectoryOptions o;
  o.rtol = rtol;
  o.atol = atol;
  return evolve_trajectory(prop, ground_state(prop.model().layout, 1), grid, JumpMode::no_jump,
                           o);
}

// Normalized site amplitudes at the end of a no-jump run.
Eigen::VectorXcd final_normalized(const Propagator& prop, const std::vector<double>& grid) {
  const TrajectoryResult r = no_jump(prop, grid);
  return r.final_state.amplitudes.normalized();
}

Probabilities no_jump_probabilities(const Propagator& prop, double spacing_gamma = 0.05,
                                    double rtol = 1e-6, double atol = 1e-9) {
  const auto grid = time_grid(prop.model().probe, spacing_gamma / kGe);
  return integrate_probabilities(no_jump(prop, grid, rtol, atol).record);
}

std::shared_ptr<const SiteModel> four_level_model(const AtomArray& array, const ProbePulse& probe,
                                                  cd drive, double drive_detuning, double eta,
                                                  int photons, double cavity_detuning,
                                                  double gamma_s, double gamma_r) {
  FourLevel f;
  f.drive.rabi = drive;
  f.drive.detuning = drive_detuning;
  f.cavity = {eta, cavity_detuning, photons};
  f.gamma_s = gamma_s;
  f.gamma_r = gamma_r;
  return testing::model_for(array, {f, probe, testing::beam_for(array.species)});
}

}  // namespace

TEST_CASE("ground state is stationary without a probe") {
  const AtomArray a = build_square_lattice(3, 2, 532e-9, kRb);
  ProbePulse dark = gaussian_pulse(2e-6, 0.0, 0.0);
  for (bool doubles : {false, true}) {
    const SiteModel m = make_site_model(a, build_coupling(a), testing::two_level_scheme(a, dark, doubles));
    const TrajectoryState g = ground_state(m.layout, 3);
    Eigen::VectorXcd dy;
    derivative_two_level(m, 0.3 * kGe, 1e-6, g.amplitudes, dy);
    CHECK(dy.norm() == 0.0);
  }
  const auto m4 = four_level_model(a, dark, 2.0 * kPi * 2e6, -0.1 * kGe, 2.0 * kPi * 2e6, 1, 0.0,
                                   1e-3 * kGe, 1e-3 * kGe);
  Eigen::VectorXcd dy;
  derivative_four_level(*m4, 0.0, 1e-6, ground_state(m4->layout, 1).amplitudes, dy);
  CHECK(dy.norm() == 0.0);
}

TEST_CASE("layout mismatches are rejected") {
  const AtomArray a = build_square_lattice(2, 2, 532e-9, kRb);
  const auto m = testing::model_for(a, testing::two_level_scheme(a, gaussian_pulse(2e-6, 1.0, 0.0)));
  Eigen::VectorXcd dy;
  CHECK_THROWS_AS(derivative_two_level(*m, 0.0, 0.0, Eigen::VectorXcd::Zero(3), dy),
                  std::invalid_argument);
  CHECK_THROWS_AS(derivative_four_level(*m, 0.0, 0.0, Eigen::VectorXcd::Zero(5), dy),
                  std::invalid_argument);
  DirectPropagator p(m, 0.0);
  StateLayout wrong = m->layout;
  wrong.doubles = true;
  CHECK_THROWS_AS(evolve_trajectory(p, ground_state(wrong, 1), {0.0, 1e-7}, JumpMode::no_jump),
                  std::invalid_argument);
  CHECK_THROWS_AS(evolve_trajectory(p, ground_state(m->layout, 1), {}, JumpMode::no_jump),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      evolve_trajectory(p, ground_state(m->layout, 1), {2e-7, 1e-7}, JumpMode::no_jump),
      std::invalid_argument);
}

TEST_CASE("single atom under weak cw drive follows the Lorentzian") {
  const AtomArray a = build_square_lattice(1, 1, 532e-9, kRb);
  const double rabi = 0.01 * kGe;
  const double end = 40.0 / kGe;
  const auto grid = testing::uniform_grid(end, 40);
  for (double det : {0.0, 0.5 * kGe, -1.3 * kGe}) {
    const ProbePulse probe = testing::continuous_probe(flux_for_rabi(rabi), det, end);
    const auto m = testing::model_for(a, testing::two_level_scheme(a, probe));
    const Eigen::VectorXcd y = final_normalized(DirectPropagator(m, det), grid);
    const cd ratio = y[1] / y[0];
    // g(0) = i, so Omega = i |Omega| and b/a = i Omega / (Gamma/2 - i Delta).
    const cd expected = cd(0.0, 1.0) * cd(0.0, rabi) / cd(0.5 * kGe, -det);
    CHECK(std::abs(ratio - expected) < 1e-3 * std::abs(expected));
    CHECK(std::norm(ratio) ==
          doctest::Approx(rabi * rabi / (det * det + 0.25 * kGe * kGe)).epsilon(2e-3));
  }
}

TEST_CASE("single atom reflection and transmission amplitudes") {
  // On resonance at the focus: alpha_R / alpha_p = 2 C^2 / Gamma_e = 1/(6 pi^2) for w0 = 3 lambda.
  const AtomArray a = build_square_lattice(1, 1, 532e-9, kRb);
  const double end = 40.0 / kGe;
  const ProbePulse probe = testing::continuous_probe(flux_for_rabi(0.005 * kGe), 0.0, end);
  const auto m = testing::model_for(a, testing::two_level_scheme(a, probe));
  const TrajectoryResult r = no_jump(DirectPropagator(m, 0.0), testing::uniform_grid(end, 40));
  const double alpha = r.record.alpha_in.back();
  const double beta = 1.0 / (6.0 * kPi * kPi);
  CHECK(std::norm(r.record.alpha_R.back() / alpha) == doctest::Approx(beta * beta).epsilon(1e-3));
  CHECK(std::norm(r.record.alpha_T.back() / alpha) ==
        doctest::Approx((1.0 - beta) * (1.0 - beta)).epsilon(1e-5));
}

TEST_CASE("two atoms: symmetric and antisymmetric modes") {
  const AtomArray a = build_square_lattice(2, 1, 0.68 * kRb.lambda_e, kRb);
  const CouplingKernel k = build_coupling(a);
  const double v12 = k.v_matrix(0, 1), g12 = k.gamma_matrix(0, 1);
  const auto m = testing::model_for(a, testing::two_level_scheme(a, gaussian_pulse(2e-6, 0.0, 0.0)));
  DirectPropagator prop(m, 0.0);
  const double t = 2.0 / kGe;
  for (double sign : {1.0, -1.0}) {
    TrajectoryState s = ground_state(m->layout, 1);
    s.amplitudes << 0.0, 1.0 / std::sqrt(2.0), sign / std::sqrt(2.0);
    TrajectoryOptions o;
    o.rtol = 1e-10;
    o.atol = 1e-13;
    const TrajectoryResult r = evolve_trajectory(prop, s, {0.0, t}, JumpMode::no_jump, o);
    // width Gamma_e +/- Gamma_12, frequency -(+/- V_12) relative to the probe frame
    const cd lambda(-0.5 * (kGe + sign * g12), sign * v12);
    const Eigen::VectorXcd expected = s.amplitudes * std::exp(lambda * t);
    CHECK((r.final_state.amplitudes - expected).norm() < 1e-7);
    CHECK(r.record.norm2.back() == doctest::Approx(std::exp(-(kGe + sign * g12) * t)).epsilon(1e-7));
  }
}

TEST_CASE("single-atom EIT: the dark state empties the excited level") {
  const AtomArray a = build_square_lattice(1, 1, 532e-9, kRb);
  const double end = 80.0 / kGe;
  const double rabi = 0.01 * kGe;
  const ProbePulse probe = testing::continuous_probe(flux_for_rabi(rabi), 0.0, end);
  const auto m = four_level_model(a, probe, kGe, 0.0, 0.3 * kGe, 0, 0.0, 0.0, 0.0);
  const Eigen::VectorXcd y = final_normalized(DirectPropagator(m, 0.0), testing::uniform_grid(end, 20));
  const double bright = rabi * rabi / (0.25 * kGe * kGe);
  CHECK(std::norm(y[1] / y[0]) < 1e-6 * bright);
  // The population sits in |s> with c/a = -Omega_p / Omega_d.
  CHECK(std::abs(y[2] / y[0] + cd(0.0, rabi) / kGe) < 1e-4 * rabi / kGe);
}

TEST_CASE("four-level linear response and the Autler-Townes doublet") {
  const AtomArray a = build_square_lattice(1, 1, 532e-9, kRb);
  const double end = 150.0 / kGe;
  const double rabi = 0.005 * kGe, od = 0.5 * kGe, eta = 0.3 * kGe, gs = 1e-3 * kGe;
  const auto grid = testing::uniform_grid(end, 20);

  const auto response = [&](double dp, int nc) {
    Eigen::Matrix3cd A;
    const cd i(0.0, 1.0);
    const double oc = eta * std::sqrt(static_cast<double>(nc));
    A << i * dp - 0.5 * kGe, i * od, 0.0,
         i * od, i * dp - 0.5 * gs, i * oc,
         0.0, i * oc, i * dp - 0.5 * gs;
    Eigen::Vector3cd src(i * cd(0.0, rabi), 0.0, 0.0);
    return Eigen::Vector3cd(A.partialPivLu().solve(-src));
  };

  for (int nc : {0, 1}) {
    for (double dp : {0.0, 0.1 * kGe, -0.3 * kGe, 0.45 * kGe}) {
      const ProbePulse probe = testing::continuous_probe(flux_for_rabi(rabi), dp, end);
      const auto m = four_level_model(a, probe, od, 0.0, eta, nc, 0.0, gs, gs);
      const Eigen::VectorXcd y = final_normalized(DirectPropagator(m, dp), grid);
      const Eigen::Vector3cd ref = response(dp, nc);
      CHECK(std::abs(y[1] / y[0] - ref[0]) < 2e-3 * std::abs(ref[0]) + 1e-9);
      CHECK(std::abs(y[2] / y[0] - ref[1]) < 2e-3 * ref.norm());
      CHECK(std::abs(y[3] / y[0] - ref[2]) < 2e-3 * ref.norm());
    }
  }
  // One cavity photon destroys the transparency at the EIT line and opens two
  // transparency windows at +/- Omega_c instead.
  CHECK(std::norm(response(0.0, 1)[0]) > 100.0 * std::norm(response(0.0, 0)[0]));
  CHECK(std::norm(response(eta, 1)[0]) < 1e-3 * std::norm(response(eta, 0)[0]));
}

TEST_CASE("four-level model without drive reduces to the two-level model") {
  const AtomArray a = build_square_lattice(3, 3, 532e-9, kRb);
  const ProbePulse probe = gaussian_pulse(0.3e-6, 1.0, 0.0);
  const auto two = testing::model_for(a, testing::two_level_scheme(a, probe));
  const auto four = four_level_model(a, probe, 0.0, -0.1 * kGe, 2.0 * kPi * 2e6, 1, 0.0,
                                     1e-3 * kGe, 1e-3 * kGe);
  for (double det : {0.0, 0.3 * kGe}) {
    const Probabilities p2 = no_jump_probabilities(DirectPropagator(two, det), 0.05, 1e-9, 1e-12);
    const Probabilities p4 = no_jump_probabilities(DirectPropagator(four, det), 0.05, 1e-9, 1e-12);
    CHECK(p4.p_T == doctest::Approx(p2.p_T).epsilon(1e-7));
    CHECK(p4.p_R == doctest::Approx(p2.p_R).epsilon(1e-7));
  }
}

TEST_CASE("modal and direct propagators agree") {
  const AtomArray a = apply_disorder(build_square_lattice(4, 4, 532e-9, kRb), 15e-9, 15e-9, 5);
  const ProbePulse probe = gaussian_pulse(0.3e-6, 1.0, 0.0);
  const auto grid = time_grid(probe, 0.05 / kGe);

  SUBCASE("two-level") {
    const auto m = testing::model_for(a, testing::two_level_scheme(a, probe));
    const auto basis = make_modal_basis(m);
    CHECK(basis->condition < 1e3);
    for (double det : {-0.2 * kGe, 0.17 * kGe}) {
      const TrajectoryResult d = no_jump(DirectPropagator(m, det), grid);
      const TrajectoryResult md = no_jump(ModalPropagator(basis, det), grid);
      REQUIRE(d.record.size() == md.record.size());
      double worst = 0.0;
      for (std::size_t k = 0; k < grid.size(); ++k) {
        worst = std::max(worst, std::abs(d.record.alpha_T[k] - md.record.alpha_T[k]));
        worst = std::max(worst, std::abs(d.record.alpha_R[k] - md.record.alpha_R[k]));
        CHECK(d.record.norm2[k] == doctest::Approx(md.record.norm2[k]).epsilon(1e-7));
      }
      CHECK(worst < 1e-6 * *std::max_element(d.record.alpha_in.begin(), d.record.alpha_in.end()));
      CHECK((d.final_state.amplitudes - md.final_state.amplitudes).norm() < 1e-7);
    }
  }

  SUBCASE("four-level") {
    const Vec3 kd(0.0, 0.0, 2.0 * kPi / 480e-9);
    FourLevel f;
    f.drive = {2.0 * kPi * 2e6, -0.172 * kGe, kd};
    f.cavity = {2.0 * kPi * 2e6, 0.0, 1};
    f.gamma_s = f.gamma_r = 1e-3 * kGe;
    const auto m = testing::model_for(a, {f, probe, testing::beam_for(kRb)});
    const auto basis = make_modal_basis(m);
    const double det = 0.17 * kGe;
    const Probabilities pd = no_jump_probabilities(DirectPropagator(m, det), 0.05, 1e-9, 1e-12);
    const Probabilities pm = no_jump_probabilities(ModalPropagator(basis, det), 0.05, 1e-9, 1e-12);
    CHECK(pm.p_T == doctest::Approx(pd.p_T).epsilon(1e-6));
    CHECK(pm.p_R == doctest::Approx(pd.p_R).epsilon(1e-6));
  }

  SUBCASE("stochastic") {
    const auto m = testing::model_for(a, testing::two_level_scheme(a, gaussian_pulse(0.3e-6, 4.0, 0.0)));
    const auto basis = make_modal_basis(m);
    DirectPropagator d(m, 0.1 * kGe);
    ModalPropagator md(basis, 0.1 * kGe);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto rd = evolve_trajectory(d, ground_state(m->layout, seed), grid, JumpMode::stochastic);
      const auto rm = evolve_trajectory(md, ground_state(m->layout, seed), grid, JumpMode::stochastic);
      REQUIRE(rd.jumps.size() == rm.jumps.size());
      for (std::size_t j = 0; j < rd.jumps.size(); ++j)
        CHECK(rd.jumps[j].time == doctest::Approx(rm.jumps[j].time).epsilon(1e-4));
    }
  }
}

TEST_CASE("modal basis refuses the doubles sector") {
  const AtomArray a = build_square_lattice(2, 2, 532e-9, kRb);
  const auto m = testing::model_for(a, testing::two_level_scheme(a, gaussian_pulse(2e-6, 1.0, 0.0), true));
  CHECK_THROWS_AS(make_modal_basis(m), std::invalid_argument);
}

TEST_CASE("norm decreases between jumps and resets at each jump") {
  const AtomArray a = build_square_lattice(3, 3, 532e-9, kRb);
  const ProbePulse probe = gaussian_pulse(0.2e-6, 20.0, 0.0);
  const auto m = testing::model_for(a, testing::two_level_scheme(a, probe));
  DirectPropagator prop(m, 0.17 * kGe);
  const auto grid = time_grid(probe, 0.02 / kGe);
  std::size_t total = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const TrajectoryResult r =
        evolve_trajectory(prop, ground_state(m->layout, seed), grid, JumpMode::stochastic);
    total += r.jumps.size();
    std::size_t next_jump = 0;
    for (std::size_t k = 1; k < r.record.size(); ++k) {
      const double t = r.record.times[k];
      const bool crossed = next_jump < r.jumps.size() && r.jumps[next_jump].time < t;
      if (crossed) {
        while (next_jump < r.jumps.size() && r.jumps[next_jump].time < t) ++next_jump;
        continue;
      }
      CHECK(r.record.norm2[k] <= r.record.norm2[k - 1] * (1.0 + 1e-9));
      CHECK(r.record.norm2[k] > 0.0);
    }
    CHECK(r.final_state.norm2 ==
          doctest::Approx(r.final_state.amplitudes.squaredNorm()).epsilon(1e-8));
    CHECK(r.final_state.jump_count == static_cast<int>(r.jumps.size()));
    for (const auto& j : r.jumps) CHECK(j.channel == -1);
  }
  CHECK(total > 10);
}

TEST_CASE("global optical phase leaves the probabilities unchanged") {
  const AtomArray a = build_square_lattice(4, 4, 532e-9, kRb);
  const ProbePulse probe = gaussian_pulse(0.3e-6, 1.0, 0.0);
  const auto m = testing::model_for(a, testing::two_level_scheme(a, probe));
  auto shifted = std::make_shared<SiteModel>(*m);
  const cd phase = std::polar(1.0, 1.234);
  shifted->forward *= phase;
  shifted->backward *= phase;
  const Probabilities p = no_jump_probabilities(DirectPropagator(m, 0.17 * kGe));
  const Probabilities q = no_jump_probabilities(DirectPropagator(shifted, 0.17 * kGe));
  CHECK(q.p_T == doctest::Approx(p.p_T).epsilon(1e-9));
  CHECK(q.p_R == doctest::Approx(p.p_R).epsilon(1e-9));
}

TEST_CASE("reflection is reciprocal for an in-plane array") {
  const AtomArray a = apply_disorder(build_square_lattice(4, 4, 532e-9, kRb), 20e-9, 0.0, 9);
  const ProbePulse probe = gaussian_pulse(0.3e-6, 1.0, 0.0);
  const auto m = testing::model_for(a, testing::two_level_scheme(a, probe));
  auto swapped = std::make_shared<SiteModel>(*m);
  std::swap(swapped->forward, swapped->backward);
  const Probabilities p = no_jump_probabilities(DirectPropagator(m, 0.1 * kGe));
  const Probabilities q = no_jump_probabilities(DirectPropagator(swapped, 0.1 * kGe));
  CHECK(std::abs(q.p_R - p.p_R) < 1e-10);
}

TEST_CASE("default tolerances are converged for the 16x16 mirror") {
  const AtomArray a = build_square_lattice(16, 16, 532e-9, kRb);
  const auto m = testing::model_for(a, testing::two_level_scheme(a, gaussian_pulse(2e-6, 1.0, 0.0)));
  const auto basis = make_modal_basis(m);
  const ModalPropagator prop(basis, 0.172 * kGe);
  const Probabilities coarse = no_jump_probabilities(prop, 0.025, 1e-6, 1e-9);
  const Probabilities fine = no_jump_probabilities(prop, 0.025, 1e-9, 1e-12);
  CHECK(std::abs(coarse.p_T - fine.p_T) < 1e-4);
  CHECK(std::abs(coarse.p_R - fine.p_R) < 1e-4);
  CHECK(fine.p_R > 0.99);
  CHECK(fine.p_T < 0.01);
  CHECK_FALSE(fine.window_short);
}

TEST_CASE("far-detuned probe is transmitted") {
  const AtomArray a = build_square_lattice(16, 16, 532e-9, kRb);
  const auto m = testing::model_for(a, testing::two_level_scheme(a, gaussian_pulse(2e-6, 1.0, 0.0)));
  const Probabilities p = no_jump_probabilities(ModalPropagator(make_modal_basis(m), 10.0 * kGe));
  CHECK(p.p_T > 0.99);
}

TEST_CASE("no atoms or no light: nothing happens") {
  const ProbePulse probe = gaussian_pulse(0.2e-6, 1.0, 0.0);
  const AtomArray none = empty_array(kRb);
  const auto m0 = testing::model_for(none, testing::two_level_scheme(none, probe));
  const auto grid = time_grid(probe, 0.05 / kGe);
  const TrajectoryResult r = evolve_trajectory(DirectPropagator(m0, 0.0),
                                               ground_state(m0->layout, 1), grid,
                                               JumpMode::stochastic);
  CHECK(r.jumps.empty());
  for (std::size_t k = 0; k < r.record.size(); ++k) {
    CHECK(r.record.alpha_T[k] == cd(r.record.alpha_in[k], 0.0));
    CHECK(r.record.alpha_R[k] == cd(0.0, 0.0));
    CHECK(r.record.norm2[k] == 1.0);
  }
  CHECK(integrate_probabilities(r.record).p_T == 1.0);

  const AtomArray a = build_square_lattice(2, 2, 532e-9, kRb);
  const auto dark = testing::model_for(a, testing::two_level_scheme(a, gaussian_pulse(0.2e-6, 0.0, 0.0)));
  const TrajectoryResult d = evolve_trajectory(DirectPropagator(dark, 0.0),
                                               ground_state(dark->layout, 1), grid,
                                               JumpMode::stochastic);
  CHECK(d.jumps.empty());
  CHECK(d.final_state.norm2 == 1.0);
}

TEST_CASE("single-atom no-jump norm equals the integrated emission") {
  // d ln(norm2)/dt = -Gamma_e P_e for one atom, with P_e the normalized excited population.
  const AtomArray a = build_square_lattice(1, 1, 532e-9, kRb);
  const ProbePulse probe = gaussian_pulse(0.1e-6, 50.0, 0.0);
  const auto m = testing::model_for(a, testing::two_level_scheme(a, probe));
  const auto grid = time_grid(probe, 0.005 / kGe);
  const TrajectoryResult r = no_jump(DirectPropagator(m, 0.2 * kGe), grid);
  double integral = 0.0;
  for (std::size_t k = 0; k + 1 < grid.size(); ++k)
    integral += 0.5 * (grid[k + 1] - grid[k]) * (r.record.excited[k] + r.record.excited[k + 1]);
  CHECK(r.record.norm2.back() < 0.9);
  CHECK(r.record.norm2.back() == doctest::Approx(std::exp(-kGe * integral)).epsilon(1e-4));
}

TEST_CASE("single-atom jump rate matches Gamma_e rho_ee in steady state") {
  const AtomArray a = build_square_lattice(1, 1, 532e-9, kRb);
  const double rabi = 0.5 * kGe, start = 8.0 / kGe, end = 33.0 / kGe;
  const ProbePulse probe = testing::continuous_probe(flux_for_rabi(rabi), 0.0, end);
  const auto m = testing::model_for(a, testing::two_level_scheme(a, probe));
  DirectPropagator prop(m, 0.0);
  const std::size_t trajectories = 1000;
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t s = 0; s < trajectories; ++s) {
    const auto r = evolve_trajectory(prop, ground_state(m->layout, 1000 + s), {0.0, end},
                                     JumpMode::stochastic);
    double count = 0.0;
    for (const auto& j : r.jumps) count += j.time >= start ? 1.0 : 0.0;
    sum += count;
    sum2 += count * count;
  }
  const auto n = static_cast<double>(trajectories);
  const double mean = sum / n;
  const double err = std::sqrt((sum2 / n - mean * mean) / (n - 1.0));
  // rho_ee = |Omega|^2 / (Delta^2 + Gamma^2/4 + 2 |Omega|^2) = 1/3
  const double expected = kGe * (end - start) / 3.0;
  CHECK(std::abs(mean - expected) < 3.0 * err);
}

TEST_CASE("doubles-sector jumps lower the excitation number") {
  const AtomArray a = build_square_lattice(3, 1, 0.4 * kRb.lambda_e, kRb);
  const auto m = testing::model_for(a, testing::two_level_scheme(a, gaussian_pulse(2e-6, 1.0, 0.0), true));
  const DirectPropagator prop(m, 0.0);
  const StateLayout& L = m->layout;
  std::mt19937_64 rng(4);

  Eigen::VectorXcd y = Eigen::VectorXcd::Zero(L.size());
  y[L.b2_offset() + L.pair_index(0, 2)] = 0.6;
  y[L.b2_offset() + L.pair_index(1, 2)] = cd(0.0, 0.8);
  const int channel = prop.jump(y, rng);
  CHECK(channel >= 0);
  CHECK(y.norm() == doctest::Approx(1.0));
  CHECK(std::abs(y[0]) == 0.0);
  CHECK(y.segment(L.b2_offset(), L.pair_count()).norm() == 0.0);

  Eigen::VectorXcd single = Eigen::VectorXcd::Zero(L.size());
  single[L.b_offset() + 1] = 1.0;
  prop.jump(single, rng);
  CHECK(std::abs(single[0]) == doctest::Approx(1.0));
  CHECK(single.segment(L.b_offset(), L.atoms).norm() == 0.0);
}

TEST_CASE("doubles sector is a small correction at weak drive") {
  const AtomArray a = build_square_lattice(3, 3, 532e-9, kRb);
  const ProbePulse probe = gaussian_pulse(0.3e-6, 0.1, 0.0);
  const auto singles = testing::model_for(a, testing::two_level_scheme(a, probe, false));
  const auto doubles = testing::model_for(a, testing::two_level_scheme(a, probe, true));
  const Probabilities p1 = no_jump_probabilities(DirectPropagator(singles, 0.1 * kGe));
  const Probabilities p2 = no_jump_probabilities(DirectPropagator(doubles, 0.1 * kGe));
  CHECK(std::abs(p1.p_R - p2.p_R) < 1e-3);
  CHECK(std::abs(p1.p_T - p2.p_T) < 1e-3);
}

#include "oracle_cases.hpp"

#include <doctest.h>

using namespace atomarray;

TEST_CASE("master equation keeps rho a density matrix") {
  for (const auto& c : testing::oracle_cases()) {
    CAPTURE(c.name);
    const testing::MasterEquation me(*c.model, c.detuning);
    const auto rho = me.solve(0.0, c.grid, 2e-3 / c.model->gamma_e);
    for (const auto& r : rho) {
      CHECK(r.trace().real() == doctest::Approx(1.0).epsilon(1e-9));
      CHECK((r - r.adjoint()).norm() < 1e-10);
    }
  }
}

TEST_CASE("trajectory ensembles reproduce the master equation") {
  for (const auto& c : testing::oracle_cases()) {
    CAPTURE(c.name);
    const auto report = testing::compare_with_trajectories(c.model, c.detuning, c.grid, 400, 11);
    CHECK(report.jumps > 400);
    CHECK(report.worst() < 3.0);
  }
}

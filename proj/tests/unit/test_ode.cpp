#include "atomarray/errors.hpp"
#include "atomarray/ode.hpp"

#include <doctest.h>

#include <cmath>
#include <complex>

using namespace atomarray;
using cd = std::complex<double>;

namespace {

struct Linear final : OdeSystem {
  cd rate;
  explicit Linear(cd r) : rate(r) {}
  void derivative(double, const Eigen::VectorXcd& y, Eigen::VectorXcd& dy) const override {
    dy = rate * y;
  }
};

struct Blowup final : OdeSystem {
  void derivative(double, const Eigen::VectorXcd& y, Eigen::VectorXcd& dy) const override {
    dy = y.cwiseProduct(y);
  }
};

}  // namespace

TEST_CASE("damped oscillation to tight tolerance") {
  const Linear sys({-1.0, 5.0});
  DormandPrince5 ode(sys, {1e-10, 1e-12});
  Eigen::VectorXcd y0(2);
  y0 << cd(1.0, 0.0), cd(0.0, 2.0);
  ode.reset(0.0, y0);
  while (ode.t() < 3.0) ode.step(3.0);
  CHECK(ode.t() == 3.0);
  const Eigen::VectorXcd exact = y0 * std::exp(sys.rate * 3.0);
  CHECK((ode.y() - exact).norm() < 1e-8);
  CHECK(ode.accepted_steps() > 10);
}

TEST_CASE("dense output between steps") {
  const Linear sys({-0.5, 3.0});
  DormandPrince5 ode(sys, {1e-9, 1e-12});
  Eigen::VectorXcd y0 = Eigen::VectorXcd::Ones(1), out;
  ode.reset(0.0, y0);
  double worst = 0.0;
  while (ode.t() < 4.0) {
    ode.step(4.0);
    for (double theta : {0.1, 0.37, 0.5, 0.81}) {
      const double t = ode.t_old() + theta * ode.step_size();
      ode.dense_state(t, out);
      worst = std::max(worst, std::abs(out[0] - std::exp(sys.rate * t)));
    }
  }
  CHECK(worst < 1e-7);

  const auto w0 = DormandPrince5::dense_weights(0.0);
  const auto w1 = DormandPrince5::dense_weights(1.0);
  double s0 = 0.0, s1 = 0.0;
  for (std::size_t i = 0; i < 7; ++i) {
    s0 += std::abs(w0[i]);
    s1 += w1[i];
  }
  CHECK(s0 == 0.0);
  CHECK(s1 == doctest::Approx(1.0));
}

TEST_CASE("max step is respected") {
  const Linear sys({0.0, 0.0});
  DormandPrince5::Options o;
  o.max_step = 0.1;
  DormandPrince5 ode(sys, o);
  ode.reset(0.0, Eigen::VectorXcd::Ones(1));
  while (ode.t() < 1.0) {
    ode.step(1.0);
    CHECK(ode.step_size() <= 0.1 + 1e-15);
  }
}

TEST_CASE("finite-time blow-up raises IntegrationFailure") {
  const Blowup sys;
  DormandPrince5 ode(sys, {});
  ode.reset(0.0, Eigen::VectorXcd::Ones(1));
  CHECK_THROWS_AS(
      [&] {
        while (ode.t() < 2.0) ode.step(2.0);
      }(),
      IntegrationFailure);
}

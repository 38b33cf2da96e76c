#include "atomarray/ode.hpp"

#include "atomarray/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace atomarray {

namespace {

constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;

constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                 a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                 a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                 b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;

// b - b_hat
constexpr std::array<double, 7> kError = {71.0 / 57600.0,      0.0, -71.0 / 16695.0,
                                          71.0 / 1920.0,       -17253.0 / 339200.0,
                                          22.0 / 525.0,        -1.0 / 40.0};

// Continuous extension: w_i(theta) = sum_j P[i][j] theta^(j+1).
constexpr double kDense[7][4] = {
    {1.0, -8048581381.0 / 2820520608.0, 8663915743.0 / 2820520608.0,
     -12715105075.0 / 11282082432.0},
    {0.0, 0.0, 0.0, 0.0},
    {0.0, 131558114200.0 / 32700410799.0, -68118460800.0 / 10900136933.0,
     87487479700.0 / 32700410799.0},
    {0.0, -1754552775.0 / 470086768.0, 14199869525.0 / 1410260304.0,
     -10690763975.0 / 1880347072.0},
    {0.0, 127303824393.0 / 49829197408.0, -318862633887.0 / 49829197408.0,
     701980252875.0 / 199316789632.0},
    {0.0, -282668133.0 / 205662961.0, 2019193451.0 / 616988883.0,
     -1453857185.0 / 822651844.0},
    {0.0, 40617522.0 / 29380423.0, -110615467.0 / 29380423.0, 69997945.0 / 29380423.0},
};

constexpr double kSafety = 0.9;
constexpr double kMinFactor = 0.2;
constexpr double kMaxFactor = 10.0;

}  // namespace

DormandPrince5::DormandPrince5(const OdeSystem& system, Options options)
    : system_(system), options_(options) {}

void DormandPrince5::reset(double t, const Eigen::VectorXcd& y) {
  t_ = t_old_ = t;
  y_ = y;
  y_old_ = y;
  for (auto& k : k_) k.resize(y.size());
  y_trial_.resize(y.size());
  scratch_.resize(y.size());
  system_.derivative(t_, y_, k_[0]);
  k_[6] = k_[0];

  if (options_.initial_step > 0.0) {
    h_next_ = options_.initial_step;
  } else {
    const double scale = options_.atol + options_.rtol * y_.cwiseAbs().maxCoeff();
    const double rate = k_[0].cwiseAbs().maxCoeff();
    h_next_ = rate > 0.0 ? 0.01 * scale / rate : 1e-6;
  }
  h_next_ = std::min(h_next_, options_.max_step);
}

double DormandPrince5::error_norm(double h) const {
  const Eigen::Index n = y_.size();
  if (n == 0) return 0.0;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    std::complex<double> e{0.0, 0.0};
    for (std::size_t s = 0; s < 7; ++s) {
      if (kError[s] != 0.0) e += kError[s] * k_[s][i];
    }
    const double sc =
        options_.atol + options_.rtol * std::max(std::abs(y_[i]), std::abs(y_trial_[i]));
    const double r = h * std::abs(e) / sc;
    sum += r * r;
  }
  return std::sqrt(sum / static_cast<double>(n));
}

void DormandPrince5::step(double t_bound) {
  if (t_bound <= t_) return;
  // First-same-as-last: k_7 of the previous step is f(t_, y_). Stages are kept
  // until the next call so dense output of the last step stays valid.
  std::swap(k_[0], k_[6]);
  bool rejected_once = false;
  for (;;) {
    double h = std::min(h_next_, t_bound - t_);
    const double floor = std::max(options_.min_step, 1e-14 * std::max(std::abs(t_), 1e-300));
    if (h < floor && t_bound - t_ > floor)
      throw IntegrationFailure(
          fmt::format("step size {:.3e} underflow at t = {:.6e}", h, t_));

    auto& s = scratch_;
    s = y_ + h * a21 * k_[0];
    system_.derivative(t_ + c2 * h, s, k_[1]);
    s = y_ + h * (a31 * k_[0] + a32 * k_[1]);
    system_.derivative(t_ + c3 * h, s, k_[2]);
    s = y_ + h * (a41 * k_[0] + a42 * k_[1] + a43 * k_[2]);
    system_.derivative(t_ + c4 * h, s, k_[3]);
    s = y_ + h * (a51 * k_[0] + a52 * k_[1] + a53 * k_[2] + a54 * k_[3]);
    system_.derivative(t_ + c5 * h, s, k_[4]);
    s = y_ + h * (a61 * k_[0] + a62 * k_[1] + a63 * k_[2] + a64 * k_[3] + a65 * k_[4]);
    system_.derivative(t_ + h, s, k_[5]);
    y_trial_ = y_ + h * (b1 * k_[0] + b3 * k_[2] + b4 * k_[3] + b5 * k_[4] + b6 * k_[5]);
    system_.derivative(t_ + h, y_trial_, k_[6]);

    const double err = error_norm(h);
    if (!std::isfinite(err))
      throw IntegrationFailure(fmt::format("non-finite state at t = {:.6e}", t_));

    if (err <= 1.0) {
      double factor = err == 0.0 ? kMaxFactor : kSafety * std::pow(err, -0.2);
      factor = std::clamp(factor, kMinFactor, rejected_once ? 1.0 : kMaxFactor);
      h_next_ = std::min(h * factor, options_.max_step);
      t_old_ = t_;
      // Snap to the bound to avoid a sliver step.
      t_ = (t_bound - (t_ + h) <= 1e-12 * std::abs(t_bound)) ? t_bound : t_ + h;
      y_old_.swap(y_);
      y_.swap(y_trial_);
      ++accepted_;
      return;
    }
    ++rejected_;
    rejected_once = true;
    h_next_ = h * std::max(kMinFactor, kSafety * std::pow(err, -0.2));
  }
}

std::array<double, 7> DormandPrince5::dense_weights(double theta) {
  std::array<double, 7> w{};
  const double t1 = theta, t2 = theta * theta, t3 = t2 * theta, t4 = t3 * theta;
  for (std::size_t i = 0; i < 7; ++i)
    w[i] = kDense[i][0] * t1 + kDense[i][1] * t2 + kDense[i][2] * t3 + kDense[i][3] * t4;
  return w;
}

void DormandPrince5::dense_state(double t, Eigen::VectorXcd& out) const {
  const double h = t_ - t_old_;
  if (h <= 0.0) {
    out = y_;
    return;
  }
  const auto w = dense_weights((t - t_old_) / h);
  out = y_old_;
  for (std::size_t i = 0; i < 7; ++i) {
    if (w[i] != 0.0) out += (h * w[i]) * k_[i];
  }
}

}  // namespace atomarray

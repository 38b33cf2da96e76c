#pragma once

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <limits>

namespace atomarray {

class OdeSystem {
 public:
  virtual ~OdeSystem() = default;
  virtual void derivative(double t, const Eigen::VectorXcd& y, Eigen::VectorXcd& dy) const = 0;
};

// Dormand-Prince 5(4) with the 4th-order continuous extension.
// Error control is per-component: err_i / (atol + rtol max(|y_old_i|, |y_i|)), RMS norm.
class DormandPrince5 {
 public:
  struct Options {
    double rtol = 1e-6;
    double atol = 1e-9;
    double initial_step = 0.0;  // 0 selects a step from the derivative scale
    double max_step = std::numeric_limits<double>::infinity();
    double min_step = 0.0;      // absolute floor; below it step() throws
  };

  DormandPrince5(const OdeSystem& system, Options options);

  // Restart at (t, y); evaluates the first stage.
  void reset(double t, const Eigen::VectorXcd& y);

  // One accepted step, never past t_bound. Throws IntegrationFailure when the
  // step size underflows or the state becomes non-finite.
  void step(double t_bound);

  double t() const { return t_; }
  double t_old() const { return t_old_; }
  double step_size() const { return t_ - t_old_; }
  const Eigen::VectorXcd& y() const { return y_; }
  const Eigen::VectorXcd& y_old() const { return y_old_; }
  // k_1 .. k_7 of the last accepted step; k_7 = f(t, y).
  const Eigen::VectorXcd& stage(std::size_t i) const { return k_[i]; }

  // y(t_old + theta h) = y_old + h * sum_i w_i(theta) k_i
  static std::array<double, 7> dense_weights(double theta);
  void dense_state(double t, Eigen::VectorXcd& out) const;

  std::size_t accepted_steps() const { return accepted_; }
  std::size_t rejected_steps() const { return rejected_; }

 private:
  double error_norm(double h) const;

  const OdeSystem& system_;
  Options options_;
  double t_ = 0.0;
  double t_old_ = 0.0;
  double h_next_ = 0.0;
  Eigen::VectorXcd y_;
  Eigen::VectorXcd y_old_;
  Eigen::VectorXcd y_trial_;
  Eigen::VectorXcd scratch_;
  std::array<Eigen::VectorXcd, 7> k_;
  std::size_t accepted_ = 0;
  std::size_t rejected_ = 0;
};

}  // namespace atomarray

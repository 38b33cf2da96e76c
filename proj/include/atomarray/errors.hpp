#pragma once

#include <stdexcept>
#include <string>

namespace atomarray {

// Two atoms (or a field point and an atom) closer than the kernel can resolve.
class SingularSeparation : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// The collective decay matrix has an eigenvalue below -1e-10 Gamma_e.
class PsdViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Adaptive step collapsed or the state left the representable range.
class IntegrationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace atomarray

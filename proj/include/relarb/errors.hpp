#pragma once

#include <stdexcept>
#include <string>

namespace relarb {

/// A model or sampler input is outside its admissible domain.
class DomainError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// The diffusion matrix could not be inverted at the requested state.
class SingularMatrix : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// The stochastic clock did not reach the horizon within the step cap.
class BudgetExceeded : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class RegressionIllConditioned : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Bad configuration file, preset, or flag. Carries the offending key/line.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace relarb

#pragma once

#include <stdexcept>
#include <string>

namespace abc {

// Invalid model or call parameters.
class ParameterError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Quadrature / series / exponential did not reach its tolerance.
class NumericalError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Malformed or inconsistent run configuration.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

} // namespace abc

#pragma once

#include <stdexcept>
#include <string>

namespace topicstab {

// Bad inputs, malformed files, contract violations. CLI exit code 3.
class ValidationError : public std::runtime_error {
public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failures (non-convergence, non-finite values). CLI exit code 4.
class NumericalError : public std::runtime_error {
public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace topicstab

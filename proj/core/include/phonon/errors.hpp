#pragma once

#include <stdexcept>
#include <string>

namespace phonon {

// Input or parameter violates a documented invariant. The CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Evaluation produced an invalid numerical state. The CLI maps this to exit code 3.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace phonon

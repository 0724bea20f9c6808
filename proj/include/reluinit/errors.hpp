#pragma once

#include <stdexcept>
#include <string>

namespace reluinit {

// Invalid parameters for a distribution, configuration or data set.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Argument outside the domain on which an operation is defined.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A neuron with zero weight vector has no edge and no state.
class ConstantNeuronError : public DomainError {
 public:
  ConstantNeuronError()
      : DomainError("neuron has zero weight vector (constant neuron)") {}
};

// The state formulas require a continuous knot distribution.
class UnsupportedContinuityError : public DomainError {
 public:
  using DomainError::DomainError;
};

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace reluinit

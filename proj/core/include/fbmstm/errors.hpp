#pragma once

#include <stdexcept>

namespace fbmstm {

// Base class for numerical failures raised by this library. Precondition
// violations throw std::domain_error or std::invalid_argument instead.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CapExceeded : public Error {
 public:
  using Error::Error;
};

class CirculantEmbeddingFailure : public Error {
 public:
  using Error::Error;
};

class DegenerateDenominator : public Error {
 public:
  using Error::Error;
};

class ImplicitSolveFailure : public Error {
 public:
  using Error::Error;
};

class RangeExceeded : public Error {
 public:
  using Error::Error;
};

class PoleError : public Error {
 public:
  using Error::Error;
};

class QuadratureFailure : public Error {
 public:
  using Error::Error;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

}  // namespace fbmstm

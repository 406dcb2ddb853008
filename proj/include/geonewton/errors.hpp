#pragma once

#include <stdexcept>
#include <string>

namespace geonewton {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A documented precondition on the arguments was violated (dimension
/// mismatch, point off the manifold, tangent vectors at different bases).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// Invalid pairing of manifold, retraction family and objective.
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

/// Logarithm requested at or beyond the cut locus.
class CutLocusError : public Error {
 public:
  using Error::Error;
};

/// No small-norm preimage under the retraction could be found.
class InversionFailure : public Error {
 public:
  using Error::Error;
};

/// The objective produced a non-finite value.
class EvaluationError : public Error {
 public:
  using Error::Error;
};

/// A measurement was requested at a point that does not satisfy its
/// mathematical precondition (e.g. a non-critical "critical point").
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Too few usable samples survived the noise floor to fit a rate.
class InsufficientData : public Error {
 public:
  using Error::Error;
};

/// Hessian is numerically singular (condition estimate above the cap).
class SingularHessian : public Error {
 public:
  using Error::Error;
};

class NotImplementedError : public Error {
 public:
  using Error::Error;
};

}  // namespace geonewton

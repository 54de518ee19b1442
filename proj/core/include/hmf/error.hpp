#pragma once

#include <stdexcept>
#include <string>

namespace hmf {

// Validation errors map to exit code 1, numerical failures to exit code 2.
enum class ErrorClass { Validation, Numerical };

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, std::string name, const std::string& what)
      : std::runtime_error(name + ": " + what), cls_(cls), name_(std::move(name)) {}

  ErrorClass error_class() const { return cls_; }
  const std::string& name() const { return name_; }
  int exit_code() const { return cls_ == ErrorClass::Validation ? 1 : 2; }

 private:
  ErrorClass cls_;
  std::string name_;
};

#define HMF_DECLARE_ERROR(Name, Cls)                                   \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& what) : Error(Cls, #Name, what) {} \
  };

HMF_DECLARE_ERROR(ConfigError, ErrorClass::Validation)
HMF_DECLARE_ERROR(IoError, ErrorClass::Validation)
HMF_DECLARE_ERROR(EnvelopeViolation, ErrorClass::Validation)
HMF_DECLARE_ERROR(SpectrumNotPositive, ErrorClass::Validation)
HMF_DECLARE_ERROR(BadTruncation, ErrorClass::Validation)
HMF_DECLARE_ERROR(DimensionMismatch, ErrorClass::Validation)
HMF_DECLARE_ERROR(LagTooLarge, ErrorClass::Validation)
HMF_DECLARE_ERROR(GridMismatch, ErrorClass::Validation)
HMF_DECLARE_ERROR(ShapeMismatch, ErrorClass::Validation)
HMF_DECLARE_ERROR(WindowMismatch, ErrorClass::Validation)
HMF_DECLARE_ERROR(EnsembleTooSmall, ErrorClass::Validation)
HMF_DECLARE_ERROR(InsufficientReplicas, ErrorClass::Validation)
HMF_DECLARE_ERROR(NotPSD2x2, ErrorClass::Numerical)
HMF_DECLARE_ERROR(SingularOperator, ErrorClass::Numerical)
HMF_DECLARE_ERROR(SingularSigma, ErrorClass::Numerical)
HMF_DECLARE_ERROR(NoConvergence, ErrorClass::Numerical)

#undef HMF_DECLARE_ERROR

}  // namespace hmf

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace rwre {

/// Coarse error classes; the CLI maps each one to a distinct exit code.
enum class ErrorClass {
  kConfig,
  kEligibility,
  kNonConvergence,
  kGuardBreach,
  kDomain,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, std::string name, const std::string& what)
      : std::runtime_error(name + ": " + what), class_(cls), name_(std::move(name)) {}

  ErrorClass error_class() const noexcept { return class_; }
  const std::string& name() const noexcept { return name_; }

 private:
  ErrorClass class_;
  std::string name_;
};

#define RWRE_DEFINE_ERROR(Type, cls)                                            \
  class Type : public Error {                                                   \
   public:                                                                      \
    explicit Type(const std::string& what) : Error(cls, #Type, what) {}         \
  }

// Model or configuration is malformed.
RWRE_DEFINE_ERROR(ModelError, ErrorClass::kConfig);
RWRE_DEFINE_ERROR(ConfigError, ErrorClass::kConfig);

RWRE_DEFINE_ERROR(NotCltEligible, ErrorClass::kEligibility);

RWRE_DEFINE_ERROR(NonSummable, ErrorClass::kNonConvergence);
RWRE_DEFINE_ERROR(QuadratureError, ErrorClass::kNonConvergence);
RWRE_DEFINE_ERROR(MomentDivergence, ErrorClass::kNonConvergence);

RWRE_DEFINE_ERROR(LeftGuardBreach, ErrorClass::kGuardBreach);
RWRE_DEFINE_ERROR(RightGuardBreach, ErrorClass::kGuardBreach);
RWRE_DEFINE_ERROR(StepBudgetExceeded, ErrorClass::kGuardBreach);

RWRE_DEFINE_ERROR(WindowTooSmall, ErrorClass::kDomain);
RWRE_DEFINE_ERROR(IndexOutOfWindow, ErrorClass::kDomain);
RWRE_DEFINE_ERROR(DomainError, ErrorClass::kDomain);

#undef RWRE_DEFINE_ERROR

}  // namespace rwre

#pragma once

#include <stdexcept>
#include <string>

namespace nhqm {

// Base of every error raised by the library. Physics errors mean the model
// itself is outside the regime the method covers; input errors mean the
// caller asked for something malformed.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class PhysicsError : public Error {
  public:
    using Error::Error;
};

class InputError : public Error {
  public:
    using Error::Error;
};

#define NHQM_DEFINE_ERROR(Name, Base)     \
    class Name : public Base {            \
      public:                             \
        using Base::Base;                 \
    };

NHQM_DEFINE_ERROR(ExceptionalPoint, PhysicsError)
NHQM_DEFINE_ERROR(PairingFailure, PhysicsError)
NHQM_DEFINE_ERROR(ModeTrackingLost, PhysicsError)
NHQM_DEFINE_ERROR(BranchJump, PhysicsError)
NHQM_DEFINE_ERROR(NonFinite, PhysicsError)
NHQM_DEFINE_ERROR(NoConvergence, PhysicsError)
NHQM_DEFINE_ERROR(AdiabaticityViolated, PhysicsError)
NHQM_DEFINE_ERROR(ModeCollapse, PhysicsError)

NHQM_DEFINE_ERROR(DimensionMismatch, InputError)
NHQM_DEFINE_ERROR(DimensionError, InputError)
NHQM_DEFINE_ERROR(GaugeConflict, InputError)
NHQM_DEFINE_ERROR(StepTooLarge, InputError)
NHQM_DEFINE_ERROR(NotClosed, InputError)
NHQM_DEFINE_ERROR(ConfigError, InputError)

#undef NHQM_DEFINE_ERROR

}  // namespace nhqm

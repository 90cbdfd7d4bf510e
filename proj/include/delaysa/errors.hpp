#pragma once

#include <stdexcept>
#include <string>

namespace delaysa {

// Root of every error the library raises on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define DELAYSA_DEFINE_ERROR(Name)          \
    class Name : public Error {             \
    public:                                 \
        using Error::Error;                 \
    };

// chain
DELAYSA_DEFINE_ERROR(NonStochasticRow)
DELAYSA_DEFINE_ERROR(Reducible)
DELAYSA_DEFINE_ERROR(Periodic)
DELAYSA_DEFINE_ERROR(NoConvergence)
DELAYSA_DEFINE_ERROR(CapExceeded)
// operators
DELAYSA_DEFINE_ERROR(DimensionMismatch)
DELAYSA_DEFINE_ERROR(SingularSystem)
DELAYSA_DEFINE_ERROR(MonotonicityViolation)
DELAYSA_DEFINE_ERROR(InvalidInstance)
// schedule / engine
DELAYSA_DEFINE_ERROR(TraceExhausted)
DELAYSA_DEFINE_ERROR(NonFinite)
// metrics
DELAYSA_DEFINE_ERROR(AllDiverged)
DELAYSA_DEFINE_ERROR(MissingIterates)
DELAYSA_DEFINE_ERROR(WindowTooSmall)
// verify
DELAYSA_DEFINE_ERROR(StepSizeTooLarge)
// experiments
DELAYSA_DEFINE_ERROR(ConfigInvalid)

#undef DELAYSA_DEFINE_ERROR

}  // namespace delaysa

#pragma once

#include <stdexcept>
#include <string>

namespace asql {

// Base of every error raised by the library. kind() is the stable,
// machine-readable name reported by the CLI.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual const char* kind() const noexcept { return "Error"; }
};

#define ASQL_DEFINE_ERROR(Name)                                          \
    class Name : public Error {                                          \
    public:                                                              \
        using Error::Error;                                              \
        const char* kind() const noexcept override { return #Name; }     \
    }

ASQL_DEFINE_ERROR(SyntaxError);
ASQL_DEFINE_ERROR(ValidationError);
ASQL_DEFINE_ERROR(ConflictError);
ASQL_DEFINE_ERROR(CycleError);
ASQL_DEFINE_ERROR(CapacityError);
ASQL_DEFINE_ERROR(TransportError);
ASQL_DEFINE_ERROR(ProtocolError);
ASQL_DEFINE_ERROR(StarvationError);
ASQL_DEFINE_ERROR(QuantityError);
ASQL_DEFINE_ERROR(EmptyRegionError);
ASQL_DEFINE_ERROR(ShapeError);
ASQL_DEFINE_ERROR(NonFiniteError);
ASQL_DEFINE_ERROR(FormatError);
ASQL_DEFINE_ERROR(IOError);

#undef ASQL_DEFINE_ERROR

}  // namespace asql

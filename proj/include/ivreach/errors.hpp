#pragma once

#include <stdexcept>
#include <string>

namespace ivreach {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define IVREACH_DEFINE_ERROR(Name)                                   \
    class Name : public Error {                                      \
    public:                                                          \
        explicit Name(const std::string& what)                       \
            : Error(std::string(#Name) + ": " + what) {}             \
    }

IVREACH_DEFINE_ERROR(ShapeMismatch);
IVREACH_DEFINE_ERROR(OrderViolation);
IVREACH_DEFINE_ERROR(NegativePerturbation);
IVREACH_DEFINE_ERROR(DivisionByIntervalContainingZero);
IVREACH_DEFINE_ERROR(DomainError);
IVREACH_DEFINE_ERROR(NonFiniteValue);
IVREACH_DEFINE_ERROR(UnsupportedPrimitive);
IVREACH_DEFINE_ERROR(ShapeInferenceFailure);
IVREACH_DEFINE_ERROR(NonDifferentiablePrimitiveOnPath);
IVREACH_DEFINE_ERROR(CenterOutsideBox);
IVREACH_DEFINE_ERROR(InvalidOrdering);
IVREACH_DEFINE_ERROR(SignatureMismatch);
IVREACH_DEFINE_ERROR(UnorderedArguments);
IVREACH_DEFINE_ERROR(NonFiniteState);
IVREACH_DEFINE_ERROR(InvalidDivisions);
IVREACH_DEFINE_ERROR(SchemaError);
IVREACH_DEFINE_ERROR(DimensionMismatch);
IVREACH_DEFINE_ERROR(UnsupportedActivation);
IVREACH_DEFINE_ERROR(ConfigError);

#undef IVREACH_DEFINE_ERROR

// An empty intersection of sound enclosures indicates an internal
// soundness bug, not a user error.
class EmptyIntersection : public std::logic_error {
public:
    explicit EmptyIntersection(const std::string& what)
        : std::logic_error("EmptyIntersection: " + what) {}
};

}  // namespace ivreach

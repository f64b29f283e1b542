#pragma once

#include <stdexcept>
#include <string>

namespace rkmimo {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define RKMIMO_DEFINE_ERROR(name)                                             \
    class name : public Error {                                               \
    public:                                                                   \
        using Error::Error;                                                   \
    };

RKMIMO_DEFINE_ERROR(DimensionError)
RKMIMO_DEFINE_ERROR(FactorizationError)
RKMIMO_DEFINE_ERROR(ProbabilityError)
RKMIMO_DEFINE_ERROR(DomainError)
RKMIMO_DEFINE_ERROR(GeometryError)
RKMIMO_DEFINE_ERROR(CovarianceError)
RKMIMO_DEFINE_ERROR(UnsupportedError)
RKMIMO_DEFINE_ERROR(RegularizerError)
RKMIMO_DEFINE_ERROR(SelectionError)
RKMIMO_DEFINE_ERROR(StateError)
RKMIMO_DEFINE_ERROR(TraceError)
RKMIMO_DEFINE_ERROR(ConfigError)
RKMIMO_DEFINE_ERROR(ModelError)
RKMIMO_DEFINE_ERROR(FramingError)

#undef RKMIMO_DEFINE_ERROR

} // namespace rkmimo

#ifndef WDMVLC_ERROR_HPP
#define WDMVLC_ERROR_HPP

#include <stdexcept>
#include <string>

namespace wdmvlc {

/// Base class for every error raised by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Bad or missing input: config files, parameter files, data tables.
struct ConfigError : Error {
    using Error::Error;
};

/// A numerical routine could not produce a valid result.
struct NumericError : Error {
    using Error::Error;
};

/// Input outside the domain a model is valid on.
struct DomainError : Error {
    using Error::Error;
};

}  // namespace wdmvlc

#endif

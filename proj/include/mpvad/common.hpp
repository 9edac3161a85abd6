#pragma once

#include <stdexcept>
#include <string>

namespace mpvad {

// Error taxonomy used across the toolkit. Callers catch the base Error for
// "anything went wrong", tests pin the concrete type.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ValidationError : Error {
    using Error::Error;
};

struct NotFoundError : Error {
    using Error::Error;
};

struct DecodeError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

// Raised when a metric is undefined for the given inputs (e.g. AUC with a
// single class present).
struct UndefinedMetricError : Error {
    using Error::Error;
};

}  // namespace mpvad

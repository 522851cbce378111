#pragma once

#include <stdexcept>
#include <string>

namespace sfcnn {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad flags, bad config files, infeasible architectures. CLI exit code 1.
struct ConfigError : Error {
    using Error::Error;
};

// Malformed input data, shape mismatches, broken model files. CLI exit code 2.
struct DataError : Error {
    using Error::Error;
};

// Unreadable/unwritable paths. CLI exit code 2.
struct IoError : Error {
    using Error::Error;
};

}  // namespace sfcnn

#pragma once

#include <stdexcept>
#include <string>

namespace lac {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Wrong tensor/array dimensions or mismatched structures.
struct ShapeError : Error {
    using Error::Error;
};

// Argument outside its documented domain (t not in [0,1], sigma out of bounds, ...).
struct RangeError : Error {
    using Error::Error;
};

// Object in the wrong state for the requested operation.
struct StateError : Error {
    using Error::Error;
};

// Bad run configuration or malformed config file.
struct ConfigError : Error {
    using Error::Error;
};

// Missing/corrupt data files, unsupported containers, schema mismatches.
struct DataError : Error {
    using Error::Error;
};

// Non-finite losses/gradients and similar numerical breakdowns.
struct NumericalError : Error {
    using Error::Error;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw Error(msg);
}

inline void require_shape(bool cond, const std::string& msg) {
    if (!cond) throw ShapeError(msg);
}

inline void require_range(bool cond, const std::string& msg) {
    if (!cond) throw RangeError(msg);
}

inline void require_config(bool cond, const std::string& msg) {
    if (!cond) throw ConfigError(msg);
}

inline void require_data(bool cond, const std::string& msg) {
    if (!cond) throw DataError(msg);
}

}  // namespace lac

#pragma once

#include <stdexcept>
#include <string>

namespace transdarc {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// bad magic, version or encoding
struct FormatError : Error {
    using Error::Error;
};

// payload shorter than the header promises
struct LengthError : Error {
    using Error::Error;
};

// data violates a domain invariant
struct ValidationError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

// a configuration value is out of range; `field()` names the offending key
struct ConfigError : Error {
    ConfigError(std::string field, const std::string& what)
        : Error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}
    explicit ConfigError(const std::string& what) : ConfigError(std::string{}, what) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

}  // namespace transdarc

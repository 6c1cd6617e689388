#pragma once

#include <stdexcept>
#include <string>

namespace thermorom {

/// Shapes or sizes that do not conform to an operation's contract.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Values outside the admissible domain of a physical model (e.g. q outside (0, 2)).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Non-finite losses, gradients or states; diverged solvers.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed files: checkpoints, snapshot archives, configuration text.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Configuration values that parse but violate the schema. `path()` names the field.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string path, const std::string& what)
        : std::runtime_error(path + ": " + what), path_(std::move(path)) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

}  // namespace thermorom

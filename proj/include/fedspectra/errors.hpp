#pragma once

#include <stdexcept>
#include <string>

namespace fedspectra {

/// Tensor dimensions do not fit the operation.
class ShapeError : public std::invalid_argument {
public:
    explicit ShapeError(const std::string& what) : std::invalid_argument(what) {}
};

/// A scalar argument lies outside the operation's domain.
class DomainError : public std::domain_error {
public:
    explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

/// Two parameter sets differ in names, kinds or shapes.
class CongruenceError : public std::invalid_argument {
public:
    explicit CongruenceError(const std::string& what) : std::invalid_argument(what) {}
};

/// Invalid configuration. `line` is 0 when the error is not tied to a file line.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what, int line = 0)
        : std::runtime_error(what), line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

/// Malformed on-disk data (tensor files, dataset directories, checkpoints).
class IngestionError : public std::runtime_error {
public:
    explicit IngestionError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fedspectra

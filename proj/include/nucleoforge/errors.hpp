#pragma once

#include <stdexcept>
#include <string>

namespace nucleoforge {

/// Coarse failure category. The CLI maps each category onto an exit code.
enum class ErrorKind {
    kConfig,
    kFormat,
    kIo,
    kPlacementExhausted,
    kPrecondition,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorKind::kConfig, what) {}
};

class FormatError : public Error {
public:
    explicit FormatError(const std::string& what) : Error(ErrorKind::kFormat, what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorKind::kIo, what) {}
};

/// The rejection sampler ran out of attempts; the configuration is too dense.
class PlacementExhausted : public Error {
public:
    explicit PlacementExhausted(const std::string& what) : Error(ErrorKind::kPlacementExhausted, what) {}
};

class PreconditionError : public Error {
public:
    explicit PreconditionError(const std::string& what) : Error(ErrorKind::kPrecondition, what) {}
};

class EmptyContourSet : public PreconditionError {
public:
    EmptyContourSet() : PreconditionError("contour set is empty") {}
};

class NotAContourPixel : public PreconditionError {
public:
    explicit NotAContourPixel(const std::string& what) : PreconditionError(what) {}
};

class ScoreOutOfRange : public PreconditionError {
public:
    explicit ScoreOutOfRange(const std::string& what) : PreconditionError(what) {}
};

class DimensionMismatch : public PreconditionError {
public:
    explicit DimensionMismatch(const std::string& what) : PreconditionError(what) {}
};

class TooSmall : public PreconditionError {
public:
    explicit TooSmall(const std::string& what) : PreconditionError(what) {}
};

}  // namespace nucleoforge

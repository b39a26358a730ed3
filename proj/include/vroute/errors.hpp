#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace vroute {

/// Base of every error the toolkit raises. `kind()` is a stable snake_case tag
/// used in machine-readable error records.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(message), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

class InvalidInput : public Error {
public:
    explicit InvalidInput(const std::string& message) : Error("invalid_input", message) {}
};

class IntegrityError : public Error {
public:
    explicit IntegrityError(const std::string& message) : Error("integrity", message) {}
};

class RenderError : public Error {
public:
    RenderError(std::string key, const std::string& message)
        : Error("render", message), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

class ParseError : public Error {
public:
    ParseError(std::size_t offset, const std::string& message)
        : Error("parse", message + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class CoverageError : public Error {
public:
    CoverageError(std::vector<std::string> gaps, const std::string& message)
        : Error("coverage", message), gaps_(std::move(gaps)) {}
    const std::vector<std::string>& gaps() const noexcept { return gaps_; }

private:
    std::vector<std::string> gaps_;
};

class BackendError : public Error {
public:
    explicit BackendError(const std::string& message) : Error("backend", message) {}
};

class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& message) : Error("validation", message) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& message) : Error("io", message) {}
};

}  // namespace vroute

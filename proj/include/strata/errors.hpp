#pragma once

#include <stdexcept>
#include <string>

namespace strata {

// Input errors map to CLI exit code 2 / HTTP 422, numeric errors to 3 / 500.
enum class ErrorCategory { input, numeric };

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

class DomainError : public Error {
public:
    explicit DomainError(const std::string& what) : Error(ErrorCategory::input, what) {}
};

/// Configuration or request failed validation; `field()` names the offending entry.
class ValidationError : public Error {
public:
    ValidationError(std::string field, const std::string& what)
        : Error(ErrorCategory::input, field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class NotInStrategyError : public Error {
public:
    explicit NotInStrategyError(const std::string& what) : Error(ErrorCategory::input, what) {}
};

class GradabilityError : public Error {
public:
    explicit GradabilityError(const std::string& what) : Error(ErrorCategory::input, what) {}
};

class NoLocusError : public Error {
public:
    explicit NoLocusError(const std::string& what) : Error(ErrorCategory::input, what) {}
};

class ConvergenceError : public Error {
public:
    explicit ConvergenceError(const std::string& what) : Error(ErrorCategory::numeric, what) {}
};

class CalibrationError : public Error {
public:
    explicit CalibrationError(const std::string& what) : Error(ErrorCategory::numeric, what) {}
};

class NumericError : public Error {
public:
    explicit NumericError(const std::string& what) : Error(ErrorCategory::numeric, what) {}
};

} // namespace strata

#pragma once

#include <stdexcept>
#include <string>

namespace bikevol {

// Every engine failure derives from Error; the CLI maps the category to an exit code.
enum class ErrorCategory { Config, Data, Runtime, Precondition };

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& message)
        : std::runtime_error(message), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& message) : Error(ErrorCategory::Config, message) {}
};

class DataError : public Error {
public:
    explicit DataError(const std::string& message) : Error(ErrorCategory::Data, message) {}
};

class ComputeError : public Error {
public:
    explicit ComputeError(const std::string& message) : Error(ErrorCategory::Runtime, message) {}
};

class PreconditionError : public Error {
public:
    explicit PreconditionError(const std::string& message)
        : Error(ErrorCategory::Precondition, message) {}
};

const char* category_name(ErrorCategory category) noexcept;

}  // namespace bikevol

#pragma once

#include <stdexcept>
#include <string>

namespace btlab {

// Precondition / parameter failures (maps to BTLAB_ERROR_VALIDATION).
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// File / serialization failures (maps to BTLAB_ERROR_IO).
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numeric failures during training or evaluation (maps to BTLAB_ERROR_RUNTIME).
class TrainingError : public std::runtime_error {
public:
    explicit TrainingError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace btlab

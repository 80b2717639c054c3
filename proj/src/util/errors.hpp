#pragma once

#include <stdexcept>
#include <string>

namespace forager {

// Bad configuration values or config-file schema violations.
struct config_error : std::runtime_error {
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

// API misuse: caller violated a documented precondition.
struct usage_error : std::logic_error {
    explicit usage_error(const std::string& msg) : std::logic_error(msg) {}
};

// Malformed binary input (dataset files, logs, checkpoints).
struct format_error : std::runtime_error {
    explicit format_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite losses/gradients or other unrecoverable training faults.
struct training_error : std::runtime_error {
    explicit training_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace forager

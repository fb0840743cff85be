#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace edgeloc {

// Error categories map 1:1 onto CLI exit codes so failures stay
// machine-distinguishable end to end.
enum class ErrorCategory {
    internal = 1,  // unexpected state
    usage    = 2,  // bad flags / bad arguments
    io       = 3,  // missing or unreadable file
    format   = 4,  // undecodable file, bad magic, version mismatch
    mismatch = 5,  // provenance hash mismatch between artifacts
    numeric  = 6,  // divergence, non-finite values
};

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, std::string message)
        : std::runtime_error(std::move(message)), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }
    int exit_code() const noexcept { return static_cast<int>(category_); }

private:
    ErrorCategory category_;
};

[[noreturn]] inline void fail(ErrorCategory category, const std::string& message) {
    throw Error(category, message);
}

}  // namespace edgeloc

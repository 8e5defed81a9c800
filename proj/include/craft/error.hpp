#pragma once

#include <stdexcept>
#include <string>

namespace craft {

// Error categories map 1:1 onto CLI exit codes.
enum class ErrorKind {
    generic = 1,
    missing_file = 2,
    config = 3,
    checkpoint_version = 4,
    data_validation = 5,
    numeric = 6,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}

    ErrorKind kind() const { return kind_; }
    int exit_code() const { return static_cast<int>(kind_); }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) {
    throw Error(kind, msg);
}

}  // namespace craft

#pragma once

#include <stdexcept>
#include <string>

namespace longtail {

// Categories map one-to-one onto CLI exit codes and C API status codes.
enum class ErrorKind {
    usage = 1,    // bad arguments or configuration
    data = 2,     // malformed or inconsistent input files
    backend = 3,  // generation / answering / embedding service failures
    not_found = 4,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace longtail

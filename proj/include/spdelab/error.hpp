#pragma once

#include <stdexcept>
#include <string>

namespace spde {

enum class ErrorKind { validation, numerical };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(const std::string& what) { throw Error(ErrorKind::validation, what); }
[[noreturn]] inline void fail_numerical(const std::string& what) { throw Error(ErrorKind::numerical, what); }

inline void require(bool cond, const std::string& what) {
    if (!cond) fail(what);
}

}  // namespace spde

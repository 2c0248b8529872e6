#pragma once

#include <stdexcept>
#include <string>

namespace magic {

enum class ErrorKind {
    Data,       // malformed or invalid input data
    Numerical,  // factorization / convergence failure
    Config,     // invalid options or configuration keys
    Guard,      // size guards (enumeration, plan size)
    Exclusions, // too many failed Monte Carlo replications
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& module, const std::string& what)
        : std::runtime_error(module + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline Error data_error(const std::string& module, const std::string& what) {
    return Error(ErrorKind::Data, module, what);
}
inline Error numerical_error(const std::string& module, const std::string& what) {
    return Error(ErrorKind::Numerical, module, what);
}
inline Error config_error(const std::string& module, const std::string& what) {
    return Error(ErrorKind::Config, module, what);
}
inline Error guard_error(const std::string& module, const std::string& what) {
    return Error(ErrorKind::Guard, module, what);
}

}  // namespace magic

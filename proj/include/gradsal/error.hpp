#pragma once

#include <stdexcept>
#include <string>

namespace gradsal {

// Exit codes used by the command line tool.
enum class ExitCode : int {
    Ok = 0,
    Usage = 1,
    Data = 2,
    Numerical = 3,
};

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
    virtual ExitCode code() const noexcept { return ExitCode::Data; }
};

// Bad arguments, malformed configuration, unknown keys.
class UsageError : public Error {
public:
    using Error::Error;
    ExitCode code() const noexcept override { return ExitCode::Usage; }
};

// Shape mismatches, unreadable or corrupt files, empty datasets.
class DataError : public Error {
public:
    using Error::Error;
    ExitCode code() const noexcept override { return ExitCode::Data; }
};

// Non-finite values, diverging training.
class NumericalError : public Error {
public:
    using Error::Error;
    ExitCode code() const noexcept override { return ExitCode::Numerical; }
};

}  // namespace gradsal

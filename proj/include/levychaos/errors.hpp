#pragma once

#include <stdexcept>
#include <string>

namespace levychaos {

// Exit codes shared by the CLI and the acceptance runner.
enum class ExitCode : int {
    pass = 0,
    tolerance_failure = 2,
    gate_rejection = 3,
    capacity = 4,
    numerical = 5,
};

class Error : public std::runtime_error {
public:
    Error(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    [[nodiscard]] ExitCode code() const noexcept { return code_; }

private:
    ExitCode code_;
};

// Invalid argument values. Reported with the tolerance-failure exit code
// by the CLI since they never come from a successful run.
class ParameterError : public Error {
public:
    explicit ParameterError(const std::string& what)
        : Error(ExitCode::tolerance_failure, "parameter error: " + what) {}
};

class CapacityError : public Error {
public:
    explicit CapacityError(const std::string& what)
        : Error(ExitCode::capacity, "capacity error: " + what) {}
};

class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what)
        : Error(ExitCode::numerical, "numerical error: " + what) {}
};

class GateError : public Error {
public:
    explicit GateError(const std::string& what)
        : Error(ExitCode::gate_rejection, "gate rejection: " + what) {}
};

}  // namespace levychaos

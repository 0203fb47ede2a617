#pragma once

#include <stdexcept>
#include <string>

namespace seqcls {

// Error taxonomy maps onto CLI exit codes (see exit_code_for).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape/contract violations inside the numerics and model layers.
struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ContractError : std::runtime_error {
    explicit ContractError(const std::string& msg) : std::runtime_error(msg) {}
};

// Training diverged (NaN loss); carries seed and epoch in the message.
struct TrainError : std::runtime_error {
    explicit TrainError(const std::string& msg) : std::runtime_error(msg) {}
};

enum ExitCode {
    kExitOk = 0,
    kExitConfigError = 2,
    kExitDataError = 3,
    kExitTrainError = 4,
    kExitInternalError = 5,
};

} // namespace seqcls

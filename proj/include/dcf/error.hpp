#pragma once

#include <stdexcept>
#include <string>

namespace dcf {

// Exit codes used by the CLI driver.
constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitTraining = 3;

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed inputs, unreadable files, shape/contract violations in data.
struct DataError : Error {
    explicit DataError(const std::string& msg) : Error(msg) {}
};

// Optimization blew up, sampler failed to produce finite state, etc.
struct TrainingError : Error {
    explicit TrainingError(const std::string& msg) : Error(msg) {}
};

}  // namespace dcf

#pragma once

#include <stdexcept>

namespace wafl {

// An argument or configuration value violates an operation's contract.
struct InputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A binary or text file failed to parse.
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace wafl

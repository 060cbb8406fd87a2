// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace mext {

// File-system / format failures. The CLI maps these to exit code 2.
struct io_error : std::runtime_error {
    explicit io_error(const std::string &msg) : std::runtime_error(msg) {}
};

// Non-finite loss or other numerical breakdown during training. The CLI maps
// these to exit code 3; the message carries the diagnostic dump.
struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string &msg) : std::runtime_error(msg) {}
};

} // namespace mext

#pragma once

#include <stdexcept>
#include <string>

namespace bed {

// Error taxonomy mirrored by the CLI exit codes: IoError -> 3,
// DataError -> 4, NumericError -> 5. Anything else exits 1.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace bed

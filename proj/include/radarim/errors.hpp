#pragma once

// Error categories shared by the library and the CLI. The CLI maps them to
// process exit codes: usage 1, data 2, numerical 3 (0 is success).

#include <stdexcept>
#include <string>

namespace radarim {

// Bad invocation: unknown flags, malformed config, missing required args.
struct UsageError : std::runtime_error {
  explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

// Broken or missing input data: unreadable files, schema violations,
// inconsistent manifests.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Training or evaluation produced non-finite values.
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& msg)
      : std::runtime_error(msg) {}
};

}  // namespace radarim

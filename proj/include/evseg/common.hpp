#pragma once

#include <bit>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace evseg {

static_assert(std::endian::native == std::endian::little,
              "on-disk formats are little-endian and written natively");

// Process exit codes used by the CLI.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitNumeric = 3,
};

// Malformed or inconsistent input data (files, streams, datasets).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure during training or verification (non-finite loss,
// failed gradient check, counter overflow).
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace evseg

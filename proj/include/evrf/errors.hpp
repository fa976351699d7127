#pragma once

#include <stdexcept>
#include <string>

namespace evrf {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Bad arguments or incompatible shapes passed to an API.
struct ArgumentError : Error {
  using Error::Error;
};

/// Malformed input data: corrupt files, unsorted streams, out-of-bounds coordinates.
struct FormatError : Error {
  using Error::Error;
};

/// A search produced no result (e.g. no synchronization peak).
struct NotFoundError : Error {
  using Error::Error;
};

/// Non-finite values where finite ones are required; training aborts on these.
struct NumericError : Error {
  using Error::Error;
};

}  // namespace evrf

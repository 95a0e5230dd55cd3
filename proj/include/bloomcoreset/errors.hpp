#ifndef BLOOMCORESET_ERRORS_HPP
#define BLOOMCORESET_ERRORS_HPP

#include <stdexcept>

namespace bloomcoreset {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Bad magic bytes, unsupported version, or malformed container.
struct FormatError : Error {
  using Error::Error;
};

/// Payload shorter than the header promises.
struct TruncationError : Error {
  using Error::Error;
};

/// Invalid values in otherwise well-formed data (NaN/Inf, zero rows, ...).
struct DataError : Error {
  using Error::Error;
};

/// Underlying I/O failure (open, read, write).
struct IoError : Error {
  using Error::Error;
};

/// Embedding width does not match what the consumer was configured for.
struct DimError : Error {
  using Error::Error;
};

/// An operation that needs at least one row got an empty matrix.
struct EmptyInputError : Error {
  using Error::Error;
};

/// Membership screening admitted nothing; there is no pool to refine.
struct EmptyCandidateError : Error {
  using Error::Error;
};

}  // namespace bloomcoreset

#endif
